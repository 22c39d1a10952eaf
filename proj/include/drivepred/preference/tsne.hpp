#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace drivepred::preference {

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double learning_rate = 200.0;
  int kl_tail = 50;  // trailing iterations whose KL is recorded
  std::uint64_t seed = 1;
};

struct TsneResult {
  Eigen::MatrixXd embedding;  // n x 2
  std::vector<double> kl;     // KL(P || Q) over the last kl_tail iterations
};

// Exact t-SNE. Rows are samples. Throws SizeError when rows < 3 * perplexity.
TsneResult reduce_tsne(const Eigen::MatrixXd& x, const TsneOptions& options = {});

// Column z-score; constant columns become zero.
Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& x);

}  // namespace drivepred::preference
