#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace drivepred::preference {

struct ForestOptions {
  int trees = 100;
  int max_features = 0;  // 0 selects floor(sqrt(p))
  int min_samples_split = 2;
  std::uint64_t seed = 1;
};

// Random forest classifier on Gini impurity with bootstrap resampling.
class RandomForest {
 public:
  void fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, const ForestOptions& options = {});
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  // Mean decrease in impurity, per tree normalized, averaged, then
  // normalized to sum 1.
  const std::vector<double>& importances() const { return importance_; }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
  };
  std::vector<std::vector<Node>> trees_;
  std::vector<double> importance_;
  int classes_ = 0;
};

struct ImportanceRanking {
  std::vector<double> importance;  // per column
  std::vector<int> order;          // columns by descending importance
};

// Throws DegenerateError when labels hold fewer than two classes.
ImportanceRanking rank_importance(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                  const ForestOptions& options = {});

}  // namespace drivepred::preference
