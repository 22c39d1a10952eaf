#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "drivepred/seqmodel/config.hpp"
#include "drivepred/seqmodel/mixture.hpp"
#include "drivepred/seqmodel/params.hpp"

namespace drivepred::seqmodel {

// Columns are samples.
struct Batch {
  std::vector<Eigen::MatrixXd> inputs;  // encoder_length entries of channels x B, normalized
  Eigen::RowVectorXd anchor;            // last observed TV velocity, m/s
  Eigen::MatrixXd context;              // context_dim x B, empty without context
  Eigen::MatrixXd target;               // decoder_length x B future velocity, m/s

  int size() const { return static_cast<int>(anchor.size()); }
};

// Per decoder step, components x B.
struct BatchOutput {
  std::vector<Eigen::MatrixXd> pi;
  std::vector<Eigen::MatrixXd> mu;
  std::vector<Eigen::MatrixXd> sigma;
};

struct Encoding {
  Eigen::MatrixXd ev;  // encoder_length x hidden, EV at each step
  Eigen::VectorXd h;   // final top-layer state
  Eigen::VectorXd c;
};

class Network {
 public:
  explicit Network(const ModelConfig& config);
  Network(const ModelConfig& config, Params params);

  const ModelConfig& config() const { return config_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  BatchOutput forward(const Batch& batch) const;
  std::vector<PredictedDistribution> predict(const Batch& batch) const;

  // NLL (MSE over all scalars for LSTM-det). Writes gradients into grad when
  // non-null. A non-null dropout_rng switches on training-mode dropout.
  double loss(const Batch& batch, Params* grad = nullptr, std::mt19937_64* dropout_rng = nullptr) const;

  // Single-sample pieces of the forward pass.
  Encoding encode(const Eigen::MatrixXd& observation) const;  // encoder_length x channels
  Eigen::VectorXd build_context(const Eigen::VectorXd& ev_final, const Eigen::VectorXd& behavior) const;
  PredictedDistribution decode(const Eigen::VectorXd& r, const Eigen::VectorXd& h0, const Eigen::VectorXd& c0,
                               double anchor) const;
  HeadParams head() const;

 private:
  struct Tape;
  void check_batch(const Batch& batch, bool need_target) const;
  void run(const Batch& batch, std::mt19937_64* dropout_rng, Tape& tape) const;

  ModelConfig config_;
  Params params_;
};

// Stacks per-sample arrays into a batch. observations are encoder_length x channels.
Batch make_batch(const std::vector<Eigen::MatrixXd>& observations, const std::vector<double>& anchors,
                 const std::vector<Eigen::VectorXd>& contexts, const std::vector<std::vector<double>>& targets);

}  // namespace drivepred::seqmodel
