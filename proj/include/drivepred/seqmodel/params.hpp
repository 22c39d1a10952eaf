#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "drivepred/seqmodel/config.hpp"

namespace drivepred::seqmodel {

struct LstmParams {
  Eigen::MatrixXd wx;  // 4H x in, gate blocks i, f, g, o
  Eigen::MatrixXd wh;  // 4H x H
  Eigen::VectorXd b;   // 4H
};

// Flat view of one parameter tensor.
struct ParamRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

struct Params {
  Eigen::MatrixXd in_w;  // input embedding FC
  Eigen::VectorXd in_b;
  std::vector<LstmParams> encoder;
  Eigen::MatrixXd ev_w;  // encoder vector FC
  Eigen::VectorXd ev_b;
  Eigen::MatrixXd ed_w;  // behavior embedding, empty without context
  Eigen::VectorXd ed_b;
  LstmParams decoder;
  Eigen::MatrixXd q_w;  // output combination over [h_d; q_prev; R]
  Eigen::VectorXd q_b;
  Eigen::MatrixXd z_w;
  Eigen::VectorXd z_b;
  Eigen::MatrixXd pi_w;  // mixture logits, empty for LSTM-det
  Eigen::VectorXd pi_b;
  Eigen::MatrixXd mu_w;
  Eigen::VectorXd mu_b;
  Eigen::MatrixXd sg_w;  // log-sigma, empty for LSTM-det
  Eigen::VectorXd sg_b;

  // Zero-valued tensors with the shapes fixed by config.
  static Params zeros(const ModelConfig& config);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), forget-gate bias 1.
  static Params init(const ModelConfig& config, std::uint64_t seed);

  // Every tensor in a fixed order. Empty tensors are skipped.
  std::vector<ParamRef> refs();
  std::size_t count() const;

  void set_zero();
  bool all_finite() const;
};

}  // namespace drivepred::seqmodel
