#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace drivepred::seqmodel {

// One future step: weights, means (m/s) and std-devs (m/s).
struct MixtureParams {
  Eigen::VectorXd pi;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

struct PredictedDistribution {
  std::vector<MixtureParams> steps;
};

struct HeadParams {
  Eigen::MatrixXd pi_w;
  Eigen::VectorXd pi_b;
  Eigen::MatrixXd mu_w;
  Eigen::VectorXd mu_b;
  Eigen::MatrixXd sg_w;
  Eigen::VectorXd sg_b;
};

// pi = softmax(affine), mu = offset + affine, sigma = exp(affine) + floor.
MixtureParams mdn_head(const Eigen::VectorXd& z, const HeadParams& head, double mu_offset = 0.0);

// Log-density of y under one step's mixture, log-sum-exp over components.
double log_density(const MixtureParams& m, double y);

// -(1/N) sum over samples of sum over steps of log p(y). Throws NumericError
// naming the step when the result is not finite, ShapeError on length mismatch.
double nll(const std::vector<PredictedDistribution>& predictions, const std::vector<std::vector<double>>& targets);
double nll(const PredictedDistribution& prediction, const std::vector<double>& target);

// n traces of length t_p, steps drawn independently.
Eigen::MatrixXd sample(const PredictedDistribution& prediction, int n, std::uint64_t seed);

std::vector<double> mean_trace(const PredictedDistribution& prediction);
// Positions after each trace step by cumulative trapezoid, starting from the
// last observed position x0 and velocity v0. Entry k covers (k+1)*dt seconds.
std::vector<double> integrate_position(const std::vector<double>& trace, double v0, double x0 = 0.0,
                                       double dt = 0.1);

double mixture_cdf(const MixtureParams& m, double y);
// Bisection on the mixture CDF to tolerance tol.
double mixture_quantile(const MixtureParams& m, double p, double tol = 1e-6);

}  // namespace drivepred::seqmodel
