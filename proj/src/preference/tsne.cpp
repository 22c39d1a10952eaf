#include "drivepred/preference/tsne.hpp"

#include <cmath>
#include <limits>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"

namespace drivepred::preference {

Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd < 1e-12) {
      out.col(c).setZero();
    } else {
      out.col(c) = (x.col(c).array() - mean) / sd;
    }
  }
  return out;
}

namespace {

// Row-conditional affinities with per-row precision found by bisection so
// that the entropy matches log(perplexity).
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& d2, double perplexity) {
  const Eigen::Index n = d2.rows();
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100; ++iter) {
      double min_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) min_d = std::min(min_d, d2(i, j));
      }
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row(j) = j == i ? 0.0 : std::exp(-beta * (d2(i, j) - min_d));
        sum += row(j);
        weighted += row(j) * (d2(i, j) - min_d);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) = row.transpose();
  }
  return p;
}

}  // namespace

TsneResult reduce_tsne(const Eigen::MatrixXd& x, const TsneOptions& options) {
  const Eigen::Index n = x.rows();
  if (n < 2 || static_cast<double>(n) < 3.0 * options.perplexity) {
    throw SizeError("t-SNE needs at least 3 * perplexity rows, got " + std::to_string(n));
  }
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * x * x.transpose()).colwise() + sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);

  Eigen::MatrixXd p = conditional_affinities(d2, options.perplexity);
  p = ((p + p.transpose()) / (2.0 * static_cast<double>(n))).eval();
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  auto rng = derived_rng(options.seed, {0x75e});
  std::normal_distribution<double> init(0.0, 1e-4);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = init(rng);
    y(i, 1) = init(rng);
  }

  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n);
  Eigen::MatrixXd grad(n, 2);
  TsneResult result;
  double p_log_p = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) p_log_p += p(i, j) * std::log(p(i, j));
    }
  }
  const int kl_from = options.iterations - options.kl_tail;

  for (int it = 0; it < options.iterations; ++it) {
    const bool exaggerate = it < options.exaggeration_iterations;
    const double factor = exaggerate ? options.early_exaggeration : 1.0;
    const double momentum = exaggerate ? 0.5 : 0.8;

    double z = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      num(j, j) = 0.0;
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double dx = y(i, 0) - y(j, 0);
        const double dy = y(i, 1) - y(j, 1);
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num(i, j) = v;
        num(j, i) = v;
        z += 2.0 * v;
      }
    }

    grad.setZero();
    const bool track_kl = it >= kl_from;
    double cross = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) continue;
        const double q = num(i, j) / z;
        const double mult = (factor * p(i, j) - q) * num(i, j);
        grad(i, 0) += mult * (y(i, 0) - y(j, 0));
        grad(i, 1) += mult * (y(i, 1) - y(j, 1));
        if (track_kl) cross += p(i, j) * std::log(std::max(q, 1e-300));
      }
    }
    grad *= 4.0;

    for (Eigen::Index i = 0; i < n; ++i) {
      for (int d = 0; d < 2; ++d) {
        const bool same_sign = (grad(i, d) > 0.0) == (update(i, d) > 0.0);
        gains(i, d) = same_sign ? std::max(gains(i, d) * 0.8, 0.01) : gains(i, d) + 0.2;
        update(i, d) = momentum * update(i, d) - options.learning_rate * gains(i, d) * grad(i, d);
        y(i, d) += update(i, d);
      }
    }
    y.rowwise() -= y.colwise().mean();
    // KL of the configuration the gradient was evaluated at.
    if (track_kl) result.kl.push_back(p_log_p - cross);
  }
  result.embedding = y;
  return result;
}

}  // namespace drivepred::preference
