#include "drivepred/seqmodel/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"
#include "drivepred/seqmodel/config.hpp"

namespace drivepred::seqmodel {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

MixtureParams mdn_head(const Eigen::VectorXd& z, const HeadParams& head, double mu_offset) {
  MixtureParams m;
  Eigen::VectorXd logits = head.pi_w * z + head.pi_b;
  logits.array() -= logits.maxCoeff();
  m.pi = logits.array().exp();
  m.pi /= m.pi.sum();
  m.mu = (head.mu_w * z + head.mu_b).array() + mu_offset;
  m.sigma = (head.sg_w * z + head.sg_b).array().exp() + kSigmaFloor;
  return m;
}

double log_density(const MixtureParams& m, double y) {
  const Eigen::Index c = m.pi.size();
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd terms(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    const double u = (y - m.mu[k]) / m.sigma[k];
    terms[k] = std::log(m.pi[k]) - kHalfLog2Pi - std::log(m.sigma[k]) - 0.5 * u * u;
    best = std::max(best, terms[k]);
  }
  if (!std::isfinite(best)) return best;
  return best + std::log((terms.array() - best).exp().sum());
}

double nll(const PredictedDistribution& prediction, const std::vector<double>& target) {
  if (prediction.steps.size() != target.size()) throw ShapeError("nll: target length differs from prediction");
  double total = 0.0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    const double lp = log_density(prediction.steps[t], target[t]);
    if (!std::isfinite(lp)) throw NumericError(t, "non-finite log-likelihood");
    total -= lp;
  }
  return total;
}

double nll(const std::vector<PredictedDistribution>& predictions, const std::vector<std::vector<double>>& targets) {
  if (predictions.size() != targets.size() || predictions.empty()) throw ShapeError("nll: sample counts differ");
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) total += nll(predictions[i], targets[i]);
  return total / static_cast<double>(predictions.size());
}

Eigen::MatrixXd sample(const PredictedDistribution& prediction, int n, std::uint64_t seed) {
  const auto tp = static_cast<Eigen::Index>(prediction.steps.size());
  Eigen::MatrixXd out(n, tp);
  auto rng = derived_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    for (Eigen::Index t = 0; t < tp; ++t) {
      const auto& m = prediction.steps[t];
      const double r = u(rng);
      Eigen::Index c = 0;
      double acc = m.pi[0];
      while (r >= acc && c + 1 < m.pi.size()) acc += m.pi[++c];
      out(j, t) = m.mu[c] + m.sigma[c] * g(rng);
    }
  }
  return out;
}

std::vector<double> mean_trace(const PredictedDistribution& prediction) {
  std::vector<double> out;
  out.reserve(prediction.steps.size());
  for (const auto& m : prediction.steps) out.push_back(m.pi.dot(m.mu));
  return out;
}

std::vector<double> integrate_position(const std::vector<double>& trace, double v0, double x0, double dt) {
  std::vector<double> out(trace.size());
  double x = x0;
  double prev = v0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    x += 0.5 * (prev + trace[k]) * dt;
    out[k] = x;
    prev = trace[k];
  }
  return out;
}

double mixture_cdf(const MixtureParams& m, double y) {
  double p = 0.0;
  for (Eigen::Index c = 0; c < m.pi.size(); ++c) {
    p += m.pi[c] * 0.5 * std::erfc(-(y - m.mu[c]) / (m.sigma[c] * std::numbers::sqrt2));
  }
  return p;
}

double mixture_quantile(const MixtureParams& m, double p, double tol) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
  double lo = (m.mu.array() - 12.0 * m.sigma.array()).minCoeff();
  double hi = (m.mu.array() + 12.0 * m.sigma.array()).maxCoeff();
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mixture_cdf(m, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace drivepred::seqmodel
