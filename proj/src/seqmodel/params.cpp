#include "drivepred/seqmodel/params.hpp"

#include <cmath>

#include "drivepred/common/rng.hpp"

namespace drivepred::seqmodel {

namespace {

LstmParams lstm_zeros(int in, int h) {
  return {Eigen::MatrixXd::Zero(4 * h, in), Eigen::MatrixXd::Zero(4 * h, h), Eigen::VectorXd::Zero(4 * h)};
}

template <class M>
void fill_uniform(M& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
}

}  // namespace

Params Params::zeros(const ModelConfig& c) {
  c.validate();
  const int h = c.hidden;
  const int r = c.trajectory_code_width();
  const int k = c.components();
  Params p;
  p.in_w = Eigen::MatrixXd::Zero(h, c.input_channels);
  p.in_b = Eigen::VectorXd::Zero(h);
  for (int l = 0; l < c.layers; ++l) p.encoder.push_back(lstm_zeros(h, h));
  p.ev_w = Eigen::MatrixXd::Zero(h, h);
  p.ev_b = Eigen::VectorXd::Zero(h);
  if (has_context(c.variant)) {
    p.ed_w = Eigen::MatrixXd::Zero(h, c.context_dim());
    p.ed_b = Eigen::VectorXd::Zero(h);
  }
  // Decoder input is [q_prev; R]; q has width h.
  p.decoder = lstm_zeros(h + r, h);
  p.q_w = Eigen::MatrixXd::Zero(h, h + h + r);
  p.q_b = Eigen::VectorXd::Zero(h);
  p.z_w = Eigen::MatrixXd::Zero(h, h);
  p.z_b = Eigen::VectorXd::Zero(h);
  if (has_mixture(c.variant)) {
    p.pi_w = Eigen::MatrixXd::Zero(k, h);
    p.pi_b = Eigen::VectorXd::Zero(k);
    p.sg_w = Eigen::MatrixXd::Zero(k, h);
    p.sg_b = Eigen::VectorXd::Zero(k);
  }
  p.mu_w = Eigen::MatrixXd::Zero(k, h);
  p.mu_b = Eigen::VectorXd::Zero(k);
  return p;
}

Params Params::init(const ModelConfig& c, std::uint64_t seed) {
  Params p = zeros(c);
  auto rng = derived_rng(seed, {0x9a7a});
  auto affine = [&](Eigen::MatrixXd& w, Eigen::VectorXd& b) {
    if (w.size() == 0) return;
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    fill_uniform(w, bound, rng);
    fill_uniform(b, bound, rng);
  };
  auto lstm = [&](LstmParams& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.wh.cols()));
    fill_uniform(l.wx, bound, rng);
    fill_uniform(l.wh, bound, rng);
    fill_uniform(l.b, bound, rng);
    const Eigen::Index h = l.wh.cols();
    l.b.segment(h, h).array() += 1.0;
  };
  affine(p.in_w, p.in_b);
  for (auto& l : p.encoder) lstm(l);
  affine(p.ev_w, p.ev_b);
  affine(p.ed_w, p.ed_b);
  lstm(p.decoder);
  affine(p.q_w, p.q_b);
  affine(p.z_w, p.z_b);
  affine(p.pi_w, p.pi_b);
  affine(p.sg_w, p.sg_b);
  // Means start near the anchor velocity, spread a little so components differ.
  affine(p.mu_w, p.mu_b);
  p.mu_w *= 0.1;
  return p;
}

std::vector<ParamRef> Params::refs() {
  std::vector<ParamRef> out;
  auto add = [&](const std::string& name, auto& m) {
    if (m.size() == 0) return;
    out.push_back({name, m.data(), m.rows(), m.cols()});
  };
  add("in_w", in_w);
  add("in_b", in_b);
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    const std::string pre = "encoder" + std::to_string(l) + ".";
    add(pre + "wx", encoder[l].wx);
    add(pre + "wh", encoder[l].wh);
    add(pre + "b", encoder[l].b);
  }
  add("ev_w", ev_w);
  add("ev_b", ev_b);
  add("ed_w", ed_w);
  add("ed_b", ed_b);
  add("decoder.wx", decoder.wx);
  add("decoder.wh", decoder.wh);
  add("decoder.b", decoder.b);
  add("q_w", q_w);
  add("q_b", q_b);
  add("z_w", z_w);
  add("z_b", z_b);
  add("pi_w", pi_w);
  add("pi_b", pi_b);
  add("mu_w", mu_w);
  add("mu_b", mu_b);
  add("sg_w", sg_w);
  add("sg_b", sg_b);
  return out;
}

std::size_t Params::count() const {
  std::size_t n = 0;
  for (const auto& r : const_cast<Params*>(this)->refs()) n += static_cast<std::size_t>(r.size());
  return n;
}

void Params::set_zero() {
  for (auto& r : refs()) std::fill(r.data, r.data + r.size(), 0.0);
}

bool Params::all_finite() const {
  for (const auto& r : const_cast<Params*>(this)->refs()) {
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!std::isfinite(r.data[i])) return false;
    }
  }
  return true;
}

}  // namespace drivepred::seqmodel
