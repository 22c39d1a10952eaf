#include "drivepred/seqmodel/network.hpp"

#include <cmath>
#include <numbers>

#include "drivepred/common/errors.hpp"

namespace drivepred::seqmodel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

struct LstmStep {
  MatrixXd i, f, g, o, c, tc, h;
};

LstmStep lstm_forward(const LstmParams& p, const MatrixXd& x, const MatrixXd& h_prev, const MatrixXd& c_prev) {
  const Eigen::Index h = p.wh.cols();
  MatrixXd a = p.wx * x;
  a.noalias() += p.wh * h_prev;
  a.colwise() += p.b;
  LstmStep s;
  s.i = sigmoid(a.topRows(h));
  s.f = sigmoid(a.middleRows(h, h));
  s.g = a.middleRows(2 * h, h).array().tanh();
  s.o = sigmoid(a.bottomRows(h));
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tc = s.c.array().tanh();
  s.h = s.o.cwiseProduct(s.tc);
  return s;
}

// dh and dc are the gradients reaching h and c of this step. Returns the
// gradient w.r.t. x and overwrites dh/dc with the gradients for the previous
// step's state.
MatrixXd lstm_backward(const LstmParams& p, LstmParams& gp, const LstmStep& s, const MatrixXd& x,
                       const MatrixXd& h_prev, const MatrixXd& c_prev, MatrixXd& dh, MatrixXd& dc) {
  const Eigen::Index h = p.wh.cols();
  const Eigen::Index b = x.cols();
  dc += (dh.array() * s.o.array() * (1.0 - s.tc.array().square())).matrix();
  MatrixXd da(4 * h, b);
  da.topRows(h) = (dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
  da.middleRows(h, h) = (dc.array() * c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
  da.middleRows(2 * h, h) = (dc.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
  da.bottomRows(h) = (dh.array() * s.tc.array() * s.o.array() * (1.0 - s.o.array())).matrix();
  gp.wx.noalias() += da * x.transpose();
  gp.wh.noalias() += da * h_prev.transpose();
  gp.b += da.rowwise().sum();
  MatrixXd dx = p.wx.transpose() * da;
  dh = p.wh.transpose() * da;
  dc = dc.cwiseProduct(s.f);
  return dx;
}

MatrixXd vstack(std::initializer_list<const MatrixXd*> parts) {
  Eigen::Index rows = 0;
  Eigen::Index cols = (*parts.begin())->cols();
  for (const auto* p : parts) rows += p->rows();
  MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const auto* p : parts) {
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

}  // namespace

struct Network::Tape {
  int b = 0;
  std::vector<MatrixXd> e;                     // embedded inputs
  std::vector<std::vector<MatrixXd>> layer_in;  // [layer][t], after dropout
  std::vector<std::vector<MatrixXd>> mask;      // [layer][t], empty when off
  std::vector<std::vector<LstmStep>> enc;       // [layer][t]
  MatrixXd ev, ed, r;
  std::vector<MatrixXd> dec_in;  // [q_prev; R]
  std::vector<LstmStep> dec;
  std::vector<MatrixXd> qv;  // [h_d; q_prev; R]
  std::vector<MatrixXd> q, z;
  std::vector<MatrixXd> pi, mu, sigma;
};

Network::Network(const ModelConfig& config) : Network(config, Params::init(config, config.seed)) {}

Network::Network(const ModelConfig& config, Params params) : config_(config), params_(std::move(params)) {
  config_.validate();
  Params shape = Params::zeros(config_);
  auto a = shape.refs();
  auto b = params_.refs();
  if (a.size() != b.size()) throw ShapeError("parameter set does not match model config");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].rows != b[i].rows || a[i].cols != b[i].cols) {
      throw ShapeError("parameter '" + b[i].name + "' has the wrong shape");
    }
  }
}

HeadParams Network::head() const {
  return {params_.pi_w, params_.pi_b, params_.mu_w, params_.mu_b, params_.sg_w, params_.sg_b};
}

void Network::check_batch(const Batch& batch, bool need_target) const {
  const int b = batch.size();
  if (b == 0) throw ShapeError("empty batch");
  if (static_cast<int>(batch.inputs.size()) != config_.encoder_length) {
    throw ShapeError("batch has " + std::to_string(batch.inputs.size()) + " input steps, model expects " +
                     std::to_string(config_.encoder_length));
  }
  for (const auto& x : batch.inputs) {
    if (x.rows() != config_.input_channels || x.cols() != b) throw ShapeError("input step has the wrong shape");
  }
  const int cd = config_.context_dim();
  if (cd == 0 && batch.context.size() != 0) {
    throw ConfigError(variant_name(config_.variant) + " takes no behavior input");
  }
  if (cd > 0 && (batch.context.rows() != cd || batch.context.cols() != b)) {
    throw ConfigError(variant_name(config_.variant) + " needs a behavior input of width " + std::to_string(cd));
  }
  if (need_target && (batch.target.rows() != config_.decoder_length || batch.target.cols() != b)) {
    throw ShapeError("target has the wrong shape");
  }
}

void Network::run(const Batch& batch, std::mt19937_64* dropout_rng, Tape& tape) const {
  const int b = batch.size();
  const int h = config_.hidden;
  const int tb = config_.encoder_length;
  const int layers = config_.layers;
  const auto& p = params_;
  tape.b = b;

  tape.e.resize(tb);
  for (int t = 0; t < tb; ++t) {
    tape.e[t] = p.in_w * batch.inputs[t];
    tape.e[t].colwise() += p.in_b;
  }

  const bool drop = dropout_rng != nullptr && config_.dropout > 0.0;
  const double keep = 1.0 - config_.dropout;
  std::bernoulli_distribution coin(keep);
  tape.layer_in.assign(layers, {});
  tape.mask.assign(layers, {});
  tape.enc.assign(layers, {});
  const MatrixXd zero = MatrixXd::Zero(h, b);
  for (int l = 0; l < layers; ++l) {
    tape.layer_in[l].resize(tb);
    tape.enc[l].resize(tb);
    if (drop && l > 0) tape.mask[l].resize(tb);
    for (int t = 0; t < tb; ++t) {
      if (l == 0) {
        tape.layer_in[l][t] = tape.e[t];
      } else if (drop) {
        MatrixXd m(h, b);
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = coin(*dropout_rng) ? 1.0 / keep : 0.0;
        tape.layer_in[l][t] = tape.enc[l - 1][t].h.cwiseProduct(m);
        tape.mask[l][t] = std::move(m);
      } else {
        tape.layer_in[l][t] = tape.enc[l - 1][t].h;
      }
      const MatrixXd& hp = t == 0 ? zero : tape.enc[l][t - 1].h;
      const MatrixXd& cp = t == 0 ? zero : tape.enc[l][t - 1].c;
      tape.enc[l][t] = lstm_forward(p.encoder[l], tape.layer_in[l][t], hp, cp);
    }
  }

  const LstmStep& top = tape.enc[layers - 1][tb - 1];
  tape.ev = p.ev_w * top.h;
  tape.ev.colwise() += p.ev_b;
  tape.ev = tape.ev.array().tanh();
  if (has_context(config_.variant)) {
    tape.ed = p.ed_w * batch.context;
    tape.ed.colwise() += p.ed_b;
    tape.r = vstack({&tape.ev, &tape.ed});
  } else {
    tape.r = tape.ev;
  }

  const int tp = config_.decoder_length;
  tape.dec_in.resize(tp);
  tape.dec.resize(tp);
  tape.qv.resize(tp);
  tape.q.resize(tp);
  tape.z.resize(tp);
  tape.pi.resize(tp);
  tape.mu.resize(tp);
  tape.sigma.resize(tp);
  const bool mixture = has_mixture(config_.variant);
  for (int t = 0; t < tp; ++t) {
    const MatrixXd& q_prev = t == 0 ? zero : tape.q[t - 1];
    const MatrixXd& hp = t == 0 ? top.h : tape.dec[t - 1].h;
    const MatrixXd& cp = t == 0 ? top.c : tape.dec[t - 1].c;
    tape.dec_in[t] = vstack({&q_prev, &tape.r});
    tape.dec[t] = lstm_forward(p.decoder, tape.dec_in[t], hp, cp);
    tape.qv[t] = vstack({&tape.dec[t].h, &q_prev, &tape.r});
    MatrixXd aq = p.q_w * tape.qv[t];
    aq.colwise() += p.q_b;
    tape.q[t] = sigmoid(aq);
    MatrixXd az = p.z_w * tape.q[t];
    az.colwise() += p.z_b;
    tape.z[t] = az.array().tanh();

    MatrixXd mu = p.mu_w * tape.z[t];
    mu.colwise() += p.mu_b;
    mu.rowwise() += batch.anchor;
    tape.mu[t] = std::move(mu);
    if (mixture) {
      MatrixXd logits = p.pi_w * tape.z[t];
      logits.colwise() += p.pi_b;
      logits.rowwise() -= logits.colwise().maxCoeff();
      MatrixXd e = logits.array().exp();
      e.array().rowwise() /= e.colwise().sum().array();
      tape.pi[t] = std::move(e);
      MatrixXd s = p.sg_w * tape.z[t];
      s.colwise() += p.sg_b;
      tape.sigma[t] = (s.array().exp() + kSigmaFloor).matrix();
    } else {
      tape.pi[t] = MatrixXd::Ones(1, b);
      tape.sigma[t] = MatrixXd::Constant(1, b, kSigmaFloor);
    }
  }
}

BatchOutput Network::forward(const Batch& batch) const {
  check_batch(batch, false);
  Tape tape;
  run(batch, nullptr, tape);
  return {std::move(tape.pi), std::move(tape.mu), std::move(tape.sigma)};
}

std::vector<PredictedDistribution> Network::predict(const Batch& batch) const {
  const auto out = forward(batch);
  std::vector<PredictedDistribution> preds(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    preds[i].steps.resize(out.pi.size());
    for (std::size_t t = 0; t < out.pi.size(); ++t) {
      preds[i].steps[t] = {out.pi[t].col(i), out.mu[t].col(i), out.sigma[t].col(i)};
    }
  }
  return preds;
}

double Network::loss(const Batch& batch, Params* grad, std::mt19937_64* dropout_rng) const {
  check_batch(batch, true);
  Tape tape;
  run(batch, dropout_rng, tape);
  const auto& p = params_;
  const int b = tape.b;
  const int h = config_.hidden;
  const int tp = config_.decoder_length;
  const int tb = config_.encoder_length;
  const int layers = config_.layers;
  const bool mixture = has_mixture(config_.variant);
  const double inv_b = 1.0 / b;

  // Loss and gradient w.r.t. z at every decoder step.
  double total = 0.0;
  std::vector<MatrixXd> dz(tp);
  if (grad != nullptr) {
    if (grad->encoder.size() != p.encoder.size()) *grad = Params::zeros(config_);
    grad->set_zero();
  }
  for (int t = 0; t < tp; ++t) {
    const auto& pi = tape.pi[t];
    const auto& mu = tape.mu[t];
    const auto& sg = tape.sigma[t];
    double step_loss = 0.0;
    if (mixture) {
      const Eigen::Index c = pi.rows();
      MatrixXd dlogit(c, b), dmu(c, b), ds(c, b);
      VectorXd terms(c);
      for (int s = 0; s < b; ++s) {
        const double y = batch.target(t, s);
        for (Eigen::Index k = 0; k < c; ++k) {
          const double u = (y - mu(k, s)) / sg(k, s);
          terms[k] = std::log(pi(k, s)) - kHalfLog2Pi - std::log(sg(k, s)) - 0.5 * u * u;
        }
        const double top = terms.maxCoeff();
        const double lse = top + std::log((terms.array() - top).exp().sum());
        step_loss -= lse;
        for (Eigen::Index k = 0; k < c; ++k) {
          const double gamma = std::exp(terms[k] - lse);
          const double sig = sg(k, s);
          const double d = y - mu(k, s);
          dlogit(k, s) = (pi(k, s) - gamma) * inv_b;
          dmu(k, s) = -gamma * d / (sig * sig) * inv_b;
          const double dsig = -gamma * (d * d / (sig * sig * sig) - 1.0 / sig) * inv_b;
          ds(k, s) = dsig * (sig - kSigmaFloor);
        }
      }
      step_loss *= inv_b;
      if (!std::isfinite(step_loss)) throw NumericError(static_cast<std::size_t>(t), "non-finite loss");
      if (grad != nullptr) {
        grad->pi_w.noalias() += dlogit * tape.z[t].transpose();
        grad->pi_b += dlogit.rowwise().sum();
        grad->mu_w.noalias() += dmu * tape.z[t].transpose();
        grad->mu_b += dmu.rowwise().sum();
        grad->sg_w.noalias() += ds * tape.z[t].transpose();
        grad->sg_b += ds.rowwise().sum();
        dz[t] = p.pi_w.transpose() * dlogit;
        dz[t].noalias() += p.mu_w.transpose() * dmu;
        dz[t].noalias() += p.sg_w.transpose() * ds;
      }
    } else {
      const double scale = 1.0 / (static_cast<double>(b) * tp);
      const Eigen::RowVectorXd err = mu.row(0) - batch.target.row(t);
      step_loss = err.squaredNorm() * scale;
      if (!std::isfinite(step_loss)) throw NumericError(static_cast<std::size_t>(t), "non-finite loss");
      if (grad != nullptr) {
        const MatrixXd dmu = 2.0 * scale * err;
        grad->mu_w.noalias() += dmu * tape.z[t].transpose();
        grad->mu_b += dmu.rowwise().sum();
        dz[t] = p.mu_w.transpose() * dmu;
      }
    }
    total += step_loss;
  }
  if (grad == nullptr) return total;

  // Decoder, last step first.
  const int rw = config_.trajectory_code_width();
  MatrixXd dr = MatrixXd::Zero(rw, b);
  MatrixXd dq_next = MatrixXd::Zero(h, b);
  MatrixXd dh = MatrixXd::Zero(h, b);
  MatrixXd dc = MatrixXd::Zero(h, b);
  const MatrixXd zero = MatrixXd::Zero(h, b);
  const LstmStep& top = tape.enc[layers - 1][tb - 1];
  for (int t = tp - 1; t >= 0; --t) {
    const MatrixXd daz = (dz[t].array() * (1.0 - tape.z[t].array().square())).matrix();
    grad->z_w.noalias() += daz * tape.q[t].transpose();
    grad->z_b += daz.rowwise().sum();
    MatrixXd dq = p.z_w.transpose() * daz + dq_next;
    const MatrixXd daq = (dq.array() * tape.q[t].array() * (1.0 - tape.q[t].array())).matrix();
    grad->q_w.noalias() += daq * tape.qv[t].transpose();
    grad->q_b += daq.rowwise().sum();
    const MatrixXd dv = p.q_w.transpose() * daq;
    dh += dv.topRows(h);
    MatrixXd dq_prev = dv.middleRows(h, h);
    dr += dv.bottomRows(rw);

    const MatrixXd& hp = t == 0 ? top.h : tape.dec[t - 1].h;
    const MatrixXd& cp = t == 0 ? top.c : tape.dec[t - 1].c;
    const MatrixXd du = lstm_backward(p.decoder, grad->decoder, tape.dec[t], tape.dec_in[t], hp, cp, dh, dc);
    dq_prev += du.topRows(h);
    dr += du.bottomRows(rw);
    dq_next = std::move(dq_prev);
  }

  // Context paths.
  const MatrixXd dev = dr.topRows(h);
  if (has_context(config_.variant)) {
    const MatrixXd ded = dr.bottomRows(h);
    grad->ed_w.noalias() += ded * batch.context.transpose();
    grad->ed_b += ded.rowwise().sum();
  }
  const MatrixXd daev = (dev.array() * (1.0 - tape.ev.array().square())).matrix();
  grad->ev_w.noalias() += daev * top.h.transpose();
  grad->ev_b += daev.rowwise().sum();
  MatrixXd dh_final = dh + p.ev_w.transpose() * daev;
  MatrixXd dc_final = dc;

  // Encoder, top layer first; each layer hands input gradients to the one below.
  std::vector<MatrixXd> from_above(tb);
  for (int l = layers - 1; l >= 0; --l) {
    MatrixXd dh_t = MatrixXd::Zero(h, b);
    MatrixXd dc_t = MatrixXd::Zero(h, b);
    std::vector<MatrixXd> dx(tb);
    for (int t = tb - 1; t >= 0; --t) {
      if (l == layers - 1) {
        if (t == tb - 1) {
          dh_t += dh_final;
          dc_t += dc_final;
        }
      } else {
        dh_t += from_above[t];
      }
      const MatrixXd& hp = t == 0 ? zero : tape.enc[l][t - 1].h;
      const MatrixXd& cp = t == 0 ? zero : tape.enc[l][t - 1].c;
      dx[t] = lstm_backward(p.encoder[l], grad->encoder[l], tape.enc[l][t], tape.layer_in[l][t], hp, cp, dh_t, dc_t);
    }
    if (l > 0) {
      for (int t = 0; t < tb; ++t) {
        from_above[t] = tape.mask[l].empty() ? dx[t] : dx[t].cwiseProduct(tape.mask[l][t]);
      }
    } else {
      for (int t = 0; t < tb; ++t) {
        grad->in_w.noalias() += dx[t] * batch.inputs[t].transpose();
        grad->in_b += dx[t].rowwise().sum();
      }
    }
  }
  return total;
}

Encoding Network::encode(const MatrixXd& observation) const {
  if (observation.rows() != config_.encoder_length || observation.cols() != config_.input_channels) {
    throw ShapeError("observation must be " + std::to_string(config_.encoder_length) + " x " +
                     std::to_string(config_.input_channels));
  }
  const int h = config_.hidden;
  const auto& p = params_;
  std::vector<MatrixXd> hs(config_.layers, MatrixXd::Zero(h, 1));
  std::vector<MatrixXd> cs(config_.layers, MatrixXd::Zero(h, 1));
  Encoding out;
  out.ev.resize(config_.encoder_length, h);
  for (int t = 0; t < config_.encoder_length; ++t) {
    MatrixXd x = p.in_w * observation.row(t).transpose() + p.in_b;
    for (int l = 0; l < config_.layers; ++l) {
      const auto s = lstm_forward(p.encoder[l], x, hs[l], cs[l]);
      hs[l] = s.h;
      cs[l] = s.c;
      x = s.h;
    }
    out.ev.row(t) = (p.ev_w * x + p.ev_b).array().tanh().transpose();
  }
  out.h = hs.back();
  out.c = cs.back();
  return out;
}

VectorXd Network::build_context(const VectorXd& ev_final, const VectorXd& behavior) const {
  if (ev_final.size() != config_.hidden) throw ShapeError("encoder vector has the wrong width");
  const int cd = config_.context_dim();
  if (behavior.size() != cd) {
    throw ConfigError(variant_name(config_.variant) + " expects a behavior input of width " + std::to_string(cd) +
                      ", got " + std::to_string(behavior.size()));
  }
  if (cd == 0) return ev_final;
  VectorXd r(2 * config_.hidden);
  r << ev_final, params_.ed_w * behavior + params_.ed_b;
  return r;
}

PredictedDistribution Network::decode(const VectorXd& r, const VectorXd& h0, const VectorXd& c0,
                                      double anchor) const {
  if (r.size() != config_.trajectory_code_width()) throw ShapeError("trajectory code has the wrong width");
  const auto& p = params_;
  const HeadParams hp = head();
  MatrixXd h = h0, c = c0;
  MatrixXd q = MatrixXd::Zero(config_.hidden, 1);
  const MatrixXd rm = r;
  PredictedDistribution out;
  for (int t = 0; t < config_.decoder_length; ++t) {
    const auto s = lstm_forward(p.decoder, vstack({&q, &rm}), h, c);
    h = s.h;
    c = s.c;
    const MatrixXd v = vstack({&h, &q, &rm});
    q = sigmoid(p.q_w * v + p.q_b);
    const VectorXd z = (p.z_w * q + p.z_b).array().tanh();
    if (has_mixture(config_.variant)) {
      out.steps.push_back(mdn_head(z, hp, anchor));
    } else {
      MixtureParams m;
      m.pi = VectorXd::Ones(1);
      m.mu = (p.mu_w * z + p.mu_b).array() + anchor;
      m.sigma = VectorXd::Constant(1, kSigmaFloor);
      out.steps.push_back(std::move(m));
    }
  }
  return out;
}

Batch make_batch(const std::vector<MatrixXd>& observations, const std::vector<double>& anchors,
                 const std::vector<VectorXd>& contexts, const std::vector<std::vector<double>>& targets) {
  const auto n = static_cast<Eigen::Index>(observations.size());
  if (n == 0) throw ShapeError("empty batch");
  if (static_cast<Eigen::Index>(anchors.size()) != n) throw ShapeError("anchor count differs from batch size");
  const Eigen::Index tb = observations[0].rows();
  const Eigen::Index ch = observations[0].cols();
  Batch b;
  b.inputs.assign(tb, MatrixXd(ch, n));
  b.anchor.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (observations[i].rows() != tb || observations[i].cols() != ch) throw ShapeError("ragged observations");
    for (Eigen::Index t = 0; t < tb; ++t) b.inputs[t].col(i) = observations[i].row(t).transpose();
    b.anchor[i] = anchors[i];
  }
  if (!contexts.empty()) {
    if (static_cast<Eigen::Index>(contexts.size()) != n) throw ShapeError("context count differs from batch size");
    b.context.resize(contexts[0].size(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (contexts[i].size() != b.context.rows()) throw ShapeError("ragged contexts");
      b.context.col(i) = contexts[i];
    }
  }
  if (!targets.empty()) {
    if (static_cast<Eigen::Index>(targets.size()) != n) throw ShapeError("target count differs from batch size");
    const auto tp = static_cast<Eigen::Index>(targets[0].size());
    b.target.resize(tp, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(targets[i].size()) != tp) throw ShapeError("ragged targets");
      for (Eigen::Index t = 0; t < tp; ++t) b.target(t, i) = targets[i][t];
    }
  }
  return b;
}

}  // namespace drivepred::seqmodel
