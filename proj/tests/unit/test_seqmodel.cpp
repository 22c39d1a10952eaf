#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "drivepred/common/errors.hpp"
#include "drivepred/seqmodel/checkpoint.hpp"
#include "drivepred/seqmodel/mixture.hpp"
#include "drivepred/seqmodel/network.hpp"
#include "gradcheck.hpp"

using namespace drivepred;
using namespace drivepred::seqmodel;

namespace {

const std::vector<Variant> kAllVariants = {Variant::kLstmDet, Variant::kLstmMd, Variant::kLstmMdDp,
                                           Variant::kLstmMdDbv};

MixtureParams single(double mu, double sigma) {
  MixtureParams m;
  m.pi = Eigen::VectorXd::Ones(1);
  m.mu = Eigen::VectorXd::Constant(1, mu);
  m.sigma = Eigen::VectorXd::Constant(1, sigma);
  return m;
}

PredictedDistribution repeat(const MixtureParams& m, int steps) {
  PredictedDistribution d;
  d.steps.assign(steps, m);
  return d;
}

}  // namespace

TEST_CASE("variant names round-trip and bad configs are rejected") {
  for (Variant v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("GP"), ConfigError);
  ModelConfig c;
  c.hidden = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("encode with zero parameters gives bias-only encoder vectors") {
  ModelConfig c = testing::tiny_config(Variant::kLstmMd);
  Params p = Params::zeros(c);
  p.ev_b = Eigen::VectorXd::LinSpaced(c.hidden, -1.0, 1.0);
  const Network net(c, p);
  const auto enc = net.encode(Eigen::MatrixXd::Zero(c.encoder_length, c.input_channels));
  // Zero pre-activations: i = f = o = 1/2, g = 0, so c = h = 0 at every step.
  CHECK(enc.h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(enc.c.cwiseAbs().maxCoeff() == 0.0);
  for (int t = 0; t < c.encoder_length; ++t) {
    for (int k = 0; k < c.hidden; ++k) CHECK(enc.ev(t, k) == doctest::Approx(std::tanh(p.ev_b[k])).epsilon(1e-15));
  }
}

TEST_CASE("encode output shape for the default configuration") {
  ModelConfig c;
  c.variant = Variant::kLstmMd;
  const Network net(c);
  CHECK(c.hidden == 192);
  CHECK(c.layers == 3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd obs(50, 14);
  for (Eigen::Index k = 0; k < obs.size(); ++k) obs.data()[k] = g(rng);
  const auto a = net.encode(obs);
  CHECK(a.ev.rows() == 50);
  CHECK(a.ev.cols() == 192);
  const auto b = net.encode(obs);
  CHECK(a.ev == b.ev);
  CHECK_THROWS_AS(net.encode(Eigen::MatrixXd::Zero(49, 14)), ShapeError);
}

TEST_CASE("build_context widths and variant/input checks") {
  ModelConfig c;
  c.hidden = 192;
  c.layers = 1;
  c.variant = Variant::kLstmMd;
  const Network md(c);
  const Eigen::VectorXd ev = Eigen::VectorXd::Constant(192, 0.3);
  CHECK(md.build_context(ev, Eigen::VectorXd()).size() == 192);
  CHECK_THROWS_AS(md.build_context(ev, Eigen::VectorXd::Zero(7)), ConfigError);

  c.variant = Variant::kLstmMdDbv;
  c.behavior_dim = 7;
  Network dbv(c);
  CHECK(dbv.build_context(ev, Eigen::VectorXd::Ones(7)).size() == 384);
  CHECK_THROWS_AS(dbv.build_context(ev, Eigen::VectorXd()), ConfigError);
  dbv.params().ed_b.setZero();
  const auto r = dbv.build_context(ev, Eigen::VectorXd::Zero(7));
  CHECK(r.tail(192).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.head(192) == ev);
}

TEST_CASE("decode emits one valid mixture per future step") {
  ModelConfig c;
  c.hidden = 16;
  c.layers = 1;
  c.variant = Variant::kLstmMdDbv;
  const Network net(c);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd obs(50, 14);
  for (Eigen::Index k = 0; k < obs.size(); ++k) obs.data()[k] = g(rng);
  const auto enc = net.encode(obs);
  const Eigen::VectorXd r = net.build_context(enc.ev.row(49).transpose(), Eigen::VectorXd::Ones(7));
  const auto d = net.decode(r, enc.h, enc.c, 25.0);
  REQUIRE(d.steps.size() == 40);
  for (const auto& m : d.steps) {
    CHECK(m.pi.size() == 5);
    CHECK(std::abs(m.pi.sum() - 1.0) <= 1e-12);
    CHECK(m.pi.minCoeff() >= 0.0);
    CHECK(m.sigma.minCoeff() >= kSigmaFloor);
  }
}

TEST_CASE("single-sample decode agrees with the batched forward pass") {
  for (Variant v : kAllVariants) {
    const auto c = testing::tiny_config(v);
    const Network net(c);
    const auto batch = testing::random_batch(c, 3, 5);
    const auto preds = net.predict(batch);
    for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXd obs(c.encoder_length, c.input_channels);
      for (int t = 0; t < c.encoder_length; ++t) obs.row(t) = batch.inputs[t].col(i).transpose();
      const auto enc = net.encode(obs);
      const Eigen::VectorXd ctx = c.context_dim() > 0 ? Eigen::VectorXd(batch.context.col(i)) : Eigen::VectorXd();
      const auto r = net.build_context(enc.ev.row(c.encoder_length - 1).transpose(), ctx);
      const auto d = net.decode(r, enc.h, enc.c, batch.anchor[i]);
      for (int t = 0; t < c.decoder_length; ++t) {
        CHECK((d.steps[t].mu - preds[i].steps[t].mu).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((d.steps[t].pi - preds[i].steps[t].pi).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((d.steps[t].sigma - preds[i].steps[t].sigma).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("mdn_head examples") {
  HeadParams h;
  const int k = 5;
  h.pi_w = Eigen::MatrixXd::Zero(k, 3);
  h.pi_b = Eigen::VectorXd::Constant(k, 0.7);
  h.mu_w = Eigen::MatrixXd::Ones(k, 3);
  h.mu_b = Eigen::VectorXd::LinSpaced(k, 0, 4);
  h.sg_w = Eigen::MatrixXd::Zero(k, 3);
  h.sg_b = Eigen::VectorXd::Zero(k);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(3, 0.5);
  auto m = mdn_head(z, h);
  for (int c = 0; c < k; ++c) {
    CHECK(m.pi[c] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m.sigma[c] == doctest::Approx(1.0 + 1e-3).epsilon(1e-15));
    CHECK(m.mu[c] == doctest::Approx(1.5 + c).epsilon(1e-15));
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    for (Eigen::Index i = 0; i < h.pi_w.size(); ++i) h.pi_w.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < h.pi_b.size(); ++i) h.pi_b[i] = g(rng);
    const auto a = mdn_head(z, h);
    auto shifted = h;
    shifted.pi_b.array() += 13.5;
    const auto b = mdn_head(z, shifted);
    CHECK((a.pi - b.pi).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("mixture weights sum to one and sigma respects the floor for random inputs") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  HeadParams h;
  h.pi_w = Eigen::MatrixXd(5, 8);
  h.mu_w = Eigen::MatrixXd(5, 8);
  h.sg_w = Eigen::MatrixXd(5, 8);
  h.pi_b = h.mu_b = h.sg_b = Eigen::VectorXd(5);
  for (int trial = 0; trial < 2000; ++trial) {
    for (auto* m : {&h.pi_w, &h.mu_w, &h.sg_w}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = 5.0 * g(rng);
    }
    for (auto* v : {&h.pi_b, &h.mu_b, &h.sg_b}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = 5.0 * g(rng);
    }
    Eigen::VectorXd z(8);
    for (int i = 0; i < 8; ++i) z[i] = 3.0 * g(rng);
    const auto m = mdn_head(z, h);
    CHECK(std::abs(m.pi.sum() - 1.0) <= 1e-6);
    CHECK(m.sigma.minCoeff() >= kSigmaFloor);
  }
}

TEST_CASE("nll examples") {
  const std::vector<double> y = {1.0, -2.0, 3.5};
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  PredictedDistribution d;
  for (double v : y) d.steps.push_back(single(v, 1.0));
  CHECK(std::abs(nll(d, y) / 3.0 - half_log_2pi) <= 1e-12);
  CHECK(std::abs(half_log_2pi - 0.9189385) < 1e-7);

  // Degenerate two-component mixture equals its live component.
  PredictedDistribution two;
  for (double v : y) {
    MixtureParams m;
    m.pi = Eigen::Vector2d(1.0, 0.0);
    m.mu = Eigen::Vector2d(v + 0.3, v - 4.0);
    m.sigma = Eigen::Vector2d(0.7, 2.0);
    two.steps.push_back(m);
  }
  PredictedDistribution one;
  for (double v : y) one.steps.push_back(single(v + 0.3, 0.7));
  CHECK(nll(two, y) == nll(one, y));

  double last = std::numeric_limits<double>::infinity();
  for (double off : {3.0, 2.0, 1.0, 0.5, 0.0}) {
    PredictedDistribution m;
    for (double v : y) {
      MixtureParams p;
      p.pi = Eigen::Vector2d(0.8, 0.2);
      p.mu = Eigen::Vector2d(v + off, v + 5.0);
      p.sigma = Eigen::Vector2d(1.0, 1.0);
      m.steps.push_back(p);
    }
    const double l = nll(m, y);
    CHECK(l < last);
    last = l;
  }

  CHECK_THROWS_AS(nll(d, std::vector<double>{1.0}), ShapeError);
  d.steps[1].mu[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    nll(d, y);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("batched loss equals the per-sample nll") {
  const auto c = testing::tiny_config(Variant::kLstmMdDbv);
  const Network net(c);
  const auto batch = testing::random_batch(c, 4, 9);
  const auto preds = net.predict(batch);
  std::vector<std::vector<double>> targets(4);
  for (int i = 0; i < 4; ++i) {
    for (int t = 0; t < c.decoder_length; ++t) targets[i].push_back(batch.target(t, i));
  }
  CHECK(net.loss(batch) == doctest::Approx(nll(preds, targets)).epsilon(1e-12));
}

TEST_CASE("backpropagation matches central finite differences for every variant") {
  for (Variant v : kAllVariants) {
    CAPTURE(variant_name(v));
    const auto c = testing::tiny_config(v);
    const Network net(c);
    const auto batch = testing::random_batch(c, 4, 3);
    const auto r = testing::gradient_check(net, batch, 11);
    CAPTURE(r.worst);
    CHECK(r.max_rel <= 1e-4);
    CHECK(r.checked == net.params().count());
  }
}

TEST_CASE("gradients vanish at an exact fit and are deterministic") {
  auto c = testing::tiny_config(Variant::kLstmDet);
  const Params p = Params::zeros(c);
  const Network net(c, p);
  auto batch = testing::random_batch(c, 3, 4);
  for (int i = 0; i < 3; ++i) batch.target.col(i).setConstant(batch.anchor[i]);
  Params grad;
  CHECK(net.loss(batch, &grad) == 0.0);
  for (const auto& r : grad.refs()) {
    for (Eigen::Index k = 0; k < r.size(); ++k) CHECK(std::abs(r.data[k]) <= 1e-8);
  }

  c = testing::tiny_config(Variant::kLstmMdDbv);
  const Network net2(c);
  batch = testing::random_batch(c, 3, 4);
  Params g1, g2;
  std::mt19937_64 r1(5), r2(5);
  net2.loss(batch, &g1, &r1);
  net2.loss(batch, &g2, &r2);
  auto a = g1.refs();
  auto b = g2.refs();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::equal(a[i].data, a[i].data + a[i].size(), b[i].data));
  }
}

TEST_CASE("dropout is active only in training mode") {
  const auto c = testing::tiny_config(Variant::kLstmMd);
  const Network net(c);
  const auto batch = testing::random_batch(c, 3, 6);
  CHECK(net.loss(batch) == net.loss(batch));
  std::mt19937_64 r1(1), r2(2);
  CHECK(net.loss(batch, nullptr, &r1) != net.loss(batch, nullptr, &r2));
}

TEST_CASE("LSTMMD and LSTMMD-DBV agree when the behavior embedding is zero") {
  auto c = testing::tiny_config(Variant::kLstmMdDbv);
  Network dbv(c);
  dbv.params().ed_w.setZero();
  dbv.params().ed_b.setZero();
  auto cm = c;
  cm.variant = Variant::kLstmMd;
  Params pm = Params::zeros(cm);
  const Params& pd = dbv.params();
  const int h = c.hidden;
  pm.in_w = pd.in_w;
  pm.in_b = pd.in_b;
  pm.encoder = pd.encoder;
  pm.ev_w = pd.ev_w;
  pm.ev_b = pd.ev_b;
  // Drop the weight columns that read ED.
  pm.decoder.wx = pd.decoder.wx.leftCols(2 * h);
  pm.decoder.wh = pd.decoder.wh;
  pm.decoder.b = pd.decoder.b;
  pm.q_w = pd.q_w.leftCols(3 * h);
  pm.q_b = pd.q_b;
  pm.z_w = pd.z_w;
  pm.z_b = pd.z_b;
  pm.pi_w = pd.pi_w;
  pm.pi_b = pd.pi_b;
  pm.mu_w = pd.mu_w;
  pm.mu_b = pd.mu_b;
  pm.sg_w = pd.sg_w;
  pm.sg_b = pd.sg_b;
  const Network md(cm, pm);
  auto batch = testing::random_batch(c, 4, 8);
  const auto a = dbv.forward(batch);
  batch.context.resize(0, 0);
  const auto b = md.forward(batch);
  for (int t = 0; t < c.decoder_length; ++t) {
    CHECK(a.mu[t] == b.mu[t]);
    CHECK(a.pi[t] == b.pi[t]);
    CHECK(a.sigma[t] == b.sigma[t]);
  }
}

TEST_CASE("sample examples") {
  const auto point = repeat(single(7.0, kSigmaFloor), 40);
  const auto traces = sample(point, 50, 1);
  CHECK((traces.array() - 7.0).abs().maxCoeff() <= 5.0 * kSigmaFloor);

  MixtureParams m;
  m.pi = Eigen::Vector3d(0.2, 0.5, 0.3);
  m.mu = Eigen::Vector3d(-1.0, 2.0, 4.0);
  m.sigma = Eigen::Vector3d(0.5, 1.0, 0.3);
  const auto d = repeat(m, 2);
  const int n = 100000;
  const auto s = sample(d, n, 42);
  const double mean = m.pi.dot(m.mu);
  const double second = (m.pi.array() * (m.sigma.array().square() + m.mu.array().square())).sum();
  const double sd = std::sqrt(second - mean * mean);
  for (int t = 0; t < 2; ++t) CHECK(std::abs(s.col(t).mean() - mean) <= 3.0 * sd / std::sqrt(n));
  CHECK(sample(d, 10, 3) == sample(d, 10, 3));
  CHECK(sample(d, 10, 3) != sample(d, 10, 4));
}

TEST_CASE("mean_trace and integrate_position examples") {
  MixtureParams m;
  m.pi = Eigen::Vector2d(0.5, 0.5);
  m.mu = Eigen::Vector2d(1.0, 3.0);
  m.sigma = Eigen::Vector2d(1.0, 1.0);
  CHECK(mean_trace(repeat(m, 3)) == std::vector<double>{2.0, 2.0, 2.0});

  const std::vector<double> constant(40, 10.0);
  CHECK(integrate_position(constant, 10.0).back() == doctest::Approx(40.0).epsilon(1e-12));
  std::vector<double> ramp(40);
  for (int k = 0; k < 40; ++k) ramp[k] = 0.1 * (k + 1);
  CHECK(std::abs(integrate_position(ramp, 0.0).back() - 8.0) <= 1e-9);
  CHECK(integrate_position(constant, 10.0, 100.0).front() == doctest::Approx(101.0));
}

TEST_CASE("mixture quantiles invert the CDF") {
  const auto n01 = single(0.0, 1.0);
  CHECK(std::abs(mixture_quantile(n01, 0.975) - 1.959963985) <= 2e-6);
  CHECK(std::abs(mixture_quantile(n01, 0.5)) <= 1e-6);
  MixtureParams m;
  m.pi = Eigen::Vector2d(0.3, 0.7);
  m.mu = Eigen::Vector2d(-2.0, 5.0);
  m.sigma = Eigen::Vector2d(0.4, 1.5);
  for (double p : {0.025, 0.2, 0.5, 0.9, 0.975}) {
    CHECK(std::abs(mixture_cdf(m, mixture_quantile(m, p)) - p) <= 1e-6);
  }
  CHECK(mixture_quantile(m, 0.025) < mixture_quantile(m, 0.975));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  auto c = testing::tiny_config(Variant::kLstmMdDbv);
  Checkpoint ck;
  ck.config = c;
  ck.params = Params::init(c, 99);
  ck.norm.input_mean = Eigen::VectorXd::LinSpaced(14, 0.1, 1.3);
  ck.norm.input_sd = Eigen::VectorXd::Constant(14, 1.0 / 3.0);
  ck.norm.context_mean = Eigen::VectorXd::Constant(3, std::numbers::pi);
  ck.norm.context_sd = Eigen::VectorXd::Constant(3, 1e-300);
  ck.extra["quantizers"] = {{"names", {"MAX_a"}}};
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const auto back = read_checkpoint(ss);
  CHECK(config_to_json(back.config) == config_to_json(c));
  CHECK(back.norm.input_mean == ck.norm.input_mean);
  CHECK(back.norm.input_sd == ck.norm.input_sd);
  CHECK(back.norm.context_mean == ck.norm.context_mean);
  CHECK(back.norm.context_sd == ck.norm.context_sd);
  CHECK(back.extra == ck.extra);
  auto a = const_cast<Params&>(ck.params).refs();
  auto b = const_cast<Params&>(back.params).refs();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(std::memcmp(a[i].data, b[i].data, sizeof(double) * a[i].size()) == 0);
  }
  std::stringstream again;
  write_checkpoint(again, back);
  std::stringstream first;
  write_checkpoint(first, ck);
  CHECK(again.str() == first.str());
}

TEST_CASE("checkpoint config rejects unknown keys and bad tensors") {
  auto j = config_to_json(ModelConfig{});
  j["hiden"] = 3;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  std::stringstream bad("{\"format\":\"other\"}");
  CHECK_THROWS_AS(read_checkpoint(bad), SchemaError);
  CHECK_THROWS_AS(Network(testing::tiny_config(Variant::kLstmMd), Params::zeros(testing::tiny_config(Variant::kLstmMdDbv))),
                  ShapeError);
}
