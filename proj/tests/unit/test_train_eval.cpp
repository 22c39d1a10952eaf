#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "drivepred/common/errors.hpp"
#include "drivepred/seqmodel/mixture.hpp"
#include "drivepred/train_eval/metrics.hpp"

using namespace drivepred;
using namespace drivepred::train_eval;
using seqmodel::MixtureParams;
using seqmodel::ModelConfig;
using seqmodel::PredictedDistribution;
using seqmodel::Variant;

namespace {

ModelConfig small_config(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.encoder_length = 5;
  c.decoder_length = 3;
  c.hidden = 16;
  c.layers = 1;
  c.dropout = 0.0;
  c.mixtures = 2;
  c.behavior_dim = 2;
  c.preference_count = 2;
  c.seed = 3;
  return c;
}

// Windows whose future continues the last observed acceleration.
std::vector<Sample> make_samples(int tracks, int per_track, const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Sample> out;
  for (int k = 0; k < tracks; ++k) {
    for (int w = 0; w < per_track; ++w) {
      Sample s;
      s.track_id = 100 + k;
      s.start_frame = 10 * w;
      s.observation.resize(c.encoder_length, c.input_channels);
      for (Eigen::Index i = 0; i < s.observation.size(); ++i) s.observation.data()[i] = g(rng);
      const double v = 20.0 + 2.0 * g(rng);
      const double a = 0.5 * g(rng);
      s.observation(c.encoder_length - 1, 12) = v;
      s.observation(c.encoder_length - 1, 13) = a;
      s.anchor = v;
      for (int t = 0; t < c.decoder_length; ++t) s.future.push_back(v + a * (t + 1));
      s.preference = a > 0 ? 1 : 0;
      s.behavior = Eigen::Vector2d(a, g(rng));
      out.push_back(std::move(s));
    }
  }
  return out;
}

MixtureParams gaussian(double mu, double sigma) {
  MixtureParams m;
  m.pi = Eigen::VectorXd::Ones(1);
  m.mu = Eigen::VectorXd::Constant(1, mu);
  m.sigma = Eigen::VectorXd::Constant(1, sigma);
  return m;
}

// Analytic expected squared error of draws against y.
double expected_sq(const MixtureParams& m, double y) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < m.pi.size(); ++c) s += m.pi[c] * (m.sigma[c] * m.sigma[c] + (m.mu[c] - y) * (m.mu[c] - y));
  return s;
}

}  // namespace

TEST_CASE("split sends two of ten tracks to validation") {
  const auto c = small_config(Variant::kLstmMd);
  const auto samples = make_samples(10, 3, c, 1);
  const auto s = split(samples, 4, 1, 7);
  std::set<std::int64_t> tr, va;
  for (auto i : s.train) tr.insert(samples[i].track_id);
  for (auto i : s.validation) va.insert(samples[i].track_id);
  CHECK(tr.size() == 8);
  CHECK(va.size() == 2);
  CHECK(s.train.size() == 24);
  CHECK(s.validation.size() == 6);

  const auto again = split(samples, 4, 1, 7);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);
}

TEST_CASE("split errors") {
  const auto c = small_config(Variant::kLstmMd);
  CHECK_THROWS_AS(split(make_samples(2, 2, c, 1), 4, 1, 1), SizeError);
  CHECK_THROWS_AS(split(make_samples(1, 8, c, 1), 4, 1, 1), SizeError);
  CHECK_THROWS_AS(split(make_samples(5, 2, c, 1), 0, 1, 1), ConfigError);
}

TEST_CASE("splits are track-disjoint and cover every window for all seeds") {
  const auto c = small_config(Variant::kLstmMd);
  for (int tracks : {2, 3, 7, 13, 50, 97}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(tracks));
    auto samples = make_samples(tracks, 1, c, 2);
    // Uneven windows per track, interleaved ids.
    for (int extra = 0; extra < 2 * tracks; ++extra) {
      auto s = samples[rng() % samples.size()];
      samples.push_back(s);
    }
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      const auto s = split(samples, 4, 1, seed);
      std::set<std::int64_t> tr, va;
      for (auto i : s.train) tr.insert(samples[i].track_id);
      for (auto i : s.validation) va.insert(samples[i].track_id);
      for (auto id : va) CHECK(tr.count(id) == 0);
      CHECK(s.train.size() + s.validation.size() == samples.size());
      std::set<std::size_t> all(s.train.begin(), s.train.end());
      all.insert(s.validation.begin(), s.validation.end());
      CHECK(all.size() == samples.size());
      CHECK(!s.train.empty());
      CHECK(!s.validation.empty());
    }
  }
}

TEST_CASE("split proportions stay within 2 percent of 4:1 for equal-length tracks") {
  const auto c = small_config(Variant::kLstmMd);
  for (int tracks : {50, 51, 64, 99, 400}) {
    const auto samples = make_samples(tracks, 2, c, 3);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = split(samples, 4, 1, seed);
      const double share = static_cast<double>(s.validation.size()) / static_cast<double>(samples.size());
      CHECK(std::abs(share - 0.2) <= 0.02);
    }
  }
}

TEST_CASE("rmse examples") {
  CHECK(rmse({{1.0, 2.0}, {3.0, 4.0}}, {{1.0, 2.0}, {3.0, 4.0}}) == 0.0);
  CHECK(rmse({{2.0, 3.0, 4.0}}, {{1.0, 2.0, 3.0}}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rmse({{3.0, 4.0}}, {{0.0, 0.0}}) == doctest::Approx(std::sqrt((9.0 + 16.0) / 2.0)).epsilon(1e-15));
  CHECK(rmse({{3.0, 4.0}}, {{0.0, 0.0}}) == doctest::Approx(3.5355339059).epsilon(1e-10));
  CHECK_THROWS_AS(rmse({{1.0}}, {{1.0, 2.0}}), ShapeError);
  CHECK_THROWS_AS(rmse({{1.0}}, {}), ShapeError);
}

TEST_CASE("rmse of mixture means equals rmse of the weighted mean traces") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<std::vector<double>> means, truths, hand;
  for (int i = 0; i < 20; ++i) {
    PredictedDistribution d;
    std::vector<double> truth, m;
    for (int t = 0; t < 4; ++t) {
      MixtureParams p;
      p.pi = Eigen::Vector3d(u(rng), u(rng), u(rng));
      p.pi /= p.pi.sum();
      p.mu = Eigen::Vector3d(10 * u(rng), 10 * u(rng), 10 * u(rng));
      p.sigma = Eigen::Vector3d(u(rng), u(rng), u(rng));
      d.steps.push_back(p);
      truth.push_back(10 * u(rng));
      m.push_back(p.pi.dot(p.mu));
    }
    means.push_back(seqmodel::mean_trace(d));
    hand.push_back(m);
    truths.push_back(truth);
  }
  CHECK(rmse(means, truths) == rmse(hand, truths));
}

TEST_CASE("rwse examples") {
  const std::vector<double> truth(40, 12.0);
  PredictedDistribution point, unit;
  for (int t = 0; t < 40; ++t) {
    point.steps.push_back(gaussian(12.0, seqmodel::kSigmaFloor));
    unit.steps.push_back(gaussian(12.0, 1.0));
  }
  CHECK(rwse({point}, {truth}) <= 10 * seqmodel::kSigmaFloor);
  CHECK(rwse({unit}, {truth}, 500) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rwse({unit}, {truth}, 500, 9) == rwse({unit}, {truth}, 500, 9));
  CHECK(rwse({unit}, {truth}, 500, 9) != rwse({unit}, {truth}, 500, 10));
  CHECK_THROWS_AS(rwse({unit}, {truth}, 0), ConfigError);
  CHECK_THROWS_AS(rwse({unit}, {std::vector<double>(39, 12.0)}), ShapeError);
}

TEST_CASE("rwse converges to the component spread when every mean equals the truth") {
  for (double s : {0.3, 1.0, 2.5}) {
    PredictedDistribution d;
    std::vector<double> truth;
    for (int t = 0; t < 40; ++t) {
      MixtureParams m;
      m.pi = Eigen::Vector3d(0.2, 0.5, 0.3);
      m.mu = Eigen::Vector3d::Constant(7.0 + t);
      m.sigma = Eigen::Vector3d::Constant(s);
      d.steps.push_back(m);
      truth.push_back(7.0 + t);
    }
    CHECK(rwse({d}, {truth}, 10000, 4) == doctest::Approx(s).epsilon(0.02));
  }
}

TEST_CASE("rwse matches the variance decomposition and dominates rmse on random mixtures") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PredictedDistribution> dists;
    std::vector<std::vector<double>> truths;
    double expected = 0.0;
    int count = 0;
    for (int i = 0; i < 3; ++i) {
      PredictedDistribution d;
      std::vector<double> truth;
      for (int t = 0; t < 5; ++t) {
        const int comps = 1 + static_cast<int>(rng() % 4);
        MixtureParams m;
        m.pi.resize(comps);
        m.mu.resize(comps);
        m.sigma.resize(comps);
        for (int c = 0; c < comps; ++c) {
          m.pi[c] = 0.05 + u(rng);
          m.mu[c] = 20.0 + 4.0 * (u(rng) - 0.5);
          m.sigma[c] = 0.05 + 1.5 * u(rng);
        }
        m.pi /= m.pi.sum();
        const double y = 20.0 + 4.0 * (u(rng) - 0.5);
        expected += expected_sq(m, y);
        ++count;
        d.steps.push_back(m);
        truth.push_back(y);
      }
      dists.push_back(d);
      truths.push_back(truth);
    }
    std::vector<std::vector<double>> means;
    for (const auto& d : dists) means.push_back(seqmodel::mean_trace(d));
    const double analytic = std::sqrt(expected / count);
    const double r = rmse(means, truths);
    CHECK(analytic >= r);
    CHECK(rwse(dists, truths, 4000, static_cast<std::uint64_t>(trial)) == doctest::Approx(analytic).epsilon(0.04));
  }
}

TEST_CASE("train config validation") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.batch_size = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = {};
  t.learning_rate = -1;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = {};
  t.beta2 = 1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("training NLL on a 20-window overfit set halves within 50 epochs") {
  const auto c = small_config(Variant::kLstmMd);
  const auto samples = make_samples(20, 1, c, 21);
  Split sp;
  for (std::size_t i = 0; i < 20; ++i) sp.train.push_back(i);
  sp.validation = sp.train;
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 20;
  tc.learning_rate = 0.01;
  const auto norm = compute_normalization(samples, sp.train, c);
  const double before = mean_loss(seqmodel::Network(c), samples, sp.train, norm, 20);
  const auto r = train(c, samples, sp, tc);
  const double after = mean_loss(seqmodel::Network(c, r.final_params), samples, sp.train, norm, 20);
  REQUIRE(before > 0.0);
  CHECK(after <= 0.5 * before);
}

TEST_CASE("training is deterministic and a zero learning rate leaves parameters unchanged") {
  for (auto v : {Variant::kLstmDet, Variant::kLstmMdDbv}) {
    auto c = small_config(v);
    c.layers = 2;
    c.dropout = 0.2;
    const auto samples = make_samples(10, 4, c, 8);
    const auto sp = split(samples, 4, 1, 1);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 7;
    const auto a = train(c, samples, sp, tc);
    const auto b = train(c, samples, sp, tc);
    REQUIRE(a.history.size() == 3);
    for (std::size_t e = 0; e < a.history.size(); ++e) {
      CHECK(a.history[e].train_loss == b.history[e].train_loss);
      CHECK(a.history[e].val_loss == b.history[e].val_loss);
    }
    tc.learning_rate = 0.0;
    const auto z = train(c, samples, sp, tc);
    seqmodel::Network fresh(c);
    auto final_params = z.final_params;
    const auto p0 = fresh.params().refs();
    const auto p1 = final_params.refs();
    REQUIRE(p0.size() == p1.size());
    for (std::size_t i = 0; i < p0.size(); ++i) {
      for (Eigen::Index k = 0; k < p0[i].size(); ++k) CHECK(p0[i].data[k] == p1[i].data[k]);
    }
  }
}

TEST_CASE("returned checkpoint has the lowest validation loss") {
  auto c = small_config(Variant::kLstmMdDp);
  const auto samples = make_samples(10, 4, c, 12);
  const auto sp = split(samples, 4, 1, 2);
  TrainConfig tc;
  tc.epochs = 12;
  tc.batch_size = 8;
  tc.learning_rate = 0.03;
  const auto r = train(c, samples, sp, tc);
  const seqmodel::Network best(r.best.config, r.best.params);
  const double v = mean_loss(best, samples, sp.validation, r.best.norm, tc.batch_size);
  CHECK(v <= r.history.back().val_loss);
  for (const auto& h : r.history) CHECK(v <= h.val_loss);
  CHECK(v == doctest::Approx(r.history[static_cast<std::size_t>(r.best_epoch - 1)].val_loss).epsilon(1e-12));
  CHECK(r.best.extra.at("best_epoch").get<int>() == r.best_epoch);
}

TEST_CASE("non-finite loss raises a training error naming epoch and batch") {
  const auto c = small_config(Variant::kLstmMd);
  auto samples = make_samples(10, 2, c, 4);
  const auto sp = split(samples, 4, 1, 1);
  samples[sp.train[0]].future[1] = std::nan("");
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 100;
  try {
    train(c, samples, sp, tc);
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    CHECK(e.epoch() == 1);
    CHECK(e.batch() == 0);
  }
}

TEST_CASE("DP assembly needs preference labels") {
  const auto c = small_config(Variant::kLstmMdDp);
  auto samples = make_samples(5, 1, c, 4);
  const auto norm = compute_normalization(samples, {0, 1, 2}, c);
  const auto b = assemble(samples, {0, 1, 2}, norm, c);
  CHECK(b.context.rows() == 2);
  CHECK(b.context.colwise().sum().isOnes());
  samples[1].preference = -1;
  CHECK_THROWS_AS(assemble(samples, {0, 1, 2}, norm, c), ConfigError);
}

TEST_CASE("normalization z-scores every channel over the training windows") {
  const auto c = small_config(Variant::kLstmMdDbv);
  const auto samples = make_samples(6, 3, c, 5);
  std::vector<std::size_t> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto norm = compute_normalization(samples, idx, c);
  const auto b = assemble(samples, idx, norm, c);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(c.input_channels), sq = sum;
  for (const auto& x : b.inputs) {
    sum += x.rowwise().sum();
    sq += x.array().square().matrix().rowwise().sum();
  }
  const double n = static_cast<double>(idx.size() * c.encoder_length);
  for (int k = 0; k < c.input_channels; ++k) {
    CHECK(std::abs(sum[k] / n) < 1e-12);
    CHECK(sq[k] / n == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(std::abs(b.context.row(0).mean()) < 1e-12);
}

TEST_CASE("compare with the same variant twice gives identical rows") {
  const auto c = small_config(Variant::kLstmMd);
  const auto samples = make_samples(10, 3, c, 6);
  const auto sp = split(samples, 4, 1, 1);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 10;
  CompareOptions opt;
  opt.traces = 50;
  const auto rep = compare({c, c}, samples, sp, tc, opt);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].rmse == rep.rows[1].rmse);
  CHECK(rep.rows[0].rwse == rep.rows[1].rwse);
  CHECK(rep.rows[0].val_loss == rep.rows[1].val_loss);
  CHECK(rep.rows[0].rwse_by_step == rep.rows[1].rwse_by_step);
  CHECK(rep.rows[0].rmse >= 0.0);
  CHECK(rep.rows[0].rwse >= 0.0);
  CHECK(rep.samples == static_cast<int>(sp.validation.size()));
  CHECK_THROWS_AS(compare({c}, samples, sp, tc, opt), ConfigError);

  std::ostringstream csv, hz;
  write_report_csv(csv, rep);
  write_horizon_csv(hz, rep);
  CHECK(csv.str().rfind("variant,rmse,rwse", 0) == 0);
  int lines = 0;
  for (char ch : hz.str()) lines += ch == '\n';
  CHECK(lines == 1 + 2 * c.decoder_length);
  CHECK(improvement_percent(2.0, 1.5) == doctest::Approx(25.0));
}
