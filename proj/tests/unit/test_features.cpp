#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "drivepred/features/indicators.hpp"
#include "drivepred/features/safety.hpp"
#include "drivepred/features/signal_stats.hpp"
#include "drivepred/features/spectral.hpp"
#include "drivepred/features/wavelet.hpp"
#include "drivepred/features/wdtw.hpp"
#include "drivepred/trajdata/preprocess.hpp"
#include "drivepred/trajdata/scene.hpp"
#include "drivepred/trajdata/synth.hpp"
#include "oracles.hpp"

using namespace drivepred;
using namespace drivepred::features;

namespace {

std::vector<double> random_sequence(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("time_stats examples") {
  const std::vector<double> c = {2, 2, 2};
  auto s = time_stats(c);
  CHECK(s.max == 2);
  CHECK(s.min == 2);
  CHECK(s.mean == 2);
  CHECK(s.variance == 0);

  const std::vector<double> r = {1, 2, 3};
  s = time_stats(r);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.variance == doctest::Approx(2.0 / 3.0));

  const std::vector<double> sym = {-1, 1};
  s = time_stats(sym);
  CHECK(s.max == 1);
  CHECK(s.min == -1);
  CHECK(s.mean == 0);
}

TEST_CASE("mad examples and scale equivariance") {
  CHECK(mad(std::vector<double>{4, 4, 4, 4}) == 0.0);
  CHECK(mad(std::vector<double>{1, 2, 3}) == doctest::Approx(2.0 / 3.0));
  CHECK(mad(std::vector<double>{0, 10}) == doctest::Approx(5.0));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_sequence(rng, 50, -5, 5);
    const double c = 0.1 + trial * 0.37;
    auto y = x;
    for (auto& v : y) v *= c;
    CHECK(std::abs(mad(y) - c * mad(x)) <= 1e-9 * std::max(1.0, c * mad(x)));
    CHECK(mad(x) >= 0.0);
    CHECK(time_stats(x).variance >= 0.0);
  }
}

TEST_CASE("tsv examples") {
  CHECK(*tsv(std::vector<double>{5, 5, 5, 5}) == 0.0);
  CHECK(*tsv(std::vector<double>{1, 2, 4, 8}) == doctest::Approx(0.0).scale(1e-12));
  // Two log-ratios r = +-100 ln 2; sample std-dev with n-1 = 1.
  const double r = 100.0 * std::log(2.0);
  const double expected = std::sqrt((r * r + r * r) / 1.0);
  CHECK(*tsv(std::vector<double>{1, 2, 1}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(98.0258).epsilon(1e-5));
  CHECK_FALSE(tsv(std::vector<double>{0, 0, 0, 5}).has_value());
}

TEST_CASE("tsv is scale invariant and non-negative") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_sequence(rng, 40, 1.0, 30.0);
    auto y = x;
    for (auto& v : y) v *= 3.7;
    const double a = *tsv(x);
    CHECK(a >= 0.0);
    CHECK(std::abs(*tsv(y) - a) <= 1e-9 * std::max(1.0, a));
  }
}

TEST_CASE("dft_features examples") {
  const std::vector<double> c(64, 3.0);
  const auto f0 = dft_features(c, 10.0);
  CHECK(f0.gcf == 0.0);
  CHECK(f0.rmsf == 0.0);
  CHECK(f0.msf == 0.0);
  CHECK(f0.stdf == 0.0);

  std::vector<double> s(100);
  for (int t = 0; t < 100; ++t) s[t] = std::sin(2.0 * std::numbers::pi * 1.0 * t / 10.0);
  const auto f1 = dft_features(s, 10.0);
  CHECK(std::abs(f1.gcf - 1.0) < 1e-6);
  CHECK(std::abs(f1.rmsf - 1.0) < 1e-6);
  CHECK(std::abs(f1.stdf) < 1e-6);
}

TEST_CASE("dft_features identities and Parseval") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 16 + trial * 3;
    auto x = random_sequence(rng, n, -2, 2);
    const auto f = dft_features(x, 10.0);
    CHECK(f.rmsf * f.rmsf == doctest::Approx(f.msf).epsilon(1e-12));
    const auto spec = power_spectrum(x, 10.0);
    double total = 0.0;
    for (double p : spec.power) total += p;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double energy = 0.0;
    for (double v : x) energy += (v - mean) * (v - mean);
    energy /= n;
    CHECK(std::abs(total - energy) <= 1e-6 * energy);
  }
}

TEST_CASE("dwt_features examples and bounds") {
  const std::vector<double> zero(64, 0.0);
  const auto z = dwt_features(zero);
  CHECK(z.wee == 0.0);
  CHECK(z.wse == 0.0);

  // A constant lies entirely in the approximation band.
  const std::vector<double> c(64, 2.5);
  CHECK(dwt_features(c).wee == 0.0);
  CHECK(dwt_features(c).wse == 0.0);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_sequence(rng, 16 + trial, -3, 3);
    const auto f = dwt_features(x);
    CHECK(f.wee >= 0.0);
    CHECK(f.wse >= 0.0);
    CHECK(f.wee <= std::log(4.0) + 1e-12);
  }
}

TEST_CASE("periodized D4 transform preserves energy") {
  std::mt19937_64 rng(13);
  auto x = random_sequence(rng, 128, -1, 1);
  double e = 0.0;
  for (double v : x) e += v * v;
  double eb = 0.0;
  for (const auto& band : dwt_d4(x)) {
    for (double v : band) eb += v * v;
  }
  CHECK(eb == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("wdtw of a sequence with itself is zero") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    auto a = random_sequence(rng, 1 + trial % 40, -10, 10);
    CHECK(wdtw(a, a) == 0.0);
  }
}

TEST_CASE("wdtw is symmetric for equal lengths") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_sequence(rng, 12, 0, 5);
    auto b = random_sequence(rng, 12, 0, 5);
    CHECK(wdtw(a, b) == doctest::Approx(wdtw(b, a)).epsilon(1e-12));
    CHECK(wdtw(a, b) >= 0.0);
  }
}

TEST_CASE("uniform-weight wdtw equals half the brute-force DTW cost (lengths <= 4, exhaustive)") {
  // g = 0 makes every weight w_max / 2.
  const WdtwOptions uniform{0.0, 1.0};
  for (int la = 1; la <= 4; ++la) {
    for (int lb = 1; lb <= 4; ++lb) {
      const auto as = testing::all_sequences(la, 4);
      const auto bs = testing::all_sequences(lb, 4);
      for (const auto& a : as) {
        for (const auto& b : bs) {
          const double oracle = testing::brute_force_dtw(a, b);
          REQUIRE(wdtw(a, b, uniform) == 0.5 * oracle);
        }
      }
    }
  }
}

TEST_CASE("safety indicator examples") {
  using trajdata::SceneFrame;
  SceneFrame f;
  f.v = 12.0;
  auto& lv = f.slots[static_cast<int>(trajdata::Slot::kLV)];
  lv = {-2.0, 10.0, true};
  std::vector<SceneFrame> frames = {f};
  auto s = safety_indicators(frames);
  CHECK(*s.min_ttc == doctest::Approx(5.0));

  lv = {0.5, 40.0, true};
  f.v = 20.0;
  frames.assign(10, f);
  s = safety_indicators(frames);
  CHECK_FALSE(s.min_ttc.has_value());
  CHECK(*s.min_thw == doctest::Approx(2.0));
}

TEST_CASE("extract_all on a constant-speed window without a lead") {
  trajdata::SceneWindow w;
  trajdata::SceneFrame f;
  f.v = 25.0;
  w.behavior.assign(200, f);
  const auto ind = extract_all(w);
  using I = Indicator;
  for (I i : {I::kVarV, I::kMadV, I::kTsvV, I::kGcfV, I::kRmsfV, I::kMsfV, I::kStdfV, I::kWeeV, I::kWseV, I::kWdtwV,
              I::kVarA, I::kMadA, I::kGcfA, I::kRmsfA, I::kMsfA, I::kStdfA, I::kWeeA, I::kWseA}) {
    CHECK(ind[i] == 0.0);
  }
  CHECK(IndicatorSet::absent(ind[I::kMinThw]));
  CHECK(IndicatorSet::absent(ind[I::kMinTtc]));
  CHECK(ind.values.size() == 29);
  CHECK(kIndicatorNames.size() == 29);
}

TEST_CASE("indicator CSV round-trips with absent markers") {
  trajdata::SceneWindow w;
  trajdata::SceneFrame f;
  f.v = 25.0;
  w.behavior.assign(200, f);
  const std::vector<trajdata::SceneWindow> ws = {w};
  const std::vector<IndicatorSet> rows = {extract_all(w)};
  std::stringstream ss;
  write_indicator_csv(ss, ws, rows);
  const auto table = read_indicator_csv(ss);
  REQUIRE(table.rows.size() == 1);
  CHECK(std::isnan(table.rows[0][Indicator::kMinTtc]));
  CHECK(table.rows[0][Indicator::kMaxV] == 25.0);
}

TEST_CASE("synthetic archetypes separate on headway and acceleration") {
  trajdata::SynthConfig cfg;
  cfg.trajectory_count = 100;
  auto tracks = gen_synthetic(cfg);
  for (auto& t : tracks) t = trajdata::preprocess(t);
  const trajdata::SceneIndex index(tracks);
  trajdata::WindowOptions opt;
  opt.labeled_targets_only = true;
  opt.stride = 1000;  // first window per trajectory
  const auto windows = window_samples(index, opt);
  REQUIRE(windows.size() == 100);
  // Archetype 0 is aggressive (short headway, strong acceleration), 2 cautious.
  double thw[4] = {0, 0, 0, 0}, max_a[4] = {0, 0, 0, 0};
  int count[4] = {0, 0, 0, 0};
  for (const auto& w : windows) {
    const auto ind = extract_all(w);
    const int k = *w.archetype;
    thw[k] += IndicatorSet::absent(ind[Indicator::kMinThw]) ? 10.0 : ind[Indicator::kMinThw];
    max_a[k] += ind[Indicator::kMaxA];
    ++count[k];
  }
  CHECK(thw[0] / count[0] < thw[2] / count[2]);
  CHECK(max_a[0] / count[0] > max_a[2] / count[2]);
}

TEST_CASE("extract_all is deterministic") {
  trajdata::SynthConfig cfg;
  cfg.trajectory_count = 4;
  auto tracks = gen_synthetic(cfg);
  for (auto& t : tracks) t = trajdata::preprocess(t);
  const trajdata::SceneIndex index(tracks);
  const auto windows = window_samples(index, {100, true});
  REQUIRE(!windows.empty());
  const auto a = extract_all(windows[0]);
  const auto b = extract_all(windows[0]);
  for (int i = 0; i < kIndicatorCount; ++i) {
    if (std::isnan(a.values[i])) {
      CHECK(std::isnan(b.values[i]));
    } else {
      CHECK(a.values[i] == b.values[i]);
    }
  }
}
