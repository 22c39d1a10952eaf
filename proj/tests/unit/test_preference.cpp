#include <cmath>
#include <random>

#include "doctest.h"
#include "drivepred/common/errors.hpp"
#include "drivepred/preference/forest.hpp"
#include "drivepred/preference/kmedoids.hpp"
#include "drivepred/preference/quantize.hpp"
#include "drivepred/preference/tsne.hpp"
#include "oracles.hpp"

using namespace drivepred;
using namespace drivepred::preference;

namespace {

Eigen::MatrixXd blobs(const Eigen::MatrixXd& centers, int per_blob, double sigma, std::uint64_t seed,
                      std::vector<int>* labels = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd x(centers.rows() * per_blob, centers.cols());
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (int i = 0; i < per_blob; ++i) {
      const Eigen::Index r = c * per_blob + i;
      for (Eigen::Index d = 0; d < centers.cols(); ++d) x(r, d) = centers(c, d) + sigma * n01(rng);
      if (labels) labels->push_back(static_cast<int>(c));
    }
  }
  return x;
}

}  // namespace

TEST_CASE("t-SNE rejects too few rows") {
  CHECK_THROWS_AS(reduce_tsne(Eigen::MatrixXd::Random(80, 3)), SizeError);
}

TEST_CASE("t-SNE separates two distant blobs") {
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(2, 5);
  centers(1, 0) = 10.0;
  std::vector<int> labels;
  const auto x = blobs(centers, 50, 0.1, 3, &labels);
  const auto r = reduce_tsne(zscore_columns(x));
  CHECK(testing::best_line_accuracy(r.embedding, labels) >= 0.98);
  REQUIRE(r.kl.size() == 50);
  for (std::size_t i = 1; i < r.kl.size(); ++i) CHECK(r.kl[i] <= r.kl[i - 1] + 1e-12);
  CHECK(r.embedding.allFinite());
}

TEST_CASE("t-SNE keeps identical rows together and is deterministic") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd x(120, 6);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = n01(rng);
  }
  x.row(1) = x.row(0);
  TsneOptions opt;
  opt.seed = 4;
  const auto a = reduce_tsne(x, opt);
  const auto b = reduce_tsne(x, opt);
  CHECK(a.embedding == b.embedding);
  const double twin = (a.embedding.row(0) - a.embedding.row(1)).norm();
  int farther = 0;
  for (Eigen::Index i = 2; i < x.rows(); ++i) farther += (a.embedding.row(0) - a.embedding.row(i)).norm() > twin;
  CHECK(farther >= 0.95 * (x.rows() - 2));
}

TEST_CASE("zscore_columns zeroes constant columns") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const auto z = zscore_columns(x);
  CHECK(z(0, 0) == doctest::Approx(-std::sqrt(1.5)));
  CHECK(z.col(1).isZero());
}

TEST_CASE("PAM on a 1-D example matches brute force over medoid pairs") {
  Eigen::MatrixXd pts(5, 1);
  pts << 0.0, 0.1, 0.2, 10.0, 10.1;
  const auto dist = pairwise_distances(pts);
  const auto r = pam(dist, 2);
  std::vector<int> best;
  const double oracle = testing::brute_force_medoid_cost(dist, 2, &best);
  CHECK(r.cost == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(r.labels == std::vector<int>{0, 0, 0, 1, 1});
}

TEST_CASE("PAM matches exhaustive medoid search for n <= 8, K <= 3") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  int instances = 0;
  for (int n = 2; n <= 8; ++n) {
    for (int trial = 0; trial < 60; ++trial) {
      Eigen::MatrixXd pts(n, 2);
      for (int i = 0; i < n; ++i) pts.row(i) << u(rng), u(rng);
      // Every fifth instance is snapped to an integer grid to create ties.
      if (trial % 5 == 0) pts = pts.array().round();
      const auto dist = pairwise_distances(pts);
      for (int k = 1; k <= std::min(3, n); ++k) {
        const auto r = pam(dist, k);
        REQUIRE(r.cost == doctest::Approx(testing::brute_force_medoid_cost(dist, k)).epsilon(1e-12));
        ++instances;
      }
    }
  }
  CHECK(instances > 1000);
}

TEST_CASE("PAM cost trace never increases and silhouettes stay in [-1, 1]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd pts(60, 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) << u(rng), u(rng), u(rng);
    const auto dist = pairwise_distances(pts);
    for (int k = 2; k <= 6; ++k) {
      const auto r = pam(dist, k);
      for (std::size_t i = 1; i < r.cost_trace.size(); ++i) CHECK(r.cost_trace[i] <= r.cost_trace[i - 1]);
      const double s = silhouette(dist, r.labels);
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
      std::vector<int> sorted = r.medoids;
      std::sort(sorted.begin(), sorted.end());
      CHECK(sorted == r.medoids);
    }
  }
}

TEST_CASE("silhouette of two duplicated points is 1") {
  Eigen::MatrixXd pts(10, 2);
  for (int i = 0; i < 10; ++i) pts.row(i) << (i < 5 ? 0.0 : 1.0), (i < 5 ? 0.0 : 1.0);
  const auto model = cluster_kmedoids(pts, 2, 2);
  CHECK(std::abs(model.silhouettes[0] - 1.0) <= 1e-9);
}

TEST_CASE("cluster_kmedoids picks K=4 on four blobs") {
  Eigen::MatrixXd centers(4, 2);
  centers << 0, 0, 10, 0, 0, 10, 10, 10;
  std::vector<int> labels;
  const auto x = blobs(centers, 25, 0.5, 5, &labels);
  const auto model = cluster_kmedoids(x, 2, 4);
  CHECK(model.k == 4);
  CHECK(adjusted_rand_index(model.labels, labels) == doctest::Approx(1.0));
  CHECK(model.candidate_k == std::vector<int>{2, 3, 4});
}

TEST_CASE("cluster_kmedoids validates its inputs") {
  CHECK_THROWS_AS(cluster_kmedoids(Eigen::MatrixXd(0, 2), 2, 3), SizeError);
  CHECK_THROWS_AS(cluster_kmedoids(Eigen::MatrixXd::Random(4, 2), 2, 4), ConfigError);
}

TEST_CASE("adjusted Rand index agrees with pair counting") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(30), b(30);
    for (auto& v : a) v = lab(rng);
    for (auto& v : b) v = lab(rng);
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(testing::pair_counting_ari(a, b)).epsilon(1e-10));
  }
}

TEST_CASE("random forest ranks a planted signal first") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(400, 10);
  std::vector<int> y(400);
  for (int i = 0; i < 400; ++i) {
    for (int j = 0; j < 10; ++j) x(i, j) = u(rng);
    y[i] = x(i, 6) > 0.5 ? 1 : 0;
  }
  const auto r = rank_importance(x, y);
  CHECK(r.order[0] == 6);
  CHECK(r.importance[6] >= 3.0 * r.importance[r.order[1]]);
  double s = 0.0;
  for (double v : r.importance) {
    CHECK(v >= 0.0);
    s += v;
  }
  CHECK(std::abs(s - 1.0) <= 1e-9);
  const auto again = rank_importance(x, y);
  CHECK(again.importance == r.importance);
  CHECK(again.order == r.order);
}

TEST_CASE("random forest predicts its training signal and rejects one class") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(200, 3);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) {
    x.row(i) << u(rng), u(rng), u(rng);
    y[i] = x(i, 0) + x(i, 1) > 1.0 ? 2 : 0;
  }
  RandomForest f;
  f.fit(x, y);
  Eigen::RowVectorXd probe(3);
  probe << 0.9, 0.9, 0.5;
  CHECK(f.predict(probe) == 2);
  probe << 0.1, 0.1, 0.5;
  CHECK(f.predict(probe) == 0);
  CHECK_THROWS_AS(rank_importance(x, std::vector<int>(200, 1)), DegenerateError);
}

TEST_CASE("select_key_indicators applies the cumulative threshold") {
  ImportanceRanking r;
  r.importance = {0.15, 0.5, 0.05, 0.3};
  r.order = {1, 3, 0, 2};
  Eigen::MatrixXd x(10, 4);
  for (int i = 0; i < 10; ++i) x.row(i) << i, 2 * i + 1, i * i, 10 - i;
  CHECK(select_key_indicators(r, x) == std::vector<int>{1, 3, 0});
  SelectOptions all;
  all.cumulative_threshold = 1.0;
  CHECK(select_key_indicators(r, x, all) == std::vector<int>{1, 3, 0, 2});
  all.max_count = 2;
  CHECK(select_key_indicators(r, x, all) == std::vector<int>{1, 3});
}

TEST_CASE("select_key_indicators drops constant and narrow columns") {
  ImportanceRanking r;
  r.importance = {0.6, 0.3, 0.1};
  r.order = {0, 1, 2};
  Eigen::MatrixXd x(20, 3);
  for (int i = 0; i < 20; ++i) x.row(i) << 4.0, 100.0 + 0.01 * i, i;
  SelectOptions opt;
  opt.cumulative_threshold = 1.0;
  CHECK(select_key_indicators(r, x, opt) == std::vector<int>{2});
}

TEST_CASE("percentile interpolates linearly") {
  CHECK(percentile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(percentile({0, 10}, 0.95) == doctest::Approx(9.5));
}

TEST_CASE("quantize_indicator recovers a bimodal speed distribution") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<double> v;
  for (int i = 0; i < 20; ++i) v.push_back(16.5 + u(rng));
  for (int i = 0; i < 20; ++i) v.push_back(21.6 + u(rng));
  const auto c = quantize_indicator(v);
  REQUIRE(c.size() == 2);
  CHECK(std::abs(c[0] - 16.5) <= 0.15);
  CHECK(std::abs(c[1] - 21.6) <= 0.15);
  // Medoids coincide with the brute-force optimum for K = 2.
  Eigen::MatrixXd d(v.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) d(i, j) = std::abs(v[i] - v[j]);
  }
  std::vector<int> best;
  testing::brute_force_medoid_cost(d, 2, &best);
  std::vector<double> oracle = {v[best[0]], v[best[1]]};
  std::sort(oracle.begin(), oracle.end());
  CHECK(c == oracle);
  CHECK(quantize_indicator(v) == c);
}

TEST_CASE("quantize_indicator covers a uniform grid") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto c = quantize_indicator(v);
  REQUIRE(c.size() >= 2);
  double max_gap = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c[i] > c[i - 1]);
    max_gap = std::max(max_gap, c[i] - c[i - 1]);
  }
  for (double x : v) CHECK(std::abs(x - nearest_centroid(x, c)) <= 0.5 * max_gap);
}

TEST_CASE("quantize_indicator rejects degenerate distributions") {
  CHECK_THROWS_AS(quantize_indicator(std::vector<double>{1, 1, 2, 2, 3, 3}), DegenerateError);
}

TEST_CASE("nearest_centroid examples") {
  const std::vector<double> c = {1.0, 2.0};
  CHECK(nearest_centroid(1.05, c) == 1.0);
  CHECK(nearest_centroid(1.5, c) == 1.0);
  CHECK(nearest_centroid(2.0, c) == 2.0);
}

TEST_CASE("behavior_vector is idempotent and validates names") {
  QuantizerSet q;
  q.names = {"MEAN_v", "MIN_thw"};
  q.centroids = {{18.0, 24.0, 30.0}, {0.9, 1.6, 2.5}};
  features::IndicatorSet s;
  s[features::Indicator::kMeanV] = 22.0;
  s[features::Indicator::kMinThw] = features::IndicatorSet::kAbsent;
  const auto v = behavior_vector(s, q);
  CHECK(v == std::vector<double>{24.0, 2.5});
  CHECK(requantize(v, q) == v);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> raw = {u(rng), u(rng) / 10.0};
    const auto once = requantize(raw, q);
    CHECK(requantize(once, q) == once);
  }
  q.names[1] = "NOT_AN_INDICATOR";
  CHECK_THROWS_AS(behavior_vector(s, q), SchemaError);
}
