#include "drivepred/preference/kmedoids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"

namespace drivepred::preference {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

namespace {

struct Assignment {
  std::vector<double> nearest, second;
  std::vector<int> owner;  // position in medoid list
  double cost = 0.0;
};

Assignment assign(const Eigen::MatrixXd& dist, const std::vector<int>& medoids) {
  const int n = static_cast<int>(dist.rows());
  Assignment a;
  a.nearest.assign(n, std::numeric_limits<double>::infinity());
  a.second.assign(n, std::numeric_limits<double>::infinity());
  a.owner.assign(n, -1);
  for (int j = 0; j < n; ++j) {
    for (int m = 0; m < static_cast<int>(medoids.size()); ++m) {
      const double d = dist(j, medoids[m]);
      if (d < a.nearest[j]) {
        a.second[j] = a.nearest[j];
        a.nearest[j] = d;
        a.owner[j] = m;
      } else if (d < a.second[j]) {
        a.second[j] = d;
      }
    }
    a.cost += a.nearest[j];
  }
  return a;
}

std::vector<int> build(const Eigen::MatrixXd& dist, int k) {
  const int n = static_cast<int>(dist.rows());
  std::vector<int> medoids;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) {
      if (chosen[c]) continue;
      double cost = 0.0;
      for (int j = 0; j < n; ++j) cost += std::min(nearest[j], dist(j, c));
      if (cost < best_cost) {
        best_cost = cost;
        best = c;
      }
    }
    chosen[best] = 1;
    medoids.push_back(best);
    for (int j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], dist(j, best));
  }
  return medoids;
}

KMedoidsResult swap_phase(const Eigen::MatrixXd& dist, std::vector<int> medoids) {
  const int n = static_cast<int>(dist.rows());
  const int k = static_cast<int>(medoids.size());
  KMedoidsResult r;
  Assignment a = assign(dist, medoids);
  r.cost_trace.push_back(a.cost);
  std::vector<char> is_medoid(n, 0);
  for (int m : medoids) is_medoid[m] = 1;
  for (;;) {
    double best_delta = 0.0;
    int best_m = -1, best_h = -1;
    for (int h = 0; h < n; ++h) {
      if (is_medoid[h]) continue;
      for (int m = 0; m < k; ++m) {
        double delta = 0.0;
        for (int j = 0; j < n; ++j) {
          const double dh = dist(j, h);
          if (a.owner[j] == m) {
            delta += std::min(dh, a.second[j]) - a.nearest[j];
          } else if (dh < a.nearest[j]) {
            delta += dh - a.nearest[j];
          }
        }
        if (delta < best_delta - 1e-12 * std::max(1.0, a.cost)) {
          best_delta = delta;
          best_m = m;
          best_h = h;
        }
      }
    }
    if (best_m < 0) break;
    is_medoid[medoids[best_m]] = 0;
    is_medoid[best_h] = 1;
    medoids[best_m] = best_h;
    a = assign(dist, medoids);
    r.cost_trace.push_back(a.cost);
  }
  r.medoids = medoids;
  r.cost = a.cost;
  return r;
}

void canonicalize(const Eigen::MatrixXd& dist, KMedoidsResult& r) {
  std::sort(r.medoids.begin(), r.medoids.end());
  const int n = static_cast<int>(dist.rows());
  r.labels.assign(n, 0);
  for (int j = 0; j < n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (int m = 0; m < static_cast<int>(r.medoids.size()); ++m) {
      if (dist(j, r.medoids[m]) < best) {
        best = dist(j, r.medoids[m]);
        r.labels[j] = m;
      }
    }
  }
}

}  // namespace

KMedoidsResult pam(const Eigen::MatrixXd& dist, int k, const KMedoidsOptions& options) {
  const int n = static_cast<int>(dist.rows());
  if (n == 0) throw SizeError("k-medoids on empty input");
  if (dist.cols() != n) throw ShapeError("distance matrix must be square");
  if (k < 1 || k > n) throw ConfigError("k-medoids K=" + std::to_string(k) + " outside [1, n]");

  KMedoidsResult best = swap_phase(dist, build(dist, k));
  auto rng = derived_rng(options.seed, {static_cast<std::uint64_t>(k)});
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int r = 0; r < options.restarts; ++r) {
    std::shuffle(all.begin(), all.end(), rng);
    auto run = swap_phase(dist, std::vector<int>(all.begin(), all.begin() + k));
    if (run.cost < best.cost - 1e-12 * std::max(1.0, best.cost)) best = std::move(run);
  }
  canonicalize(dist, best);
  return best;
}

double silhouette(const Eigen::MatrixXd& dist, const std::vector<int>& labels) {
  const int n = static_cast<int>(labels.size());
  if (n == 0) throw SizeError("silhouette on empty input");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> size(k, 0);
  for (int l : labels) ++size[l];
  std::vector<double> sums(k);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (size[labels[i]] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (int j = 0; j < n; ++j) sums[labels[j]] += dist(i, j);
    const double a = sums[labels[i]] / (size[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != labels[i] && size[c] > 0) b = std::min(b, sums[c] / size[c]);
    }
    if (std::isinf(b)) continue;
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / n;
}

PreferenceModel cluster_kmedoids_dist(const Eigen::MatrixXd& dist, int k_min, int k_max,
                                      const KMedoidsOptions& options) {
  const int n = static_cast<int>(dist.rows());
  if (n == 0) throw SizeError("k-medoids on empty input");
  if (k_min < 2 || k_max > n - 1 || k_min > k_max) {
    throw ConfigError("K range [" + std::to_string(k_min) + ", " + std::to_string(k_max) + "] not within [2, n-1]");
  }
  PreferenceModel model;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    const auto r = pam(dist, k, options);
    const double s = silhouette(dist, r.labels);
    model.candidate_k.push_back(k);
    model.silhouettes.push_back(s);
    if (s > best + 1e-12) {
      best = s;
      model.k = k;
      model.medoids = r.medoids;
      model.labels = r.labels;
    }
  }
  return model;
}

PreferenceModel cluster_kmedoids(const Eigen::MatrixXd& points, int k_min, int k_max,
                                 const KMedoidsOptions& options) {
  if (points.rows() == 0) throw SizeError("k-medoids on empty input");
  return cluster_kmedoids_dist(pairwise_distances(points), k_min, k_max, options);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw SizeError("label vectors differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [key, v] : table) index += c2(v);
  for (const auto& [key, v] : ra) sa += c2(v);
  for (const auto& [key, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(n);
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace drivepred::preference
