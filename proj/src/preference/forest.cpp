#include "drivepred/preference/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"

namespace drivepred::preference {

namespace {

double gini(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += c * c;
  return 1.0 - s / (total * total);
}

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const std::vector<int>& y;
  int classes;
  int max_features;
  int min_split;
  double root_size;
  std::mt19937_64& rng;
  std::vector<double>& importance;

  template <typename Node>
  int grow(std::vector<Node>& nodes, std::vector<int>& idx) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    std::vector<double> counts(classes, 0.0);
    for (int i : idx) counts[y[i]] += 1.0;
    const double total = static_cast<double>(idx.size());
    nodes[id].label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const double impurity = gini(counts, total);
    if (impurity <= 0.0 || static_cast<int>(idx.size()) < min_split) return id;

    const int p = static_cast<int>(x.cols());
    std::vector<int> features(p);
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);

    int best_f = -1;
    double best_thr = 0.0, best_gain = 0.0;
    std::vector<std::pair<double, int>> sorted(idx.size());
    std::vector<double> left(classes), right(classes);
    for (int fi = 0; fi < p; ++fi) {
      if (fi >= max_features && best_f >= 0) break;
      const int f = features[fi];
      for (std::size_t k = 0; k < idx.size(); ++k) sorted[k] = {x(idx[k], f), y[idx[k]]};
      std::sort(sorted.begin(), sorted.end());
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        left[sorted[k].second] += 1.0;
        right[sorted[k].second] -= 1.0;
        if (sorted[k].first == sorted[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = total - nl;
        const double gain = impurity - (nl * gini(left, nl) + nr * gini(right, nr)) / total;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_f = f;
          best_thr = 0.5 * (sorted[k].first + sorted[k + 1].first);
        }
      }
    }
    if (best_f < 0) return id;

    importance[best_f] += total / root_size * best_gain;
    std::vector<int> li, ri;
    for (int i : idx) (x(i, best_f) <= best_thr ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    nodes[id].feature = best_f;
    nodes[id].threshold = best_thr;
    const int l = grow(nodes, li);
    nodes[id].left = l;
    const int r = grow(nodes, ri);
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

void RandomForest::fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, const ForestOptions& options) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  if (n == 0 || static_cast<int>(labels.size()) != n) throw SizeError("forest needs one label per row");
  if (options.trees < 1) throw ConfigError("forest needs at least one tree");
  std::set<int> distinct(labels.begin(), labels.end());
  if (*distinct.begin() < 0) throw ConfigError("class labels must be non-negative");
  if (distinct.size() < 2) throw DegenerateError("labels contain a single class");
  classes_ = *distinct.rbegin() + 1;
  const int mtry = options.max_features > 0 ? std::min(options.max_features, p)
                                            : std::max(1, static_cast<int>(std::floor(std::sqrt(p))));

  trees_.assign(options.trees, {});
  importance_.assign(p, 0.0);
  for (int t = 0; t < options.trees; ++t) {
    auto rng = derived_rng(options.seed, {static_cast<std::uint64_t>(t)});
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> idx(n);
    for (auto& i : idx) i = pick(rng);
    std::vector<double> tree_importance(p, 0.0);
    TreeBuilder b{x, labels, classes_, mtry, options.min_samples_split, static_cast<double>(n), rng, tree_importance};
    b.grow(trees_[t], idx);
    const double s = std::accumulate(tree_importance.begin(), tree_importance.end(), 0.0);
    if (s > 0.0) {
      for (int f = 0; f < p; ++f) importance_[f] += tree_importance[f] / s;
    }
  }
  const double s = std::accumulate(importance_.begin(), importance_.end(), 0.0);
  if (s > 0.0) {
    for (auto& v : importance_) v /= s;
  }
}

int RandomForest::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::vector<int> votes(classes_, 0);
  for (const auto& tree : trees_) {
    int node = 0;
    while (tree[node].feature >= 0) {
      node = row(tree[node].feature) <= tree[node].threshold ? tree[node].left : tree[node].right;
    }
    ++votes[tree[node].label];
  }
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

ImportanceRanking rank_importance(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                  const ForestOptions& options) {
  RandomForest forest;
  forest.fit(x, labels, options);
  ImportanceRanking r;
  r.importance = forest.importances();
  r.order.resize(r.importance.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](int a, int b) { return r.importance[a] > r.importance[b]; });
  return r;
}

}  // namespace drivepred::preference
