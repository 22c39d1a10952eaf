#include "drivepred/explain/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"
#include "drivepred/common/text.hpp"

namespace drivepred::explain {

namespace {

Coalition from_mask(std::uint32_t mask, int m) {
  Coalition c(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) c[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
  return c;
}

std::vector<double> checked_values(const ValueFn& value, const std::vector<Coalition>& cs) {
  auto v = value(cs);
  if (v.size() != cs.size()) throw ShapeError("value function returned the wrong number of outputs");
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(0, "value function returned a non-finite output");
  }
  return v;
}

}  // namespace

Attribution shap_exact(const ValueFn& value, int m) {
  if (m < 1) throw SizeError("shap needs at least one group");
  if (m > kMaxExactGroups) {
    throw SizeError("exact Shapley enumeration supports at most 12 groups, got " + std::to_string(m) +
                    "; use shap_sampled");
  }
  const std::uint32_t n = 1u << m;
  std::vector<Coalition> all;
  all.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) all.push_back(from_mask(s, m));
  const auto v = checked_values(value, all);

  // |S|! (m - |S| - 1)! / m!
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int s = 0; s < m; ++s) w[s] = std::exp(std::lgamma(s + 1.0) + std::lgamma(m - s + 0.0) - std::lgamma(m + 1.0));

  Attribution a;
  a.base = v.front();
  a.output = v.back();
  a.phi.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    double acc = 0.0;
    for (std::uint32_t s = 0; s < n; ++s) {
      if (s & bit) continue;
      acc += w[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
    a.phi[static_cast<std::size_t>(i)] = acc;
  }
  return a;
}

Attribution shap_sampled(const ValueFn& value, int m, int permutations, std::uint64_t seed) {
  if (m < 1) throw SizeError("shap needs at least one group");
  if (permutations < 1) throw ConfigError("shap_sampled needs at least one permutation");
  auto rng = derived_rng(seed, {0x5a4b});
  const auto ends = checked_values(value, {Coalition(static_cast<std::size_t>(m), false), Coalition(static_cast<std::size_t>(m), true)});
  Attribution a;
  a.base = ends[0];
  a.output = ends[1];
  a.phi.assign(static_cast<std::size_t>(m), 0.0);

  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  constexpr int kChunk = 32;
  for (int p0 = 0; p0 < permutations; p0 += kChunk) {
    const int np = std::min(kChunk, permutations - p0);
    std::vector<std::vector<int>> perms;
    std::vector<Coalition> cs;
    for (int p = 0; p < np; ++p) {
      std::shuffle(perm.begin(), perm.end(), rng);
      perms.push_back(perm);
      Coalition c(static_cast<std::size_t>(m), false);
      for (int k = 0; k < m - 1; ++k) {
        c[static_cast<std::size_t>(perm[k])] = true;
        cs.push_back(c);
      }
    }
    const auto v = checked_values(value, cs);
    for (int p = 0; p < np; ++p) {
      double prev = a.base;
      for (int k = 0; k < m; ++k) {
        const double cur = k < m - 1 ? v[static_cast<std::size_t>(p * (m - 1) + k)] : a.output;
        a.phi[static_cast<std::size_t>(perms[p][k])] += cur - prev;
        prev = cur;
      }
    }
  }
  for (double& x : a.phi) x /= permutations;

  const double residual = (a.output - a.base) - std::accumulate(a.phi.begin(), a.phi.end(), 0.0);
  double total = 0.0;
  for (double x : a.phi) total += std::abs(x);
  for (double& x : a.phi) x += total > 0.0 ? residual * std::abs(x) / total : residual / m;
  return a;
}

Summary summarize(const std::vector<Attribution>& attributions) {
  if (attributions.empty()) throw SizeError("summarize needs at least one attribution");
  const auto& groups = attributions.front().groups;
  const std::size_t m = attributions.front().phi.size();
  for (const auto& a : attributions) {
    if (a.phi.size() != m || a.groups != groups) throw ShapeError("attributions do not share one group list");
  }
  std::vector<double> mean_abs(m, 0.0);
  for (const auto& a : attributions) {
    for (std::size_t i = 0; i < m; ++i) mean_abs[i] += std::abs(a.phi[i]);
  }
  for (double& x : mean_abs) x /= static_cast<double>(attributions.size());

  auto name = [&](std::size_t i) { return i < groups.size() ? groups[i] : "g" + std::to_string(i); };
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (mean_abs[x] != mean_abs[y]) return mean_abs[x] > mean_abs[y];
    return name(x) < name(y);
  });
  Summary s;
  for (auto i : order) {
    s.ranking.emplace_back(name(i), mean_abs[i]);
    std::vector<std::pair<double, double>> pts;
    for (const auto& a : attributions) pts.emplace_back(i < a.values.size() ? a.values[i] : 0.0, a.phi[i]);
    s.scatter.push_back(std::move(pts));
  }
  return s;
}

void write_attribution_csv(std::ostream& out, const std::vector<Attribution>& attributions) {
  out << "instance,group,phi,value,base,output\n";
  for (std::size_t k = 0; k < attributions.size(); ++k) {
    const auto& a = attributions[k];
    for (std::size_t i = 0; i < a.phi.size(); ++i) {
      out << k << ',' << (i < a.groups.size() ? a.groups[i] : "g" + std::to_string(i)) << ','
          << format_double(a.phi[i], 10) << ',' << format_double(i < a.values.size() ? a.values[i] : 0.0, 10) << ','
          << format_double(a.base, 10) << ',' << format_double(a.output, 10) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const Summary& summary) {
  out << "rank,group,mean_abs_phi\n";
  for (std::size_t i = 0; i < summary.ranking.size(); ++i) {
    out << i + 1 << ',' << summary.ranking[i].first << ',' << format_double(summary.ranking[i].second, 10) << '\n';
  }
}

}  // namespace drivepred::explain
