#include "drivepred/train_eval/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"
#include "drivepred/common/text.hpp"
#include "drivepred/seqmodel/network.hpp"

namespace drivepred::train_eval {

using seqmodel::PredictedDistribution;

double rmse(const std::vector<std::vector<double>>& predictions, const std::vector<std::vector<double>>& truths) {
  if (predictions.size() != truths.size() || predictions.empty()) throw ShapeError("rmse: sample counts differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != truths[i].size()) throw ShapeError("rmse: trace lengths differ");
    for (std::size_t t = 0; t < truths[i].size(); ++t) {
      const double e = predictions[i][t] - truths[i][t];
      sum += e * e;
    }
    n += truths[i].size();
  }
  if (n == 0) throw ShapeError("rmse: empty traces");
  return std::sqrt(sum / static_cast<double>(n));
}

namespace {

// Sum of squared deviations per step over n traces of trajectory i.
Eigen::VectorXd rwse_sums(const PredictedDistribution& d, const std::vector<double>& truth, int n,
                          std::uint64_t seed, std::size_t i) {
  if (d.steps.size() != truth.size()) throw ShapeError("rwse: trace lengths differ");
  auto rng = derived_rng(seed, {static_cast<std::uint64_t>(i)});
  const auto traces = seqmodel::sample(d, n, rng());
  Eigen::VectorXd out(static_cast<Eigen::Index>(truth.size()));
  for (std::size_t t = 0; t < truth.size(); ++t) {
    out[static_cast<Eigen::Index>(t)] = (traces.col(static_cast<Eigen::Index>(t)).array() - truth[t]).square().sum();
  }
  return out;
}

}  // namespace

double rwse(const std::vector<PredictedDistribution>& distributions, const std::vector<std::vector<double>>& truths,
            int n, std::uint64_t seed) {
  if (distributions.size() != truths.size() || distributions.empty()) throw ShapeError("rwse: sample counts differ");
  if (n <= 0) throw ConfigError("rwse: trace count must be positive");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < distributions.size(); ++i) {
    sum += rwse_sums(distributions[i], truths[i], n, seed, i).sum();
    count += truths[i].size() * static_cast<std::size_t>(n);
  }
  return std::sqrt(sum / static_cast<double>(count));
}

VariantResult evaluate(const seqmodel::Checkpoint& ckpt, const std::vector<Sample>& samples,
                       const std::vector<std::size_t>& indices, int traces, std::uint64_t seed, int batch_size) {
  if (indices.empty()) throw SizeError("evaluate: no samples");
  const seqmodel::Network net(ckpt.config, ckpt.params);
  const int tp = ckpt.config.decoder_length;
  VariantResult r;
  r.variant = seqmodel::variant_name(ckpt.config.variant);
  Eigen::VectorXd se = Eigen::VectorXd::Zero(tp);
  Eigen::VectorXd we = Eigen::VectorXd::Zero(tp);
  std::vector<std::vector<double>> means, truths;
  for (std::size_t s = 0; s < indices.size(); s += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(indices.size(), s + static_cast<std::size_t>(batch_size));
    const std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(s),
                                         indices.begin() + static_cast<std::ptrdiff_t>(e));
    const auto preds = net.predict(assemble(samples, chunk, ckpt.norm, ckpt.config, false));
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const auto& truth = samples[chunk[k]].future;
      const auto mean = seqmodel::mean_trace(preds[k]);
      for (int t = 0; t < tp; ++t) se[t] += (mean[t] - truth[t]) * (mean[t] - truth[t]);
      we += rwse_sums(preds[k], truth, traces, seed, s + k);
      means.push_back(mean);
      truths.push_back(truth);
    }
  }
  const double n = static_cast<double>(indices.size());
  r.rmse = rmse(means, truths);
  r.rwse = std::sqrt(we.sum() / (n * tp * traces));
  for (int t = 0; t < tp; ++t) {
    r.rmse_by_step.push_back(std::sqrt(se[t] / n));
    r.rwse_by_step.push_back(std::sqrt(we[t] / (n * traces)));
  }
  r.val_loss = mean_loss(net, samples, indices, ckpt.norm, batch_size);
  return r;
}

EvalReport compare(const std::vector<seqmodel::ModelConfig>& variants, const std::vector<Sample>& samples,
                   const Split& split, const TrainConfig& train_config, const CompareOptions& options,
                   std::vector<TrainResult>* trained) {
  if (variants.size() < 2) throw ConfigError("compare needs at least two variants");
  EvalReport report;
  report.traces = options.traces;
  report.samples = static_cast<int>(split.validation.size());
  for (const auto& v : variants) {
    auto result = train(v, samples, split, train_config);
    auto row = evaluate(result.best, samples, split.validation, options.traces, options.eval_seed,
                        train_config.batch_size);
    row.best_epoch = result.best_epoch;
    report.rows.push_back(std::move(row));
    if (trained != nullptr) trained->push_back(std::move(result));
  }
  return report;
}

double improvement_percent(double baseline, double value) { return 100.0 * (baseline - value) / baseline; }

namespace {

// Improvements are quoted against LSTMMD when present, else the first row.
const VariantResult& baseline_row(const EvalReport& report) {
  for (const auto& r : report.rows) {
    if (r.variant == "LSTMMD") return r;
  }
  return report.rows.front();
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "variant,rmse,rwse,val_loss,best_epoch,rwse_improvement_pct,traces,samples\n";
  if (report.rows.empty()) return;
  const auto& base = baseline_row(report);
  for (const auto& r : report.rows) {
    out << r.variant << ',' << format_double(r.rmse, 10) << ',' << format_double(r.rwse, 10) << ','
        << format_double(r.val_loss, 10) << ',' << r.best_epoch << ','
        << format_double(improvement_percent(base.rwse, r.rwse), 6) << ',' << report.traces << ',' << report.samples
        << '\n';
  }
}

void write_horizon_csv(std::ostream& out, const EvalReport& report) {
  out << "variant,step,horizon_s,rmse,rwse\n";
  for (const auto& r : report.rows) {
    for (std::size_t t = 0; t < r.rmse_by_step.size(); ++t) {
      out << r.variant << ',' << t + 1 << ',' << format_double(0.1 * static_cast<double>(t + 1), 4) << ','
          << format_double(r.rmse_by_step[t], 10) << ',' << format_double(r.rwse_by_step[t], 10) << '\n';
    }
  }
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream ss;
  ss << std::left << std::setw(12) << "model" << std::right << std::setw(12) << "RMSE (m/s)" << std::setw(12)
     << "RWSE (m/s)" << std::setw(14) << "vs baseline" << '\n';
  if (report.rows.empty()) return ss.str();
  const auto& base = baseline_row(report);
  for (const auto& r : report.rows) {
    std::ostringstream pct;
    pct << std::fixed << std::setprecision(2) << improvement_percent(base.rwse, r.rwse) << '%';
    ss << std::left << std::setw(12) << r.variant << std::right << std::fixed << std::setprecision(4) << std::setw(12)
       << r.rmse << std::setw(12) << r.rwse << std::setw(14) << pct.str() << '\n';
  }
  ss << "validation samples: " << report.samples << ", traces per sample: " << report.traces << '\n';
  return ss.str();
}

}  // namespace drivepred::train_eval
