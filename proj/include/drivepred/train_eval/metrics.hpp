#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drivepred/seqmodel/mixture.hpp"
#include "drivepred/train_eval/trainer.hpp"

namespace drivepred::train_eval {

// Pooled over steps and samples. Throws ShapeError on mismatched shapes.
double rmse(const std::vector<std::vector<double>>& predictions, const std::vector<std::vector<double>>& truths);

// Monte Carlo RWSE with n traces per trajectory; trajectory i draws from
// derived_rng(seed, {i}) so results do not depend on evaluation order.
double rwse(const std::vector<seqmodel::PredictedDistribution>& distributions,
            const std::vector<std::vector<double>>& truths, int n = 500, std::uint64_t seed = 1);

struct VariantResult {
  std::string variant;
  double rmse = 0.0;
  double rwse = 0.0;
  double val_loss = 0.0;
  int best_epoch = 0;
  std::vector<double> rmse_by_step;
  std::vector<double> rwse_by_step;
};

struct EvalReport {
  std::vector<VariantResult> rows;
  int traces = 500;
  int samples = 0;
};

// Evaluates a checkpoint on the listed samples.
VariantResult evaluate(const seqmodel::Checkpoint& ckpt, const std::vector<Sample>& samples,
                       const std::vector<std::size_t>& indices, int traces, std::uint64_t seed, int batch_size = 100);

struct CompareOptions {
  int traces = 500;
  std::uint64_t eval_seed = 1;
};

// Trains and evaluates every config on the same split and seeds.
EvalReport compare(const std::vector<seqmodel::ModelConfig>& variants, const std::vector<Sample>& samples,
                   const Split& split, const TrainConfig& train_config, const CompareOptions& options = {},
                   std::vector<TrainResult>* trained = nullptr);

// Relative RWSE improvement of row over baseline, percent.
double improvement_percent(double baseline, double value);

void write_report_csv(std::ostream& out, const EvalReport& report);
void write_horizon_csv(std::ostream& out, const EvalReport& report);
std::string format_report_table(const EvalReport& report);

}  // namespace drivepred::train_eval
