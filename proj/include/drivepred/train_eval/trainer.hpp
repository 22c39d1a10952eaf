#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "drivepred/seqmodel/checkpoint.hpp"
#include "drivepred/train_eval/dataset.hpp"

namespace drivepred::train_eval {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 100;
  int epochs = 50;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  int train_ratio = 4;
  int val_ratio = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;  // throws ConfigError
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's batches, weighted by batch size
  double val_loss = 0.0;
};

struct TrainResult {
  seqmodel::Checkpoint best;  // lowest validation loss
  int best_epoch = 0;
  std::vector<EpochLog> history;
  seqmodel::Params final_params;
};

class Adam {
 public:
  Adam(const seqmodel::ModelConfig& config, const TrainConfig& train);
  // Clips grad to the global norm limit in place, then updates params.
  // Returns the pre-clip norm.
  double step(seqmodel::Params& params, seqmodel::Params& grad);

 private:
  TrainConfig cfg_;
  seqmodel::Params m_, v_;
  long long t_ = 0;
};

// Mean loss per sample over the listed samples, no dropout.
double mean_loss(const seqmodel::Network& net, const std::vector<Sample>& samples,
                 const std::vector<std::size_t>& indices, const seqmodel::Normalization& norm, int batch_size);

using EpochCallback = std::function<void(const EpochLog&)>;

// Throws TrainingError with the epoch and batch on a non-finite loss or gradient.
TrainResult train(const seqmodel::ModelConfig& model, const std::vector<Sample>& samples, const Split& split,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

void write_history_csv(std::ostream& out, const std::vector<EpochLog>& history);

}  // namespace drivepred::train_eval
