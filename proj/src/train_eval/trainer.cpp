#include "drivepred/train_eval/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"
#include "drivepred/common/text.hpp"

namespace drivepred::train_eval {

using seqmodel::Network;
using seqmodel::Params;

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be >= 0");
  if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
  if (epochs <= 0) throw ConfigError("train.epochs must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("train.clip_norm must be positive");
  if (train_ratio <= 0 || val_ratio <= 0) throw ConfigError("train split ratios must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be positive");
}

Adam::Adam(const seqmodel::ModelConfig& config, const TrainConfig& train)
    : cfg_(train), m_(Params::zeros(config)), v_(Params::zeros(config)) {}

double Adam::step(Params& params, Params& grad) {
  auto g = grad.refs();
  double sq = 0.0;
  for (const auto& r : g) {
    for (Eigen::Index k = 0; k < r.size(); ++k) sq += r.data[k] * r.data[k];
  }
  const double norm = std::sqrt(sq);
  if (norm > cfg_.clip_norm) {
    const double s = cfg_.clip_norm / norm;
    for (auto& r : g) {
      for (Eigen::Index k = 0; k < r.size(); ++k) r.data[k] *= s;
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto p = params.refs();
  auto m = m_.refs();
  auto v = v_.refs();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (Eigen::Index k = 0; k < p[i].size(); ++k) {
      const double gk = g[i].data[k];
      double& mk = m[i].data[k];
      double& vk = v[i].data[k];
      mk = cfg_.beta1 * mk + (1.0 - cfg_.beta1) * gk;
      vk = cfg_.beta2 * vk + (1.0 - cfg_.beta2) * gk * gk;
      p[i].data[k] -= cfg_.learning_rate * (mk / c1) / (std::sqrt(vk / c2) + cfg_.epsilon);
    }
  }
  return norm;
}

double mean_loss(const Network& net, const std::vector<Sample>& samples, const std::vector<std::size_t>& indices,
                 const seqmodel::Normalization& norm, int batch_size) {
  if (indices.empty()) throw SizeError("no samples to evaluate");
  double total = 0.0;
  for (std::size_t s = 0; s < indices.size(); s += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(indices.size(), s + static_cast<std::size_t>(batch_size));
    const std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(s),
                                         indices.begin() + static_cast<std::ptrdiff_t>(e));
    total += net.loss(assemble(samples, chunk, norm, net.config())) * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(indices.size());
}

TrainResult train(const seqmodel::ModelConfig& model, const std::vector<Sample>& samples, const Split& split,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty() || split.validation.empty()) throw SizeError("training needs nonempty train and validation sets");
  const auto norm = compute_normalization(samples, split.train, model);
  Network net(model);
  Adam adam(model, config);
  Params grad = Params::zeros(model);

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order = split.train;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto shuffle_rng = derived_rng(config.seed, {0xe90c, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum = 0.0;
    int batch_index = 0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(config.batch_size), ++batch_index) {
      const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(config.batch_size));
      const std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(s),
                                           order.begin() + static_cast<std::ptrdiff_t>(e));
      const auto batch = assemble(samples, chunk, norm, model);
      auto drop_rng = derived_rng(config.seed, {0xd809, static_cast<std::uint64_t>(epoch),
                                                static_cast<std::uint64_t>(batch_index)});
      double loss = 0.0;
      try {
        loss = net.loss(batch, &grad, &drop_rng);
      } catch (const NumericError& err) {
        throw TrainingError(epoch, batch_index, err.what());
      }
      if (!std::isfinite(loss) || !grad.all_finite()) throw TrainingError(epoch, batch_index, "non-finite loss or gradient");
      adam.step(net.params(), grad);
      sum += loss * static_cast<double>(chunk.size());
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = sum / static_cast<double>(order.size());
    try {
      log.val_loss = mean_loss(net, samples, split.validation, norm, config.batch_size);
    } catch (const NumericError& err) {
      throw TrainingError(epoch, -1, std::string("validation: ") + err.what());
    }
    if (!std::isfinite(log.val_loss)) throw TrainingError(epoch, -1, "non-finite validation loss");
    result.history.push_back(log);
    if (log.val_loss < best) {
      best = log.val_loss;
      result.best_epoch = epoch;
      result.best.params = net.params();
    }
    if (on_epoch) on_epoch(log);
  }
  result.best.config = model;
  result.best.norm = norm;
  result.best.extra["best_epoch"] = result.best_epoch;
  result.best.extra["best_val_loss"] = best;
  result.final_params = net.params();
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochLog>& history) {
  out << "epoch,train_loss,val_loss\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << format_double(h.train_loss, 12) << ',' << format_double(h.val_loss, 12) << '\n';
  }
}

}  // namespace drivepred::train_eval
