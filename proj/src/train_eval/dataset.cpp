#include "drivepred/train_eval/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"

namespace drivepred::train_eval {

using seqmodel::ModelConfig;
using seqmodel::Normalization;
using seqmodel::Variant;

Sample sample_from_window(const trajdata::SceneWindow& w) {
  if (w.observation.empty()) throw ShapeError("window has no observation frames");
  Sample s;
  s.track_id = w.track_id;
  s.start_frame = w.start_frame;
  s.observation.resize(static_cast<Eigen::Index>(w.observation.size()), trajdata::kInputChannels);
  for (std::size_t t = 0; t < w.observation.size(); ++t) {
    const auto ch = trajdata::to_channels(w.observation[t]);
    for (int k = 0; k < trajdata::kInputChannels; ++k) s.observation(static_cast<Eigen::Index>(t), k) = ch[k];
  }
  s.anchor = w.observation.back().v;
  s.last_position = w.observation.back().x;
  s.future = w.future_velocity;
  return s;
}

namespace {

void mean_sd(const Eigen::MatrixXd& rows, Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
  mean = rows.colwise().mean().transpose();
  sd = ((rows.rowwise() - mean.transpose()).array().square().colwise().sum() / static_cast<double>(rows.rows()))
           .sqrt()
           .transpose();
  for (Eigen::Index k = 0; k < sd.size(); ++k) {
    if (!(sd[k] > 1e-12)) sd[k] = 1.0;
  }
}

}  // namespace

Normalization compute_normalization(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices,
                                    const ModelConfig& config) {
  if (indices.empty()) throw SizeError("normalization needs at least one sample");
  const Eigen::Index tb = samples[indices[0]].observation.rows();
  Eigen::MatrixXd all(static_cast<Eigen::Index>(indices.size()) * tb, config.input_channels);
  Eigen::Index r = 0;
  for (auto i : indices) {
    all.middleRows(r, tb) = samples[i].observation;
    r += tb;
  }
  Normalization n;
  mean_sd(all, n.input_mean, n.input_sd);
  if (config.variant == Variant::kLstmMdDbv) {
    Eigen::MatrixXd b(static_cast<Eigen::Index>(indices.size()), config.behavior_dim);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const auto& v = samples[indices[k]].behavior;
      if (v.size() != config.behavior_dim) throw ShapeError("sample behavior vector has the wrong width");
      b.row(static_cast<Eigen::Index>(k)) = v.transpose();
    }
    mean_sd(b, n.context_mean, n.context_sd);
  }
  return n;
}

seqmodel::Batch assemble(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices,
                         const Normalization& norm, const ModelConfig& config, bool with_target) {
  const auto b = static_cast<Eigen::Index>(indices.size());
  if (b == 0) throw SizeError("empty batch");
  seqmodel::Batch batch;
  batch.inputs.assign(config.encoder_length, Eigen::MatrixXd(config.input_channels, b));
  batch.anchor.resize(b);
  const Eigen::ArrayXd inv_sd = norm.input_sd.array().inverse();
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& s = samples[indices[j]];
    if (s.observation.rows() != config.encoder_length || s.observation.cols() != config.input_channels) {
      throw ShapeError("sample observation does not match the model's encoder length");
    }
    for (int t = 0; t < config.encoder_length; ++t) {
      batch.inputs[t].col(j) = ((s.observation.row(t).transpose().array() - norm.input_mean.array()) * inv_sd).matrix();
    }
    batch.anchor[j] = s.anchor;
  }
  if (config.variant == Variant::kLstmMdDbv) {
    batch.context.resize(config.behavior_dim, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const auto& v = samples[indices[j]].behavior;
      if (v.size() != config.behavior_dim) throw ShapeError("sample behavior vector has the wrong width");
      batch.context.col(j) = ((v - norm.context_mean).array() / norm.context_sd.array()).matrix();
    }
  } else if (config.variant == Variant::kLstmMdDp) {
    batch.context = Eigen::MatrixXd::Zero(config.preference_count, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const int p = samples[indices[j]].preference;
      if (p < 0 || p >= config.preference_count) throw ConfigError("sample has no valid preference label for LSTMMD-DP");
      batch.context(p, j) = 1.0;
    }
  }
  if (with_target) {
    batch.target.resize(config.decoder_length, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const auto& f = samples[indices[j]].future;
      if (static_cast<int>(f.size()) != config.decoder_length) throw ShapeError("sample future has the wrong length");
      for (int t = 0; t < config.decoder_length; ++t) batch.target(t, j) = f[t];
    }
  }
  return batch;
}

Split split(const std::vector<Sample>& samples, int train_ratio, int val_ratio, std::uint64_t seed) {
  if (train_ratio <= 0 || val_ratio <= 0) throw ConfigError("split ratios must be positive");
  if (samples.size() < 5) throw SizeError("split needs at least 5 windows");
  std::map<std::int64_t, std::vector<std::size_t>> by_track;
  for (std::size_t i = 0; i < samples.size(); ++i) by_track[samples[i].track_id].push_back(i);
  if (by_track.size() < 2) throw SizeError("split needs windows from at least 2 tracks");
  std::vector<std::int64_t> tracks;
  for (const auto& [id, _] : by_track) tracks.push_back(id);
  auto rng = derived_rng(seed, {0x5b1u});
  std::shuffle(tracks.begin(), tracks.end(), rng);
  const double share = static_cast<double>(val_ratio) / (train_ratio + val_ratio);
  auto n_val = static_cast<std::size_t>(std::lround(share * static_cast<double>(tracks.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, tracks.size() - 1);
  Split s;
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    auto& dst = k < n_val ? s.validation : s.train;
    const auto& idx = by_track[tracks[k]];
    dst.insert(dst.end(), idx.begin(), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

}  // namespace drivepred::train_eval
