#include "drivepred/explain/model_explainer.hpp"

#include <numeric>

#include "drivepred/common/errors.hpp"
#include "drivepred/seqmodel/mixture.hpp"
#include "drivepred/trajdata/track.hpp"

namespace drivepred::explain {

using train_eval::Sample;

namespace {

constexpr int kVelocityChannel = 12;

}  // namespace

ChannelSpec default_channels(const seqmodel::ModelConfig& config, const std::vector<std::string>& behavior_names) {
  ChannelSpec spec;
  const auto names = trajdata::channel_names();
  for (int k = 0; k < config.input_channels; ++k) {
    spec.groups.push_back({Group::Kind::kChannel, k, k < static_cast<int>(names.size()) ? names[k] : "ch" + std::to_string(k)});
  }
  if (config.variant == seqmodel::Variant::kLstmMdDbv) {
    for (int i = 0; i < config.behavior_dim; ++i) {
      spec.groups.push_back({Group::Kind::kBehavior, i,
                             i < static_cast<int>(behavior_names.size()) ? behavior_names[i] : "b" + std::to_string(i)});
    }
  }
  return spec;
}

Sample background_sample(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw SizeError("background needs at least one reference sample");
  Sample bg;
  bg.observation = Eigen::MatrixXd::Zero(samples[indices[0]].observation.rows(), samples[indices[0]].observation.cols());
  bg.behavior = Eigen::VectorXd::Zero(samples[indices[0]].behavior.size());
  for (auto i : indices) {
    const auto& s = samples[i];
    if (s.observation.rows() != bg.observation.rows() || s.behavior.size() != bg.behavior.size()) {
      throw ShapeError("reference samples differ in shape");
    }
    bg.observation += s.observation;
    bg.behavior += s.behavior;
    bg.anchor += s.anchor;
  }
  const double n = static_cast<double>(indices.size());
  bg.observation /= n;
  bg.behavior /= n;
  bg.anchor /= n;
  return bg;
}

double group_value(const Sample& s, const Group& g) {
  if (g.kind == Group::Kind::kChannel) return s.observation.col(g.index).mean();
  return s.behavior[g.index];
}

ModelExplainer::ModelExplainer(seqmodel::Checkpoint ckpt, int batch_size)
    : ckpt_(std::move(ckpt)), net_(ckpt_.config, ckpt_.params), batch_size_(batch_size) {
  if (batch_size_ <= 0) throw ConfigError("explainer batch size must be positive");
}

std::vector<double> ModelExplainer::evaluate(const Sample& instance, const Sample& background, const ChannelSpec& spec,
                                             const std::vector<Coalition>& coalitions) const {
  for (const auto& g : spec.groups) {
    const bool ok = g.kind == Group::Kind::kChannel
                        ? g.index >= 0 && g.index < instance.observation.cols()
                        : g.index >= 0 && g.index < instance.behavior.size();
    if (!ok) throw ShapeError("group '" + g.name + "' does not index the model inputs");
  }
  std::vector<double> out;
  out.reserve(coalitions.size());
  for (std::size_t s = 0; s < coalitions.size(); s += static_cast<std::size_t>(batch_size_)) {
    const std::size_t e = std::min(coalitions.size(), s + static_cast<std::size_t>(batch_size_));
    std::vector<Sample> masked;
    for (std::size_t k = s; k < e; ++k) {
      const auto& c = coalitions[k];
      if (c.size() != spec.groups.size()) throw ShapeError("coalition size does not match the group count");
      Sample x = instance;
      for (std::size_t gi = 0; gi < c.size(); ++gi) {
        if (c[gi]) continue;
        const auto& g = spec.groups[gi];
        if (g.kind == Group::Kind::kChannel) {
          x.observation.col(g.index) = background.observation.col(g.index);
          if (g.index == kVelocityChannel) x.anchor = background.anchor;
        } else {
          x.behavior[g.index] = background.behavior[g.index];
        }
      }
      masked.push_back(std::move(x));
    }
    std::vector<std::size_t> idx(masked.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto preds = net_.predict(train_eval::assemble(masked, idx, ckpt_.norm, ckpt_.config, false));
    for (const auto& p : preds) {
      const auto m = seqmodel::mean_trace(p);
      out.push_back(std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size()));
    }
  }
  return out;
}

ValueFn ModelExplainer::value_fn(const Sample& instance, const Sample& background, const ChannelSpec& spec) const {
  return [this, instance, background, spec](const std::vector<Coalition>& cs) {
    return evaluate(instance, background, spec, cs);
  };
}

Attribution ModelExplainer::explain(const Sample& instance, const Sample& background, const ChannelSpec& spec,
                                    int permutations, std::uint64_t seed) const {
  const int m = static_cast<int>(spec.groups.size());
  const auto f = value_fn(instance, background, spec);
  auto a = m <= kMaxExactGroups ? shap_exact(f, m) : shap_sampled(f, m, permutations, seed);
  for (const auto& g : spec.groups) {
    a.groups.push_back(g.name);
    a.values.push_back(group_value(instance, g));
  }
  return a;
}

}  // namespace drivepred::explain
