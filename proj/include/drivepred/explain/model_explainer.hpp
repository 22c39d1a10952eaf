#pragma once

#include <string>
#include <vector>

#include "drivepred/explain/shap.hpp"
#include "drivepred/seqmodel/checkpoint.hpp"
#include "drivepred/train_eval/dataset.hpp"

namespace drivepred::explain {

// One feature group: an input channel over every observation step, or one
// behavior-vector entry.
struct Group {
  enum class Kind { kChannel, kBehavior };
  Kind kind = Kind::kChannel;
  int index = 0;
  std::string name;
};

struct ChannelSpec {
  std::vector<Group> groups;
};

// All 14 channels, plus the behavior entries for DBV models.
ChannelSpec default_channels(const seqmodel::ModelConfig& config, const std::vector<std::string>& behavior_names = {});

// Mean observation, behavior vector and anchor over the reference samples.
train_eval::Sample background_sample(const std::vector<train_eval::Sample>& samples,
                                     const std::vector<std::size_t>& indices);

class ModelExplainer {
 public:
  explicit ModelExplainer(seqmodel::Checkpoint ckpt, int batch_size = 256);

  // Horizon-averaged mean predicted velocity for each coalition. A group that
  // is off takes the background's values; masking TV velocity also moves the
  // anchor to the background's last velocity. Groups not listed stay on.
  std::vector<double> evaluate(const train_eval::Sample& instance, const train_eval::Sample& background,
                               const ChannelSpec& spec, const std::vector<Coalition>& coalitions) const;

  ValueFn value_fn(const train_eval::Sample& instance, const train_eval::Sample& background,
                   const ChannelSpec& spec) const;

  // Exact when the group count allows it, sampled otherwise. Fills group
  // names and instance feature values.
  Attribution explain(const train_eval::Sample& instance, const train_eval::Sample& background,
                      const ChannelSpec& spec, int permutations, std::uint64_t seed) const;

  const seqmodel::Checkpoint& checkpoint() const { return ckpt_; }

 private:
  seqmodel::Checkpoint ckpt_;
  seqmodel::Network net_;
  int batch_size_;
};

// Mean over the observation for a channel group, the entry for a behavior group.
double group_value(const train_eval::Sample& s, const Group& g);

}  // namespace drivepred::explain
