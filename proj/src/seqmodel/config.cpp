#include "drivepred/seqmodel/config.hpp"

#include "drivepred/common/errors.hpp"

namespace drivepred::seqmodel {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kLstmDet:
      return "LSTM-det";
    case Variant::kLstmMd:
      return "LSTMMD";
    case Variant::kLstmMdDp:
      return "LSTMMD-DP";
    case Variant::kLstmMdDbv:
      return "LSTMMD-DBV";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::kLstmDet, Variant::kLstmMd, Variant::kLstmMdDp, Variant::kLstmMdDbv}) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown model variant '" + name + "'");
}

int ModelConfig::context_dim() const {
  switch (variant) {
    case Variant::kLstmMdDbv:
      return behavior_dim;
    case Variant::kLstmMdDp:
      return preference_count;
    default:
      return 0;
  }
}

int ModelConfig::trajectory_code_width() const { return has_context(variant) ? 2 * hidden : hidden; }

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw ConfigError(std::string("model.") + what + " must be positive");
  };
  positive(input_channels, "input_channels");
  positive(encoder_length, "encoder_length");
  positive(decoder_length, "decoder_length");
  positive(hidden, "hidden");
  positive(layers, "layers");
  positive(mixtures, "mixtures");
  if (variant == Variant::kLstmMdDbv) positive(behavior_dim, "behavior_dim");
  if (variant == Variant::kLstmMdDp) positive(preference_count, "preference_count");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
}

}  // namespace drivepred::seqmodel
