#pragma once

#include <cstdint>
#include <string>

namespace drivepred::seqmodel {

enum class Variant : int { kLstmDet = 0, kLstmMd = 1, kLstmMdDp = 2, kLstmMdDbv = 3 };

std::string variant_name(Variant v);
// Accepts "LSTM-det", "LSTMMD", "LSTMMD-DP", "LSTMMD-DBV". Throws ConfigError.
Variant parse_variant(const std::string& name);

inline bool has_mixture(Variant v) { return v != Variant::kLstmDet; }
inline bool has_context(Variant v) { return v == Variant::kLstmMdDp || v == Variant::kLstmMdDbv; }

struct ModelConfig {
  Variant variant = Variant::kLstmMdDbv;
  int input_channels = 14;
  int encoder_length = 50;
  int decoder_length = 40;
  int hidden = 192;
  int layers = 3;
  double dropout = 0.2;
  int mixtures = 5;
  int behavior_dim = 7;      // DBV context width
  int preference_count = 4;  // DP context width (one-hot)
  std::uint64_t seed = 1;

  // Width of the raw context input fed to the behavior embedding, 0 if none.
  int context_dim() const;
  // Width of R: hidden, or 2*hidden with a behavior context.
  int trajectory_code_width() const;
  int components() const { return variant == Variant::kLstmDet ? 1 : mixtures; }

  void validate() const;  // throws ConfigError
};

inline constexpr double kSigmaFloor = 1e-3;

}  // namespace drivepred::seqmodel
