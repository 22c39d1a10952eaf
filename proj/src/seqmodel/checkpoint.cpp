#include "drivepred/seqmodel/checkpoint.hpp"

#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/fileio.hpp"

namespace drivepred::seqmodel {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json config_to_json(const ModelConfig& c) {
  return {{"variant", variant_name(c.variant)},
          {"input_channels", c.input_channels},
          {"encoder_length", c.encoder_length},
          {"decoder_length", c.decoder_length},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"dropout", c.dropout},
          {"mixtures", c.mixtures},
          {"behavior_dim", c.behavior_dim},
          {"preference_count", c.preference_count},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be an object");
  static const std::set<std::string> known = {"variant", "input_channels", "encoder_length", "decoder_length",
                                              "hidden", "layers", "dropout", "mixtures",
                                              "behavior_dim", "preference_count", "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown key 'model." + it.key() + "'");
  }
  ModelConfig c;
  try {
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("input_channels")) c.input_channels = j.at("input_channels").get<int>();
    if (j.contains("encoder_length")) c.encoder_length = j.at("encoder_length").get<int>();
    if (j.contains("decoder_length")) c.decoder_length = j.at("decoder_length").get<int>();
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<int>();
    if (j.contains("layers")) c.layers = j.at("layers").get<int>();
    if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
    if (j.contains("mixtures")) c.mixtures = j.at("mixtures").get<int>();
    if (j.contains("behavior_dim")) c.behavior_dim = j.at("behavior_dim").get<int>();
    if (j.contains("preference_count")) c.preference_count = j.at("preference_count").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  json j;
  j["format"] = "drivepred-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = config_to_json(ckpt.config);
  j["normalization"] = {{"input_mean", vec_to_json(ckpt.norm.input_mean)},
                        {"input_sd", vec_to_json(ckpt.norm.input_sd)},
                        {"context_mean", vec_to_json(ckpt.norm.context_mean)},
                        {"context_sd", vec_to_json(ckpt.norm.context_sd)}};
  j["extra"] = ckpt.extra;
  json tensors = json::array();
  for (const auto& r : const_cast<Params&>(ckpt.params).refs()) {
    tensors.push_back({{"name", r.name},
                       {"shape", {r.rows, r.cols}},
                       {"data", std::vector<double>(r.data, r.data + r.size())}});
  }
  j["params"] = std::move(tensors);
  out << j.dump() << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "drivepred-checkpoint") throw SchemaError("not a drivepred checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) throw SchemaError("unsupported checkpoint version");
  Checkpoint c;
  try {
    c.config = config_from_json(j.at("config"));
    const auto& n = j.at("normalization");
    c.norm.input_mean = vec_from_json(n.at("input_mean"));
    c.norm.input_sd = vec_from_json(n.at("input_sd"));
    c.norm.context_mean = vec_from_json(n.at("context_mean"));
    c.norm.context_sd = vec_from_json(n.at("context_sd"));
    c.extra = j.at("extra");
    c.params = Params::zeros(c.config);
    auto refs = c.params.refs();
    const auto& tensors = j.at("params");
    if (tensors.size() != refs.size()) throw SchemaError("checkpoint tensor count does not match its config");
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const auto& t = tensors[i];
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (t.at("name").get<std::string>() != refs[i].name || shape.size() != 2 || shape[0] != refs[i].rows ||
          shape[1] != refs[i].cols || static_cast<Eigen::Index>(data.size()) != refs[i].size()) {
        throw SchemaError("checkpoint tensor '" + refs[i].name + "' does not match its config");
      }
      std::copy(data.begin(), data.end(), refs[i].data);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ostringstream ss;
  write_checkpoint(ss, ckpt);
  write_file_atomic(path, ss.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::istringstream ss(read_file(path));
  return read_checkpoint(ss);
}

}  // namespace drivepred::seqmodel
