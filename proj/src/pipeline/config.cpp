#include "drivepred/pipeline/config.hpp"

#include "drivepred/common/errors.hpp"
#include "drivepred/common/fileio.hpp"

namespace drivepred::pipeline {

using nlohmann::json;

json PipelineConfig::to_json() const {
  const auto& p = preference;
  return {
      {"seed", seed},
      {"paths", {{"artifact_dir", artifact_dir}, {"tracks_csv", tracks_csv}}},
      {"synth",
       {{"trajectory_count", synth.trajectory_count},
        {"duration", synth.duration},
        {"noise_std", synth.noise_std},
        {"neighbors_per_side", synth.neighbors_per_side}}},
      {"windows", {{"stride", window_stride}}},
      {"preference",
       {{"k_min", p.k_min},
        {"k_max", p.k_max},
        {"cluster_max", p.cluster_max},
        {"quantizer_k_min", p.quantizer_k_min},
        {"quantizer_k_max", p.quantizer_k_max},
        {"select",
         {{"cumulative_threshold", p.select.cumulative_threshold},
          {"spread_floor", p.select.spread_floor},
          {"max_count", p.select.max_count}}},
        {"tsne",
         {{"perplexity", p.tsne.perplexity},
          {"iterations", p.tsne.iterations},
          {"early_exaggeration", p.tsne.early_exaggeration},
          {"exaggeration_iterations", p.tsne.exaggeration_iterations},
          {"learning_rate", p.tsne.learning_rate}}},
        {"kmedoids", {{"restarts", p.kmedoids.restarts}}},
        {"forest",
         {{"trees", p.forest.trees},
          {"max_features", p.forest.max_features},
          {"min_samples_split", p.forest.min_samples_split}}}}},
      {"model",
       {{"variant", seqmodel::variant_name(model.variant)},
        {"hidden", model.hidden},
        {"layers", model.layers},
        {"dropout", model.dropout},
        {"mixtures", model.mixtures}}},
      {"train",
       {{"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"epochs", train.epochs},
        {"clip_norm", train.clip_norm},
        {"train_ratio", train.train_ratio},
        {"val_ratio", train.val_ratio},
        {"beta1", train.beta1},
        {"beta2", train.beta2},
        {"epsilon", train.epsilon}}},
      {"evaluate", {{"variants", variants}, {"traces", traces}}},
      {"predict", {{"window", predict_window}}},
      {"explain",
       {{"instances", explain_instances},
        {"background", explain_background},
        {"permutations", explain_permutations}}},
  };
}

json default_config_json() { return PipelineConfig{}.to_json(); }

namespace {

bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

const char* kind_name(const json& def) {
  if (def.is_boolean()) return "a boolean";
  if (def.is_number_integer()) return "an integer";
  if (def.is_number()) return "a number";
  if (def.is_string()) return "a string";
  if (def.is_array()) return "an array";
  return "an object";
}

void strict_merge(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + " must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (!same_kind(slot, it.value())) throw ConfigError("'" + key + "' must be " + kind_name(slot));
    if (slot.is_object()) {
      strict_merge(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "." + key + "': " + e.what());
  }
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("'" + key + "' " + what);
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  json t = default_config_json();
  strict_merge(t, j, "");

  PipelineConfig c;
  c.seed = t.at("seed").get<std::uint64_t>();
  c.artifact_dir = get<std::string>(t["paths"], "artifact_dir", "paths");
  c.tracks_csv = get<std::string>(t["paths"], "tracks_csv", "paths");
  require(!c.artifact_dir.empty(), "paths.artifact_dir", "must not be empty");

  const auto& s = t["synth"];
  c.synth.trajectory_count = get<int>(s, "trajectory_count", "synth");
  c.synth.duration = get<double>(s, "duration", "synth");
  c.synth.noise_std = get<double>(s, "noise_std", "synth");
  c.synth.neighbors_per_side = get<int>(s, "neighbors_per_side", "synth");
  c.synth.seed = c.seed;
  try {
    c.synth.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  }

  c.window_stride = get<int>(t["windows"], "stride", "windows");
  require(c.window_stride > 0, "windows.stride", "must be positive");

  const auto& p = t["preference"];
  auto& ps = c.preference;
  ps.k_min = get<int>(p, "k_min", "preference");
  ps.k_max = get<int>(p, "k_max", "preference");
  require(ps.k_min >= 2 && ps.k_max >= ps.k_min, "preference.k_min", "must be >= 2 and <= k_max");
  ps.cluster_max = get<int>(p, "cluster_max", "preference");
  require(ps.cluster_max >= 10, "preference.cluster_max", "must be at least 10");
  ps.quantizer_k_min = get<int>(p, "quantizer_k_min", "preference");
  ps.quantizer_k_max = get<int>(p, "quantizer_k_max", "preference");
  require(ps.quantizer_k_min >= 2 && ps.quantizer_k_max >= ps.quantizer_k_min, "preference.quantizer_k_min",
          "must be >= 2 and <= quantizer_k_max");
  const auto& sel = p["select"];
  ps.select.cumulative_threshold = get<double>(sel, "cumulative_threshold", "preference.select");
  ps.select.spread_floor = get<double>(sel, "spread_floor", "preference.select");
  ps.select.max_count = get<int>(sel, "max_count", "preference.select");
  require(ps.select.cumulative_threshold > 0 && ps.select.cumulative_threshold <= 1,
          "preference.select.cumulative_threshold", "must lie in (0, 1]");
  require(ps.select.max_count >= 0, "preference.select.max_count", "must be >= 0");
  const auto& ts = p["tsne"];
  ps.tsne.perplexity = get<double>(ts, "perplexity", "preference.tsne");
  ps.tsne.iterations = get<int>(ts, "iterations", "preference.tsne");
  ps.tsne.early_exaggeration = get<double>(ts, "early_exaggeration", "preference.tsne");
  ps.tsne.exaggeration_iterations = get<int>(ts, "exaggeration_iterations", "preference.tsne");
  ps.tsne.learning_rate = get<double>(ts, "learning_rate", "preference.tsne");
  require(ps.tsne.perplexity > 0, "preference.tsne.perplexity", "must be positive");
  require(ps.tsne.iterations > 0, "preference.tsne.iterations", "must be positive");
  ps.kmedoids.restarts = get<int>(p["kmedoids"], "restarts", "preference.kmedoids");
  require(ps.kmedoids.restarts >= 0, "preference.kmedoids.restarts", "must be >= 0");
  const auto& f = p["forest"];
  ps.forest.trees = get<int>(f, "trees", "preference.forest");
  ps.forest.max_features = get<int>(f, "max_features", "preference.forest");
  ps.forest.min_samples_split = get<int>(f, "min_samples_split", "preference.forest");
  require(ps.forest.trees > 0, "preference.forest.trees", "must be positive");
  ps.seed = c.seed;

  const auto& m = t["model"];
  try {
    c.model.variant = seqmodel::parse_variant(get<std::string>(m, "variant", "model"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("'model.variant': ") + e.what());
  }
  c.model.hidden = get<int>(m, "hidden", "model");
  c.model.layers = get<int>(m, "layers", "model");
  c.model.dropout = get<double>(m, "dropout", "model");
  c.model.mixtures = get<int>(m, "mixtures", "model");
  c.model.seed = c.seed;
  try {
    c.model.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }

  const auto& tr = t["train"];
  c.train.learning_rate = get<double>(tr, "learning_rate", "train");
  c.train.batch_size = get<int>(tr, "batch_size", "train");
  c.train.epochs = get<int>(tr, "epochs", "train");
  c.train.clip_norm = get<double>(tr, "clip_norm", "train");
  c.train.train_ratio = get<int>(tr, "train_ratio", "train");
  c.train.val_ratio = get<int>(tr, "val_ratio", "train");
  c.train.beta1 = get<double>(tr, "beta1", "train");
  c.train.beta2 = get<double>(tr, "beta2", "train");
  c.train.epsilon = get<double>(tr, "epsilon", "train");
  c.train.seed = c.seed;
  c.train.validate();

  const auto& ev = t["evaluate"];
  c.variants = get<std::vector<std::string>>(ev, "variants", "evaluate");
  require(c.variants.size() >= 2, "evaluate.variants", "must list at least two variants");
  for (const auto& v : c.variants) {
    try {
      seqmodel::parse_variant(v);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("'evaluate.variants': ") + e.what());
    }
  }
  c.traces = get<int>(ev, "traces", "evaluate");
  require(c.traces > 0, "evaluate.traces", "must be positive");

  c.predict_window = get<int>(t["predict"], "window", "predict");
  require(c.predict_window >= 0, "predict.window", "must be >= 0");

  const auto& ex = t["explain"];
  c.explain_instances = get<int>(ex, "instances", "explain");
  c.explain_background = get<int>(ex, "background", "explain");
  c.explain_permutations = get<int>(ex, "permutations", "explain");
  require(c.explain_instances > 0, "explain.instances", "must be positive");
  require(c.explain_background > 0, "explain.background", "must be positive");
  require(c.explain_permutations > 0, "explain.permutations", "must be positive");
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) throw ConfigError("override '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

}  // namespace drivepred::pipeline
