#include "drivepred/pipeline/preference_stage.hpp"

#include <algorithm>
#include <numeric>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/rng.hpp"

namespace drivepred::pipeline {

using nlohmann::json;

Eigen::MatrixXd indicator_matrix(const std::vector<features::IndicatorSet>& rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features::kIndicatorCount);
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = preference::indicator_row(rows[i]);
  return x;
}

PreferenceArtifacts identify_preferences(const std::vector<features::IndicatorSet>& rows,
                                         const PreferenceSettings& settings) {
  if (rows.empty()) throw SizeError("no indicator rows to cluster");
  const Eigen::MatrixXd all = indicator_matrix(rows);
  const auto n = static_cast<std::size_t>(all.rows());

  PreferenceArtifacts a;
  a.clustered.resize(n);
  std::iota(a.clustered.begin(), a.clustered.end(), std::size_t{0});
  if (settings.cluster_max > 0 && n > static_cast<std::size_t>(settings.cluster_max)) {
    auto rng = derived_rng(settings.seed, {0xc105});
    std::shuffle(a.clustered.begin(), a.clustered.end(), rng);
    a.clustered.resize(static_cast<std::size_t>(settings.cluster_max));
    std::sort(a.clustered.begin(), a.clustered.end());
  }
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(a.clustered.size()), all.cols());
  for (std::size_t i = 0; i < a.clustered.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(a.clustered[i]));
  }

  auto tsne = settings.tsne;
  tsne.seed = settings.seed;
  const auto emb = preference::reduce_tsne(preference::zscore_columns(sub), tsne);
  a.embedding = emb.embedding;
  a.kl = emb.kl.empty() ? 0.0 : emb.kl.back();
  auto km = settings.kmedoids;
  km.seed = settings.seed;
  a.model = preference::cluster_kmedoids(a.embedding, settings.k_min, settings.k_max, km);

  auto forest_opts = settings.forest;
  forest_opts.seed = settings.seed;
  a.ranking = preference::rank_importance(sub, a.model.labels, forest_opts);
  preference::RandomForest forest;
  forest.fit(sub, a.model.labels, forest_opts);

  const auto cols = preference::select_key_indicators(a.ranking, sub, settings.select);
  for (int c : cols) {
    const std::string name(features::kIndicatorNames[c]);
    a.selected.push_back(name);
    std::vector<double> values(sub.rows());
    for (Eigen::Index i = 0; i < sub.rows(); ++i) values[i] = sub(i, c);
    try {
      auto centroids = preference::quantize_indicator(values, settings.quantizer_k_min, settings.quantizer_k_max,
                                                      settings.seed);
      a.quantizers.names.push_back(name);
      a.quantizers.centroids.push_back(std::move(centroids));
    } catch (const DegenerateError&) {
      a.dropped.push_back(name);
    }
  }
  if (a.quantizers.names.empty()) throw DegenerateError("no key indicator could be quantized");

  a.labels.resize(n);
  a.vectors.resize(n);
  std::vector<int> pos(n, -1);
  for (std::size_t i = 0; i < a.clustered.size(); ++i) pos[a.clustered[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < n; ++i) {
    a.labels[i] = pos[i] >= 0 ? a.model.labels[static_cast<std::size_t>(pos[i])]
                              : forest.predict(all.row(static_cast<Eigen::Index>(i)));
    a.vectors[i] = preference::behavior_vector(rows[i], a.quantizers);
  }
  return a;
}

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

json PreferenceArtifacts::to_json() const {
  json j;
  j["format"] = "drivepred-preferences";
  j["version"] = kPreferenceArtifactVersion;
  j["clustered"] = clustered;
  j["embedding"] = matrix_rows(embedding);
  j["kl"] = kl;
  j["k"] = model.k;
  j["medoids"] = model.medoids;
  j["cluster_labels"] = model.labels;
  json sil = json::array();
  for (std::size_t i = 0; i < model.candidate_k.size(); ++i) {
    sil.push_back({{"k", model.candidate_k[i]}, {"silhouette", model.silhouettes[i]}});
  }
  j["silhouettes"] = std::move(sil);
  json imp = json::array();
  for (int c : ranking.order) {
    imp.push_back({{"indicator", std::string(features::kIndicatorNames[c])}, {"importance", ranking.importance[c]}});
  }
  j["importance"] = std::move(imp);
  j["selected"] = selected;
  j["dropped"] = dropped;
  json q = json::array();
  for (std::size_t i = 0; i < quantizers.names.size(); ++i) {
    q.push_back({{"indicator", quantizers.names[i]}, {"centroids", quantizers.centroids[i]}});
  }
  j["quantizers"] = std::move(q);
  j["labels"] = labels;
  j["vectors"] = vectors;
  return j;
}

PreferenceArtifacts PreferenceArtifacts::from_json(const json& j) {
  if (j.value("format", "") != "drivepred-preferences") throw SchemaError("not a preference artifact");
  if (j.value("version", 0) != kPreferenceArtifactVersion) throw SchemaError("unsupported preference artifact version");
  PreferenceArtifacts a;
  try {
    a.clustered = j.at("clustered").get<std::vector<std::size_t>>();
    const auto& e = j.at("embedding");
    a.embedding.resize(static_cast<Eigen::Index>(e.size()), 2);
    for (std::size_t i = 0; i < e.size(); ++i) {
      a.embedding(static_cast<Eigen::Index>(i), 0) = e[i].at(0).get<double>();
      a.embedding(static_cast<Eigen::Index>(i), 1) = e[i].at(1).get<double>();
    }
    a.kl = j.at("kl").get<double>();
    a.model.k = j.at("k").get<int>();
    a.model.medoids = j.at("medoids").get<std::vector<int>>();
    a.model.labels = j.at("cluster_labels").get<std::vector<int>>();
    for (const auto& s : j.at("silhouettes")) {
      a.model.candidate_k.push_back(s.at("k").get<int>());
      a.model.silhouettes.push_back(s.at("silhouette").get<double>());
    }
    a.ranking.importance.assign(features::kIndicatorCount, 0.0);
    for (const auto& r : j.at("importance")) {
      const auto idx = features::indicator_index(r.at("indicator").get<std::string>());
      if (!idx) throw SchemaError("unknown indicator in importance table");
      a.ranking.order.push_back(*idx);
      a.ranking.importance[*idx] = r.at("importance").get<double>();
    }
    a.selected = j.at("selected").get<std::vector<std::string>>();
    a.dropped = j.at("dropped").get<std::vector<std::string>>();
    for (const auto& q : j.at("quantizers")) {
      a.quantizers.names.push_back(q.at("indicator").get<std::string>());
      a.quantizers.centroids.push_back(q.at("centroids").get<std::vector<double>>());
    }
    a.labels = j.at("labels").get<std::vector<int>>();
    a.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed preference artifact: ") + e.what());
  }
  return a;
}

}  // namespace drivepred::pipeline
