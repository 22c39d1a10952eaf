#include "drivepred/pipeline/stages.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "drivepred/common/errors.hpp"
#include "drivepred/common/fileio.hpp"
#include "drivepred/common/rng.hpp"
#include "drivepred/common/text.hpp"
#include "drivepred/explain/model_explainer.hpp"
#include "drivepred/features/indicators.hpp"
#include "drivepred/pipeline/manifest.hpp"
#include "drivepred/pipeline/preference_stage.hpp"
#include "drivepred/pipeline/svg.hpp"
#include "drivepred/preference/kmedoids.hpp"
#include "drivepred/seqmodel/checkpoint.hpp"
#include "drivepred/seqmodel/mixture.hpp"
#include "drivepred/train_eval/metrics.hpp"
#include "drivepred/trajdata/preprocess.hpp"
#include "drivepred/trajdata/scene.hpp"
#include "drivepred/trajdata/track_io.hpp"

namespace drivepred::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kStageNames = {"gen-synth", "ingest",   "features", "cluster", "train",
                                              "predict",   "evaluate", "explain",  "report"};

namespace {

struct Ctx {
  const PipelineConfig& cfg;
  fs::path dir;
  std::ostream& log;
  std::vector<std::pair<std::string, std::string>> outputs;

  void emit(const std::string& rel, std::string content) { outputs.emplace_back(rel, std::move(content)); }
  std::string read(const std::string& rel) const { return read_file(dir / rel); }
};

struct StageDef {
  std::vector<std::string> upstream;
  std::vector<std::string> inputs;  // relative to the artifact dir, or an external path
  json slice;                       // config that affects the stage
  std::function<void(Ctx&)> run;
};

// ---------------------------------------------------------------- loaders

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  double num(std::size_t r, std::size_t c) const {
    double v = 0.0;
    if (!parse_double(rows[r].at(c), v)) throw SchemaError("bad number '" + rows[r].at(c) + "'");
    return v;
  }
};

Table parse_table(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    std::vector<std::string> row;
    for (auto& f : fields) row.emplace_back(trim(f));
    if (first) {
      t.header = std::move(row);
      first = false;
    } else {
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

struct WindowSet {
  std::vector<trajdata::Track> tracks;
  std::vector<trajdata::SceneWindow> windows;
};

WindowSet load_windows(const Ctx& ctx) {
  WindowSet ws;
  std::istringstream tin(ctx.read("ingest/tracks.csv"));
  ws.tracks = trajdata::read_tracks(tin);
  const trajdata::SceneIndex index(ws.tracks);
  const auto t = parse_table(ctx.read("ingest/windows.csv"));
  const auto ct = t.col("track_id"), cs = t.col("start_frame");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ws.windows.push_back(trajdata::make_window(index, static_cast<std::int64_t>(t.num(r, ct)),
                                               static_cast<std::int64_t>(t.num(r, cs))));
  }
  return ws;
}

struct SampleSet {
  std::vector<train_eval::Sample> samples;
  PreferenceArtifacts prefs;
};

SampleSet load_samples(const Ctx& ctx) {
  const auto ws = load_windows(ctx);
  SampleSet s;
  const json j = json::parse(ctx.read("cluster/preferences.json"));
  s.prefs = PreferenceArtifacts::from_json(j);
  if (s.prefs.labels.size() != ws.windows.size() || s.prefs.vectors.size() != ws.windows.size()) {
    throw SchemaError("cluster output does not match the ingested windows; rerun features and cluster");
  }
  for (std::size_t i = 0; i < ws.windows.size(); ++i) {
    auto x = train_eval::sample_from_window(ws.windows[i]);
    x.preference = s.prefs.labels[i];
    x.behavior = Eigen::Map<const Eigen::VectorXd>(s.prefs.vectors[i].data(),
                                                   static_cast<Eigen::Index>(s.prefs.vectors[i].size()));
    s.samples.push_back(std::move(x));
  }
  return s;
}

train_eval::Split split_of(const PipelineConfig& cfg, const std::vector<train_eval::Sample>& samples) {
  return train_eval::split(samples, cfg.train.train_ratio, cfg.train.val_ratio, cfg.seed);
}

seqmodel::ModelConfig model_for(const PipelineConfig& cfg, const PreferenceArtifacts& prefs, seqmodel::Variant v) {
  auto m = cfg.model;
  m.variant = v;
  m.behavior_dim = static_cast<int>(prefs.quantizers.names.size());
  m.preference_count = prefs.model.k;
  m.validate();
  return m;
}

// ---------------------------------------------------------------- stages

void run_gen_synth(Ctx& ctx) {
  const auto tracks = trajdata::gen_synthetic(ctx.cfg.synth);
  std::ostringstream out;
  trajdata::write_tracks(out, tracks);
  ctx.log << "gen-synth: " << tracks.size() << " tracks\n";
  ctx.emit("gen-synth/tracks.csv", out.str());
}

void run_ingest(Ctx& ctx) {
  const std::string path =
      ctx.cfg.tracks_csv.empty() ? (ctx.dir / "gen-synth/tracks.csv").string() : ctx.cfg.tracks_csv;
  auto tracks = trajdata::load_tracks(path);
  for (auto& t : tracks) t = trajdata::preprocess(t);
  // Synthetic scenes label their target vehicles; only those are predicted.
  const bool labeled = std::any_of(tracks.begin(), tracks.end(), [](const auto& t) { return t.archetype.has_value(); });
  std::ostringstream tout;
  trajdata::write_tracks(tout, tracks, true);
  // Windows are cut from the written tracks so later stages see identical data.
  std::istringstream tin(tout.str());
  const auto written = trajdata::read_tracks(tin);
  const trajdata::SceneIndex index(written);
  trajdata::WindowOptions opt;
  opt.stride = ctx.cfg.window_stride;
  opt.labeled_targets_only = labeled;
  const auto windows = trajdata::window_samples(index, opt);
  if (windows.empty()) throw SizeError("ingest: no track is long enough for a full window");
  std::ostringstream wout;
  wout << "window,track_id,start_frame,archetype\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    wout << i << ',' << windows[i].track_id << ',' << windows[i].start_frame << ','
         << (windows[i].archetype ? *windows[i].archetype : -1) << '\n';
  }
  ctx.log << "ingest: " << tracks.size() << " tracks, " << windows.size() << " windows\n";
  ctx.emit("ingest/tracks.csv", tout.str());
  ctx.emit("ingest/windows.csv", wout.str());
}

void run_features(Ctx& ctx) {
  const auto ws = load_windows(ctx);
  std::vector<features::IndicatorSet> rows;
  rows.reserve(ws.windows.size());
  for (const auto& w : ws.windows) rows.push_back(features::extract_all(w));
  std::ostringstream out;
  features::write_indicator_csv(out, ws.windows, rows);
  ctx.log << "features: " << rows.size() << " windows x " << features::kIndicatorCount << " indicators\n";
  ctx.emit("features/indicators.csv", out.str());
}

void run_cluster(Ctx& ctx) {
  std::istringstream in(ctx.read("features/indicators.csv"));
  const auto table = features::read_indicator_csv(in);
  const auto win = parse_table(ctx.read("ingest/windows.csv"));
  if (win.rows.size() != table.rows.size()) throw SchemaError("indicator table does not match the windows; rerun features");
  const auto ca = win.col("archetype");

  const auto art = identify_preferences(table.rows, ctx.cfg.preference);
  json j = art.to_json();
  json ids = json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i) ids.push_back({table.track_id[i], table.start_frame[i]});
  j["windows"] = std::move(ids);
  ctx.emit("cluster/preferences.json", j.dump(1) + "\n");

  std::vector<int> arche;
  for (std::size_t r = 0; r < win.rows.size(); ++r) arche.push_back(static_cast<int>(win.num(r, ca)));
  std::ostringstream emb;
  emb << "window,x,y,cluster,archetype\n";
  std::vector<int> truth;
  for (std::size_t i = 0; i < art.clustered.size(); ++i) {
    const auto w = art.clustered[i];
    emb << w << ',' << format_double(art.embedding(static_cast<Eigen::Index>(i), 0)) << ','
        << format_double(art.embedding(static_cast<Eigen::Index>(i), 1)) << ',' << art.model.labels[i] << ','
        << arche[w] << '\n';
    truth.push_back(arche[w]);
  }
  ctx.emit("cluster/embedding.csv", emb.str());

  std::ostringstream sil;
  sil << "k,silhouette\n";
  for (std::size_t i = 0; i < art.model.candidate_k.size(); ++i) {
    sil << art.model.candidate_k[i] << ',' << format_double(art.model.silhouettes[i]) << '\n';
  }
  ctx.emit("cluster/silhouette.csv", sil.str());

  std::ostringstream imp;
  imp << "rank,indicator,importance\n";
  for (std::size_t r = 0; r < art.ranking.order.size(); ++r) {
    const int c = art.ranking.order[r];
    imp << r + 1 << ',' << features::kIndicatorNames[c] << ',' << format_double(art.ranking.importance[c]) << '\n';
  }
  ctx.emit("cluster/importance.csv", imp.str());

  std::ostringstream key;
  key << "indicator,centroids\n";
  for (std::size_t i = 0; i < art.quantizers.names.size(); ++i) {
    std::vector<std::string> cs;
    for (double c : art.quantizers.centroids[i]) cs.push_back(format_double(c));
    key << art.quantizers.names[i] << ',' << join(cs, ";") << '\n';
  }
  ctx.emit("cluster/key_indicators.csv", key.str());

  json summary = {{"k", art.model.k}, {"windows", table.rows.size()}, {"clustered", art.clustered.size()},
                  {"selected", art.selected}, {"dropped", art.dropped}, {"kl", art.kl}};
  if (std::all_of(truth.begin(), truth.end(), [](int a) { return a >= 0; })) {
    summary["adjusted_rand_index"] = preference::adjusted_rand_index(art.model.labels, truth);
  }
  ctx.emit("cluster/summary.json", summary.dump(1) + "\n");
  ctx.log << "cluster: K=" << art.model.k << ", key indicators " << join(art.quantizers.names, " ") << '\n';
}

void run_train(Ctx& ctx) {
  const auto set = load_samples(ctx);
  const auto sp = split_of(ctx.cfg, set.samples);
  const auto model = model_for(ctx.cfg, set.prefs, ctx.cfg.model.variant);
  ctx.log << "train: " << seqmodel::variant_name(model.variant) << " on " << sp.train.size() << " windows, "
          << sp.validation.size() << " for validation\n";
  auto result = train_eval::train(model, set.samples, sp, ctx.cfg.train, [&](const train_eval::EpochLog& e) {
    ctx.log << "  epoch " << e.epoch << "/" << ctx.cfg.train.epochs << "  train " << format_double(e.train_loss, 6)
            << "  val " << format_double(e.val_loss, 6) << '\n';
  });
  result.best.extra["key_indicators"] = set.prefs.quantizers.names;
  result.best.extra["preference_k"] = set.prefs.model.k;
  std::ostringstream ck, hist;
  seqmodel::write_checkpoint(ck, result.best);
  train_eval::write_history_csv(hist, result.history);
  ctx.emit("train/model.json", ck.str());
  ctx.emit("train/history.csv", hist.str());
  ctx.log << "train: best epoch " << result.best_epoch << '\n';
}

seqmodel::Checkpoint load_model(const Ctx& ctx) {
  std::istringstream in(ctx.read("train/model.json"));
  return seqmodel::read_checkpoint(in);
}

void run_predict(Ctx& ctx) {
  const auto ckpt = load_model(ctx);
  const auto set = load_samples(ctx);
  const auto sp = split_of(ctx.cfg, set.samples);
  const auto w = static_cast<std::size_t>(ctx.cfg.predict_window);
  if (w >= sp.validation.size()) {
    throw ConfigError("'predict.window' is " + std::to_string(w) + " but there are only " +
                      std::to_string(sp.validation.size()) + " validation windows");
  }
  const auto i = sp.validation[w];
  const seqmodel::Network net(ckpt.config, ckpt.params);
  const auto pred = net.predict(train_eval::assemble(set.samples, {i}, ckpt.norm, ckpt.config, false)).front();
  std::ostringstream out, truth, info;
  out << "step,mean,p2.5,p97.5\n";
  truth << "step,horizon_s,truth\n";
  for (std::size_t t = 0; t < pred.steps.size(); ++t) {
    const auto& m = pred.steps[t];
    out << t + 1 << ',' << format_double(m.pi.dot(m.mu)) << ',' << format_double(seqmodel::mixture_quantile(m, 0.025))
        << ',' << format_double(seqmodel::mixture_quantile(m, 0.975)) << '\n';
    truth << t + 1 << ',' << format_double(0.1 * static_cast<double>(t + 1), 4) << ','
          << format_double(set.samples[i].future[t]) << '\n';
  }
  info << "variant,track_id,start_frame,anchor\n"
       << seqmodel::variant_name(ckpt.config.variant) << ',' << set.samples[i].track_id << ','
       << set.samples[i].start_frame << ',' << format_double(set.samples[i].anchor) << '\n';
  ctx.emit("predict/prediction.csv", out.str());
  ctx.emit("predict/truth.csv", truth.str());
  ctx.emit("predict/window.csv", info.str());
  ctx.log << "predict: window " << w << " (track " << set.samples[i].track_id << ")\n";
}

void run_evaluate(Ctx& ctx) {
  const auto set = load_samples(ctx);
  const auto sp = split_of(ctx.cfg, set.samples);
  std::vector<seqmodel::ModelConfig> variants;
  for (const auto& v : ctx.cfg.variants) variants.push_back(model_for(ctx.cfg, set.prefs, seqmodel::parse_variant(v)));
  ctx.log << "evaluate: " << variants.size() << " variants, " << sp.train.size() << " training and "
          << sp.validation.size() << " validation windows\n";
  train_eval::CompareOptions opt;
  opt.traces = ctx.cfg.traces;
  opt.eval_seed = ctx.cfg.seed;
  std::vector<train_eval::TrainResult> trained;
  const auto report = train_eval::compare(variants, set.samples, sp, ctx.cfg.train, opt, &trained);
  std::ostringstream csv, hz, hist;
  train_eval::write_report_csv(csv, report);
  train_eval::write_horizon_csv(hz, report);
  hist << "variant,epoch,train_loss,val_loss\n";
  for (std::size_t k = 0; k < trained.size(); ++k) {
    for (const auto& e : trained[k].history) {
      hist << report.rows[k].variant << ',' << e.epoch << ',' << format_double(e.train_loss, 12) << ','
           << format_double(e.val_loss, 12) << '\n';
    }
  }
  const auto table = train_eval::format_report_table(report);
  ctx.emit("evaluate/report.csv", csv.str());
  ctx.emit("evaluate/horizon.csv", hz.str());
  ctx.emit("evaluate/history.csv", hist.str());
  ctx.emit("evaluate/table.txt", table);
  ctx.log << table;
}

void run_explain(Ctx& ctx) {
  const auto ckpt = load_model(ctx);
  const auto set = load_samples(ctx);
  const auto sp = split_of(ctx.cfg, set.samples);
  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(ctx.cfg.explain_background), sp.train.size());
  std::vector<std::size_t> bg_idx;
  for (std::size_t k = 0; k < nb; ++k) bg_idx.push_back(sp.train[k * sp.train.size() / nb]);
  const auto bg = explain::background_sample(set.samples, bg_idx);
  const explain::ModelExplainer ex(ckpt);
  const auto spec = explain::default_channels(ckpt.config, set.prefs.quantizers.names);
  const std::size_t ni = std::min<std::size_t>(static_cast<std::size_t>(ctx.cfg.explain_instances), sp.validation.size());
  std::vector<explain::Attribution> all;
  for (std::size_t k = 0; k < ni; ++k) {
    auto rng = derived_rng(ctx.cfg.seed, {0xe4, static_cast<std::uint64_t>(k)});
    all.push_back(ex.explain(set.samples[sp.validation[k]], bg, spec, ctx.cfg.explain_permutations, rng()));
  }
  const auto summary = explain::summarize(all);
  std::ostringstream a, s;
  explain::write_attribution_csv(a, all);
  explain::write_summary_csv(s, summary);
  ctx.emit("explain/attributions.csv", a.str());
  ctx.emit("explain/summary.csv", s.str());
  ctx.log << "explain: " << ni << " instances, " << spec.groups.size() << " groups; top group "
          << summary.ranking.front().first << '\n';
}

std::vector<double> column(const Table& t, const std::string& name) {
  std::vector<double> out;
  const auto c = t.col(name);
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(t.num(r, c));
  return out;
}

void run_report(Ctx& ctx) {
  ctx.emit("report/metrics.csv", ctx.read("evaluate/report.csv"));
  ctx.emit("report/metrics.txt", ctx.read("evaluate/table.txt"));

  {
    const auto t = parse_table(ctx.read("cluster/embedding.csv"));
    SvgPlot p("Driving preferences in the t-SNE embedding", "t-SNE 1", "t-SNE 2");
    const auto x = column(t, "x"), y = column(t, "y"), k = column(t, "cluster");
    const int kmax = static_cast<int>(*std::max_element(k.begin(), k.end()));
    for (int c = 0; c <= kmax; ++c) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (static_cast<int>(k[i]) == c) xs.push_back(x[i]), ys.push_back(y[i]);
      }
      p.points(xs, ys, {}, c);
    }
    ctx.emit("report/fig_embedding.svg", p.render());
  }
  {
    const auto t = parse_table(ctx.read("cluster/silhouette.csv"));
    SvgPlot p("Silhouette coefficient by cluster count", "K", "silhouette");
    p.line(column(t, "k"), column(t, "silhouette"), 0, "");
    p.points(column(t, "k"), column(t, "silhouette"), {}, 0, 3.5);
    ctx.emit("report/fig_silhouette.svg", p.render());
  }
  {
    const auto t = parse_table(ctx.read("cluster/importance.csv"));
    std::vector<std::string> names;
    for (const auto& r : t.rows) names.push_back(r.at(t.col("indicator")));
    SvgPlot p("Indicator importance", "mean decrease in impurity", "", 640, 120 + 14 * static_cast<int>(names.size()));
    p.hbars(names, column(t, "importance"), 0);
    ctx.emit("report/fig_importance.svg", p.render());
  }
  {
    const auto t = parse_table(ctx.read("predict/prediction.csv"));
    const auto tr = parse_table(ctx.read("predict/truth.csv"));
    std::vector<double> h = column(tr, "horizon_s");
    SvgPlot p("Predicted velocity with 95% band", "horizon (s)", "velocity (m/s)");
    p.band(h, column(t, "p2.5"), column(t, "p97.5"), 0, "95% band");
    p.line(h, column(t, "mean"), 0, "predicted mean");
    p.line(h, column(tr, "truth"), 1, "ground truth");
    ctx.emit("report/fig_prediction.svg", p.render());
  }
  {
    const auto t = parse_table(ctx.read("evaluate/horizon.csv"));
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by;
    std::vector<std::string> order;
    const auto cv = t.col("variant"), ch = t.col("horizon_s"), cr = t.col("rwse");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& v = t.rows[r][cv];
      if (!by.count(v)) order.push_back(v);
      by[v].first.push_back(t.num(r, ch));
      by[v].second.push_back(t.num(r, cr));
    }
    SvgPlot p("RWSE by prediction horizon", "horizon (s)", "RWSE (m/s)");
    for (std::size_t k = 0; k < order.size(); ++k) p.line(by[order[k]].first, by[order[k]].second, static_cast<int>(k), order[k]);
    ctx.emit("report/fig_horizon.svg", p.render());
  }
  {
    const auto t = parse_table(ctx.read("evaluate/history.csv"));
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by;
    std::vector<std::string> order;
    const auto cv = t.col("variant"), ce = t.col("epoch"), cl = t.col("val_loss");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& v = t.rows[r][cv];
      if (!by.count(v)) order.push_back(v);
      by[v].first.push_back(t.num(r, ce));
      by[v].second.push_back(t.num(r, cl));
    }
    SvgPlot p("Validation loss", "epoch", "loss");
    for (std::size_t k = 0; k < order.size(); ++k) p.line(by[order[k]].first, by[order[k]].second, static_cast<int>(k), order[k]);
    ctx.emit("report/fig_learning.svg", p.render());
  }
  {
    const auto s = parse_table(ctx.read("explain/summary.csv"));
    const auto a = parse_table(ctx.read("explain/attributions.csv"));
    std::vector<std::string> groups;
    std::map<std::string, std::size_t> row;
    for (const auto& r : s.rows) {
      row[r.at(s.col("group"))] = groups.size();
      groups.push_back(r.at(s.col("group")));
    }
    const auto cg = a.col("group"), cp = a.col("phi"), cvv = a.col("value");
    std::map<std::string, std::pair<double, double>> range;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      auto& rg = range.try_emplace(a.rows[r][cg], a.num(r, cvv), a.num(r, cvv)).first->second;
      rg.first = std::min(rg.first, a.num(r, cvv));
      rg.second = std::max(rg.second, a.num(r, cvv));
    }
    std::vector<double> xs, ys, cs;
    std::map<std::string, int> seen;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      const auto& g = a.rows[r][cg];
      const int n = seen[g]++;
      // Deterministic vertical spread within the row.
      const double jitter = 0.3 * (static_cast<double>((n * 37) % 13) / 12.0 - 0.5);
      xs.push_back(a.num(r, cp));
      ys.push_back(static_cast<double>(row.at(g)) + jitter);
      const auto& rg = range[g];
      cs.push_back(rg.second > rg.first ? (a.num(r, cvv) - rg.first) / (rg.second - rg.first) : 0.5);
    }
    SvgPlot p("Shapley values (color: feature value, low blue to high red)", "Shapley value (m/s)", "", 720,
              120 + 18 * static_cast<int>(groups.size()));
    p.categories(groups);
    p.points(xs, ys, cs, 0, 2.5);
    ctx.emit("report/fig_shap.svg", p.render());
  }
  ctx.log << "report: tables and figures written to " << (ctx.dir / "report").string() << '\n';
}

// ---------------------------------------------------------------- plumbing

StageDef stage_def(const std::string& name, const PipelineConfig& cfg) {
  const json all = cfg.to_json();
  const json seed = all["seed"];
  const std::vector<std::string> ingest_out = {"ingest/tracks.csv", "ingest/windows.csv"};
  const std::vector<std::string> samples_in = {"ingest/tracks.csv", "ingest/windows.csv", "cluster/preferences.json"};
  const json split_slice = {{"train_ratio", cfg.train.train_ratio}, {"val_ratio", cfg.train.val_ratio}};
  if (name == "gen-synth") return {{}, {}, {{"seed", seed}, {"synth", all["synth"]}}, run_gen_synth};
  if (name == "ingest") {
    if (cfg.tracks_csv.empty()) return {{"gen-synth"}, {"gen-synth/tracks.csv"}, {{"windows", all["windows"]}}, run_ingest};
    return {{}, {cfg.tracks_csv}, {{"windows", all["windows"]}}, run_ingest};
  }
  if (name == "features") return {{"ingest"}, ingest_out, json::object(), run_features};
  if (name == "cluster") {
    return {{"features"},
            {"features/indicators.csv", "ingest/windows.csv"},
            {{"seed", seed}, {"preference", all["preference"]}},
            run_cluster};
  }
  if (name == "train") return {{"cluster"}, samples_in, {{"seed", seed}, {"model", all["model"]}, {"train", all["train"]}}, run_train};
  if (name == "predict") {
    auto in = samples_in;
    in.push_back("train/model.json");
    return {{"train"}, in, {{"seed", seed}, {"predict", all["predict"]}, {"split", split_slice}}, run_predict};
  }
  if (name == "evaluate") {
    json model = all["model"];
    model.erase("variant");
    return {{"cluster"},
            samples_in,
            {{"seed", seed}, {"model", model}, {"train", all["train"]}, {"evaluate", all["evaluate"]}},
            run_evaluate};
  }
  if (name == "explain") {
    auto in = samples_in;
    in.push_back("train/model.json");
    return {{"train"}, in, {{"seed", seed}, {"explain", all["explain"]}, {"split", split_slice}}, run_explain};
  }
  if (name == "report") {
    return {{"cluster", "predict", "evaluate", "explain"},
            {"cluster/embedding.csv", "cluster/silhouette.csv", "cluster/importance.csv", "predict/prediction.csv",
             "predict/truth.csv", "evaluate/report.csv", "evaluate/table.txt", "evaluate/horizon.csv",
             "evaluate/history.csv", "explain/summary.csv", "explain/attributions.csv"},
            json::object(),
            run_report};
  }
  throw ConfigError("unknown stage '" + name + "'; expected one of " + join(kStageNames, ", "));
}

bool stage_complete(const fs::path& dir, const std::string& stage) {
  const auto mpath = dir / stage / "manifest.json";
  if (!fs::exists(mpath)) return false;
  try {
    const auto m = Manifest::from_json(json::parse(read_file(mpath)));
    for (const auto& o : m.outputs) {
      if (!fs::exists(dir / o.path)) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void check_upstream(const std::string& stage, const PipelineConfig& cfg, const fs::path& dir) {
  std::set<std::string> needed;
  std::vector<std::string> todo = stage_def(stage, cfg).upstream;
  while (!todo.empty()) {
    const auto s = todo.back();
    todo.pop_back();
    if (!needed.insert(s).second) continue;
    for (const auto& r : stage_def(s, cfg).upstream) todo.push_back(r);
  }
  for (const auto& s : kStageNames) {
    if (needed.count(s) && !stage_complete(dir, s)) {
      throw DependencyError(s, "stage '" + stage + "' needs the outputs of '" + s + "'; run `drivepred " + s +
                                   "` first");
    }
  }
}

fs::path input_path(const fs::path& dir, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : (fs::exists(dir / q) ? dir / q : q);
}

}  // namespace

StageOutcome run_stage(const std::string& stage, const PipelineConfig& cfg, std::ostream& log) {
  const auto def = stage_def(stage, cfg);
  const fs::path dir(cfg.artifact_dir);
  ArtifactLock lock(dir);
  check_upstream(stage, cfg, dir);

  Manifest m;
  m.stage = stage;
  m.seed = cfg.seed;
  m.config_hash = sha256_hex(json{{"stage", stage}, {"version", 1}, {"config", def.slice}}.dump());
  for (const auto& in : def.inputs) {
    const auto p = input_path(dir, in);
    if (!fs::exists(p)) throw LookupError("stage '" + stage + "' input '" + in + "' does not exist");
    m.inputs.push_back({in, sha256_file(p)});
  }

  StageOutcome outcome;
  outcome.stage = stage;
  const auto mpath = dir / stage / "manifest.json";
  if (fs::exists(mpath)) {
    try {
      const auto old = Manifest::from_json(json::parse(read_file(mpath)));
      bool same = old.config_hash == m.config_hash && old.seed == m.seed && old.inputs.size() == m.inputs.size();
      for (std::size_t i = 0; same && i < m.inputs.size(); ++i) {
        same = old.inputs[i].path == m.inputs[i].path && old.inputs[i].sha256 == m.inputs[i].sha256;
      }
      for (const auto& o : old.outputs) {
        if (!same) break;
        same = fs::exists(dir / o.path) && sha256_file(dir / o.path) == o.sha256;
      }
      if (same) {
        outcome.skipped = true;
        for (const auto& o : old.outputs) outcome.outputs.push_back(o.path);
        log << stage << ": up to date\n";
        return outcome;
      }
    } catch (const SchemaError&) {
    } catch (const json::exception&) {
    }
  }

  Ctx ctx{cfg, dir, log, {}};
  def.run(ctx);
  for (const auto& [rel, content] : ctx.outputs) {
    write_file_atomic(dir / rel, content);
    m.outputs.push_back({rel, sha256_hex(content)});
    outcome.outputs.push_back(rel);
  }
  write_file_atomic(mpath, m.to_json().dump(2) + "\n");
  return outcome;
}

std::vector<StageOutcome> run_all(const PipelineConfig& cfg, std::ostream& log) {
  std::vector<StageOutcome> out;
  for (const auto& s : kStageNames) {
    if (s == "gen-synth" && !cfg.tracks_csv.empty()) continue;
    out.push_back(run_stage(s, cfg, log));
  }
  return out;
}

}  // namespace drivepred::pipeline
