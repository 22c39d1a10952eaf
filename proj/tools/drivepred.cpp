// drivepred: runs the preference-aware trajectory prediction pipeline.
//
//   drivepred all --config tools/configs/desk.json --out artifacts
//   drivepred train --set train.epochs=5
//
// Exit status: 0 success, 2 bad config, 3 missing upstream stage,
// 4 training diverged, 1 anything else.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drivepred/common/errors.hpp"
#include "drivepred/pipeline/config.hpp"
#include "drivepred/pipeline/manifest.hpp"
#include "drivepred/pipeline/stages.hpp"

namespace dp = drivepred::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Driving-preference-aware velocity prediction pipeline"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Global seed (applied after --set)");
  app.add_option("--set", sets, "Override a config key, e.g. train.epochs=5")->allow_extra_args(false);
  app.add_option("--out", out_dir, "Artifact directory");
  app.fallthrough();

  std::vector<std::string> chosen;
  for (const auto& s : dp::kStageNames) {
    app.add_subcommand(s, "Run the " + s + " stage")->callback([&chosen, s] { chosen.push_back(s); });
  }
  app.add_subcommand("all", "Run every stage in order")->callback([&chosen] { chosen.push_back("all"); });
  bool print_only = false;
  app.add_subcommand("config", "Print the resolved config and exit")->callback([&] { print_only = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    auto overrides = sets;
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    if (!out_dir.empty()) {
      nlohmann::json v = out_dir;
      overrides.push_back("paths.artifact_dir=" + v.dump());
    }
    const auto cfg = dp::load_config(config_path, overrides);
    if (print_only) {
      std::cout << cfg.to_json().dump(2) << '\n';
      return 0;
    }
    for (const auto& stage : chosen) {
      if (stage == "all") {
        dp::run_all(cfg, std::cout);
      } else {
        dp::run_stage(stage, cfg, std::cout);
      }
    }
    return 0;
  } catch (const drivepred::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const drivepred::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return 3;
  } catch (const drivepred::TrainingError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
