// Experiment runner: one subcommand per experiment kind, each reading a
// declarative config and writing report.json plus CSV/SVG artifacts.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "harmap/errors.hpp"
#include "harmap/runner.hpp"
#include "harmap/version.hpp"

namespace {

struct SubArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_scale;
};

void add_common(CLI::App* sub, SubArgs& args) {
  sub->add_option("--config", args.config_path, "experiment config file (TOML-style)")
      ->required();
  sub->add_option("--out", args.out_dir, "output directory (overrides the config)");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t v) { args.seed = v; },
      "seed override (beats config and HARMAP_SEED)");
  sub->add_option_function<double>(
      "--tol-scale", [&args](double v) { args.tol_scale = v; },
      "multiplier applied to every check tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harmonic-map rigidity experiment runner"};
  app.set_version_flag("--version", HARMAP_VERSION_STRING);
  app.require_subcommand(1);

  // subcommand -> the experiment kind its config must declare
  const std::pair<const char*, harmap::ExperimentKind> kinds[] = {
      {"curvature", harmap::ExperimentKind::Curvature},
      {"bochner", harmap::ExperimentKind::Bochner},
      {"lemma", harmap::ExperimentKind::LemmaCampaign},
      {"flow", harmap::ExperimentKind::Flow},
      {"prescribe", harmap::ExperimentKind::Prescription},
  };
  SubArgs args[5];
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i].first, "run a " +
                                                           std::string(kinds[i].first) +
                                                           " experiment");
    add_common(sub, args[i]);
  }

  // Usage problems share the config-error exit code; help and version stay 0.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : harmap::kExitConfigError;
  }

  for (int i = 0; i < 5; ++i) {
    if (!app.got_subcommand(kinds[i].first)) continue;
    harmap::ExperimentConfig config;
    try {
      config = harmap::load_config_file(args[i].config_path);
      if (config.kind != kinds[i].second) {
        std::cerr << "config error: config declares experiment '"
                  << harmap::experiment_name(config.kind) << "' but the subcommand is '"
                  << kinds[i].first << "'\n";
        return harmap::kExitConfigError;
      }
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return harmap::kExitConfigError;
    }
    harmap::RunOverrides overrides;
    overrides.seed = args[i].seed;
    if (!args[i].out_dir.empty()) overrides.out_dir = args[i].out_dir;
    overrides.tol_scale = args[i].tol_scale;
    return harmap::run_loaded(std::move(config), overrides, std::cerr);
  }
  return harmap::kExitConfigError;
}
