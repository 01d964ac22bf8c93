#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "mpcdwr/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Space-time adaptive optimal control and receding-horizon driver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  bool compare_policies = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_override, "output directory (overrides the config)");
  };

  CLI::App* solve = app.add_subcommand("solve-ocp", "adaptive open-loop solve");
  add_common(solve);
  CLI::App* mpc = app.add_subcommand("mpc", "receding-horizon closed loop");
  add_common(mpc);
  mpc->add_flag("--compare-policies", compare_policies,
                "run both refinement policies and report both costs");
  CLI::App* decay = app.add_subcommand("decay", "sensitivity decay diagnostics");
  add_common(decay);
  CLI::App* sweep = app.add_subcommand("sweep", "closed-loop cost vs budget sweep");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    mpcdwr::RunConfig cfg = mpcdwr::load_config(config_path);
    if (solve->parsed()) cfg.experiment = mpcdwr::ExperimentKind::SolveOcp;
    if (mpc->parsed()) cfg.experiment = mpcdwr::ExperimentKind::Mpc;
    if (decay->parsed()) cfg.experiment = mpcdwr::ExperimentKind::Decay;
    if (sweep->parsed()) cfg.experiment = mpcdwr::ExperimentKind::Sweep;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (compare_policies) cfg.compare_policies = true;
    return mpcdwr::run(cfg);
  } catch (const mpcdwr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
