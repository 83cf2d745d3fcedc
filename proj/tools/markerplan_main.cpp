#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "markerplan/cli.hpp"
#include "markerplan/errors.hpp"

int main(int argc, char** argv) {
  using markerplan::RunConfig;
  RunConfig config;
  std::vector<double> thresholds;
  bool real_thresholds = false;

  CLI::App app{"Plan fiducial marker placements that maximize camera localizability."};
  app.set_version_flag("--version", markerplan::kVersion);
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scene", config.scene, "Scene description (JSON)")->required();
    sub->add_option("--out", config.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", config.seed, "Root seed for all randomness")->capture_default_str();
    sub->add_option("--jobs", config.jobs, "Worker threads; never changes the output")->capture_default_str();
  };
  auto planning = [&](CLI::App* sub) {
    sub->add_option("--k", config.k, "Number of markers to place")->capture_default_str();
    sub->add_option("--v", config.v, "Percentage of most visible markers that receive nonzero gain")
        ->capture_default_str();
  };
  auto evaluation = [&](CLI::App* sub) {
    sub->add_option("--n-test", config.n_test, "Number of test poses")->capture_default_str();
    sub->add_option("--thresholds", thresholds, "Recall thresholds: meters degrees")->expected(2);
    sub->add_flag("--real-thresholds", real_thresholds, "Use the looser 0.3 m / 10 deg thresholds");
    sub->add_flag("--uniform-sampling", config.uniform_sampling, "Sample test parents uniformly");
    sub->add_option("--versions", config.versions, "Random/uniform placements per k")->capture_default_str();
  };

  auto* discretize = app.add_subcommand("discretize", "Write the discretized camera and marker poses");
  common(discretize);
  auto* score = app.add_subcommand("score", "Write the localizability score heatmap");
  common(score);
  score->add_flag("--pgm", config.write_pgm, "Also write a PGM image");
  auto* plan = app.add_subcommand("plan", "Greedy marker placement with per-round gain heatmaps");
  common(plan);
  planning(plan);
  plan->add_flag("--pgm", config.write_pgm, "Also write PGM images");
  auto* eval = app.add_subcommand("eval", "Recall table for none / omp / random / uniform placements");
  common(eval);
  planning(eval);
  evaluation(eval);
  eval->add_option("--k-values", config.k_values, "Marker counts to evaluate (default: 0 and --k)");
  auto* sensitivity = app.add_subcommand("sensitivity", "Recall of the planned markers shifted along walls");
  common(sensitivity);
  planning(sensitivity);
  evaluation(sensitivity);
  sensitivity->add_option("--deviations", config.deviations, "Shift distances in meters")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  config.command = app.get_subcommands().front()->get_name();
  if (real_thresholds) {
    config.max_translation = 0.3;
    config.max_rotation_deg = 10.0;
  }
  if (!thresholds.empty()) {
    config.max_translation = thresholds[0];
    config.max_rotation_deg = thresholds[1];
  }

  try {
    markerplan::run_command(config);
  } catch (const markerplan::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
