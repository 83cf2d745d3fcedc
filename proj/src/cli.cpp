#include "markerplan/cli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "markerplan/errors.hpp"
#include "markerplan/eval_sim.hpp"
#include "markerplan/io.hpp"
#include "markerplan/localizability.hpp"
#include "markerplan/planner.hpp"
#include "markerplan/rng.hpp"
#include "markerplan/workspace.hpp"

namespace markerplan {

namespace {

using nlohmann::json;

struct Artifacts {
  std::filesystem::path dir;
  std::map<std::string, std::string> written;

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic(dir / name, contents);
    written[name] = to_hex(fnv1a64(contents));
  }
};

void finish(const RunConfig& config, const std::string& scene_bytes, Artifacts& artifacts,
            json extra = json::object()) {
  json doc = manifest(config, scene_bytes);
  doc["artifacts"] = artifacts.written;
  for (auto& [key, value] : extra.items()) doc[key] = value;
  write_file_atomic(artifacts.dir / "manifest.json", doc.dump(2) + "\n");
}

struct Loaded {
  std::string bytes;
  std::unique_ptr<Workspace> ws;
};

Loaded load(const RunConfig& config) {
  Loaded out;
  out.bytes = read_file(config.scene);
  out.ws = std::make_unique<Workspace>(scene_from_json(json::parse(out.bytes)), SimilarityConfig{}, NoiseModel{},
                                       config.jobs);
  return out;
}

ExperimentConfig experiment_config(const RunConfig& config) {
  ExperimentConfig cfg;
  cfg.k_values = config.k_values.empty() ? std::vector<int>{0, config.k} : config.k_values;
  std::sort(cfg.k_values.begin(), cfg.k_values.end());
  cfg.k_values.erase(std::unique(cfg.k_values.begin(), cfg.k_values.end()), cfg.k_values.end());
  cfg.n_test = config.n_test;
  cfg.sampling = config.uniform_sampling ? SamplingMode::Uniform : SamplingMode::Weighted;
  cfg.versions = config.versions;
  cfg.seed = config.seed;
  cfg.max_translation = config.max_translation;
  cfg.max_rotation = deg2rad(config.max_rotation_deg);
  cfg.v = config.v;
  cfg.jobs = config.jobs;
  return cfg;
}

}  // namespace

void validate(const RunConfig& config) {
  if (config.scene.empty()) throw UsageError("--scene is required");
  if (!std::filesystem::is_regular_file(config.scene)) {
    throw UsageError("scene file not found: " + config.scene.string());
  }
  if (config.k < 0) throw UsageError("--k must be >= 0");
  for (int k : config.k_values) {
    if (k < 0) throw UsageError("--k-values entries must be >= 0");
  }
  if (!(config.v >= 0.0 && config.v <= 100.0)) throw UsageError("--v must lie in [0, 100]");
  if (config.n_test <= 0) throw UsageError("--n-test must be positive");
  if (config.versions <= 0) throw UsageError("--versions must be positive");
  if (!(config.max_translation > 0.0) || !(config.max_rotation_deg > 0.0)) {
    throw UsageError("--thresholds must be positive");
  }
  if (config.jobs < 1) throw UsageError("--jobs must be >= 1");
  if (config.out.empty()) throw UsageError("--out must not be empty");
  for (double d : config.deviations) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw UsageError("--deviations must be finite and >= 0");
  }
}

json manifest(const RunConfig& config, const std::string& scene_bytes) {
  json doc;
  doc["tool"] = "markerplan";
  doc["version"] = kVersion;
  doc["command"] = config.command;
  doc["scene_hash"] = to_hex(fnv1a64(scene_bytes));
  doc["scene_file"] = config.scene.filename().string();
  doc["k"] = config.k;
  doc["k_values"] = config.k_values;
  doc["v"] = config.v;
  doc["n_test"] = config.n_test;
  doc["versions"] = config.versions;
  doc["thresholds"] = {config.max_translation, config.max_rotation_deg};
  doc["sampling"] = config.uniform_sampling ? "uniform" : "weighted";
  doc["deviations"] = config.deviations;
  doc["seeds"] = {{"root", config.seed},
                  {"test_poses", derive_seed(config.seed, "test-poses")},
                  {"random_placement", derive_seed(config.seed, "random-placement")},
                  {"sensitivity", derive_seed(config.seed, "sensitivity")}};
  return doc;
}

std::string heatmap_csv(const GroundPlaneSpace& space, std::span<const double> per_location) {
  if (per_location.size() != space.camera_locations.size()) {
    throw ValidationError("one heatmap value per camera location required");
  }
  std::string out = "x,y,value\n";
  for (std::size_t i = 0; i < per_location.size(); ++i) {
    const Vec2& p = space.camera_locations[i];
    out += format_value(p.x()) + "," + format_value(p.y()) + "," + format_value(per_location[i]) + "\n";
  }
  return out;
}

std::string heatmap_pgm(const GroundPlaneSpace& space, std::span<const double> per_location) {
  if (per_location.size() != space.camera_locations.size()) {
    throw ValidationError("one heatmap value per camera location required");
  }
  const auto& grid = space.occupancy;
  // Means that include an unconstrained orientation sit far below any real score.
  const double floor = kUnconstrainedScore / (2.0 * space.orientations);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : per_location) {
    if (v <= floor) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<unsigned char> pixels(static_cast<std::size_t>(grid.width * grid.height), 0);
  for (std::size_t i = 0; i < per_location.size(); ++i) {
    const Vec2 rel = (space.camera_locations[i] - grid.origin) / grid.resolution;
    const int col = static_cast<int>(std::floor(rel.x()));
    const int row = static_cast<int>(std::floor(rel.y()));
    if (col < 0 || row < 0 || col >= grid.width || row >= grid.height) continue;
    double level = 1.0;
    if (per_location[i] > floor && hi > lo) level = 1.0 + 254.0 * (per_location[i] - lo) / (hi - lo);
    else if (per_location[i] > floor) level = 255.0;
    // Image rows run top-down, grid rows bottom-up.
    const auto idx = static_cast<std::size_t>((grid.height - 1 - row) * grid.width + col);
    pixels[idx] = static_cast<unsigned char>(std::lround(level));
  }
  std::string out = "P5\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
  out.append(pixels.begin(), pixels.end());
  return out;
}

void cmd_discretize(const RunConfig& config) {
  validate(config);
  const Loaded in = load(config);
  const auto& space = in.ws->space();
  Artifacts art{config.out, {}};
  art.write("space.json", space_to_json(space).dump(2) + "\n");
  std::string summary;
  summary += "grid " + std::to_string(space.occupancy.width) + "x" + std::to_string(space.occupancy.height) +
             " resolution " + format_value(space.occupancy.resolution) + "\n";
  summary += "free_cells " + std::to_string(space.occupancy.free_count()) + "\n";
  summary += "camera_poses " + std::to_string(space.camera_poses.size()) + "\n";
  summary += "marker_candidates " + std::to_string(space.marker_candidates.size()) + "\n";
  summary += "feature_points " + std::to_string(in.ws->points().size()) + "\n";
  for (int row = space.occupancy.height - 1; row >= 0; --row) {
    for (int col = 0; col < space.occupancy.width; ++col) summary += space.occupancy.is_occupied(col, row) ? '#' : '.';
    summary += '\n';
  }
  art.write("occupancy.txt", summary);
  finish(config, in.bytes, art);
}

void cmd_score(const RunConfig& config) {
  validate(config);
  const Loaded in = load(config);
  const auto& space = in.ws->space();
  const auto scores = in.ws->model().scores(space.placed_markers, config.jobs);
  const auto means = location_means(space, scores);
  Artifacts art{config.out, {}};
  art.write("heatmap.csv", heatmap_csv(space, means));
  std::string per_pose = "pose,x,y,yaw,score\n";
  for (std::size_t c = 0; c < scores.size(); ++c) {
    const Pose6D& p = space.camera_poses[c];
    per_pose += std::to_string(c) + "," + format_value(p.translation.x()) + "," + format_value(p.translation.y()) +
                "," + format_value(camera_yaw(p)) + "," + format_value(scores[c]) + "\n";
  }
  art.write("scores.csv", per_pose);
  if (config.write_pgm) art.write("heatmap.pgm", heatmap_pgm(space, means));
  finish(config, in.bytes, art);
}

void cmd_plan(const RunConfig& config) {
  validate(config);
  const Loaded in = load(config);
  const auto& space = in.ws->space();
  if (config.k > static_cast<int>(space.marker_candidates.size())) {
    throw UsageError("--k exceeds the " + std::to_string(space.marker_candidates.size()) + " marker candidates");
  }
  PlannerConfig pc;
  pc.k = config.k;
  pc.v = config.v;
  pc.jobs = config.jobs;
  pc.seed = config.seed;
  const PlacementPlan result = plan(in.ws->model(), pc);
  Artifacts art{config.out, {}};
  art.write("plan.json", plan_to_json(result).dump(2) + "\n");
  for (std::size_t r = 0; r < result.steps.size(); ++r) {
    const auto means = location_means(space, result.steps[r].camera_gains);
    art.write("gains_round_" + std::to_string(r) + ".csv", heatmap_csv(space, means));
    if (config.write_pgm) art.write("gains_round_" + std::to_string(r) + ".pgm", heatmap_pgm(space, means));
  }
  art.write("heatmap_final.csv", heatmap_csv(space, location_means(space, result.final_scores)));
  finish(config, in.bytes, art);
}

void cmd_eval(const RunConfig& config) {
  validate(config);
  const Loaded in = load(config);
  const ExperimentConfig cfg = experiment_config(config);
  if (cfg.k_values.back() > static_cast<int>(in.ws->space().marker_candidates.size())) {
    throw UsageError("k exceeds the number of marker candidates");
  }
  const ExperimentResult result = run_experiment(*in.ws, cfg);
  Artifacts art{config.out, {}};
  art.write("recall.csv", experiment_csv(result.rows));
  std::string summary = "strategy,k,mean_recall,std_recall\n";
  for (StrategyKind kind : cfg.strategies) {
    const std::string name = PlacementStrategy{kind, 0}.name();
    for (int k : cfg.k_values) {
      const auto [mean, sd] = result.recall_stats(name, k);
      summary += name + "," + std::to_string(k) + "," + format_value(mean) + "," + format_value(sd) + "\n";
    }
  }
  art.write("recall_summary.csv", summary);
  finish(config, in.bytes, art, {{"test_set_hash", to_hex(result.test_set_hash)}});
}

void cmd_sensitivity(const RunConfig& config) {
  validate(config);
  const Loaded in = load(config);
  const Workspace& ws = *in.ws;
  ExperimentConfig cfg = experiment_config(config);
  if (config.k > static_cast<int>(ws.space().marker_candidates.size())) {
    throw UsageError("--k exceeds the number of marker candidates");
  }
  const auto baseline = ws.model().scores(std::vector<int>{}, config.jobs);
  const auto tests = sample_test_poses(ws.space(), ws.scene().walls, baseline, cfg.n_test, cfg.sampling,
                                       derive_seed(cfg.seed, "test-poses"), cfg.perturbation);
  PlannerConfig pc;
  pc.k = config.k;
  pc.v = config.v;
  pc.jobs = config.jobs;
  pc.seed = config.seed;
  const auto planned = plan(ws.model(), pc).marker_indices();

  std::string csv = "scene,strategy,deviation,k,N,recall,mean_translation_error,mean_rotation_error\n";
  auto emit = [&](const std::string& strategy, double deviation, std::span<const Pose6D> markers, int k) {
    const auto results = evaluate_placement(ws, markers, tests, cfg.localizer, config.jobs);
    const auto row = summarize(ws.scene().name, strategy, 0, k, results, cfg.max_translation, cfg.max_rotation);
    csv += row.scene + "," + strategy + "," + format_value(deviation) + "," + std::to_string(k) + "," +
           std::to_string(row.n) + "," + format_value(row.recall) + "," +
           format_value(row.mean_translation_error) + "," +
           format_value(row.mean_rotation_error) + "\n";
  };
  emit("none", 0.0, {}, 0);
  const std::uint64_t shift_seed = derive_seed(cfg.seed, "sensitivity");
  for (double d : config.deviations) {
    const auto markers = d == 0.0 ? marker_poses(ws.space(), planned) : shifted_markers(ws, planned, d, shift_seed);
    emit("omp", d, markers, static_cast<int>(planned.size()));
  }
  Artifacts art{config.out, {}};
  art.write("sensitivity.csv", csv);
  finish(config, in.bytes, art, {{"test_set_hash", to_hex(test_set_hash(tests))}});
}

void run_command(const RunConfig& config) {
  if (config.command == "discretize") return cmd_discretize(config);
  if (config.command == "score") return cmd_score(config);
  if (config.command == "plan") return cmd_plan(config);
  if (config.command == "eval") return cmd_eval(config);
  if (config.command == "sensitivity") return cmd_sensitivity(config);
  throw UsageError("unknown command: " + config.command);
}

}  // namespace markerplan
