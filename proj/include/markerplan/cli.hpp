#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "markerplan/scene.hpp"

namespace markerplan {

inline constexpr const char* kVersion = "1.0.0";

struct RunConfig {
  std::string command;
  std::filesystem::path scene;
  std::filesystem::path out = "out";
  int k = 5;
  /// Marker counts evaluated by `eval`; defaults to {0, k}.
  std::vector<int> k_values;
  double v = 90.0;
  std::uint64_t seed = 1;
  int n_test = 500;
  int versions = 5;
  double max_translation = 0.05;  // meters
  double max_rotation_deg = 5.0;
  bool uniform_sampling = false;
  /// Marker shifts (meters) evaluated by `sensitivity`.
  std::vector<double> deviations = {0.0, 0.1, 0.25, 0.5, 1.0};
  bool write_pgm = false;
  int jobs = 1;
};

/// Throws UsageError when a field is out of range or the scene path does not exist.
void validate(const RunConfig& config);

/// Everything that determines a command's artifacts. The parallelism degree is
/// deliberately absent: it never changes the output.
nlohmann::json manifest(const RunConfig& config, const std::string& scene_bytes);

void cmd_discretize(const RunConfig& config);
void cmd_score(const RunConfig& config);
void cmd_plan(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_sensitivity(const RunConfig& config);

/// Dispatches on config.command.
void run_command(const RunConfig& config);

/// One "x,y,value" row per camera location (free cell).
std::string heatmap_csv(const GroundPlaneSpace& space, std::span<const double> per_location);

/// Binary 8-bit grey map over the occupancy grid; walls and outside are black,
/// free cells scale linearly from the lowest to the highest constrained value.
std::string heatmap_pgm(const GroundPlaneSpace& space, std::span<const double> per_location);

}  // namespace markerplan
