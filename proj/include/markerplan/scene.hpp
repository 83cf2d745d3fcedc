#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "markerplan/geometry.hpp"

namespace markerplan {

/// Closed polyline; the last vertex connects back to the first.
using Polyline = std::vector<Vec2>;

/// A 3D map point anchored on a wall, carrying a synthetic appearance descriptor.
struct FeaturePoint {
  Vec3 position = Vec3::Zero();
  Eigen::VectorXd descriptor;
  /// Number of similar-looking points elsewhere in the map (n_p).
  int similar_count = 0;

  bool operator==(const FeaturePoint&) const = default;
};

struct CameraConfig {
  double fov = kPi / 2.0;  // horizontal, radians
  double range = 10.0;     // meters

  bool operator==(const CameraConfig&) const = default;
};

struct DiscretizationConfig {
  double grid_resolution = 0.5;
  double marker_spacing = 0.5;
  int orientations = 8;

  bool operator==(const DiscretizationConfig&) const = default;
};

/// Recipe for synthesizing feature points when the scene file carries none.
struct FeatureGenerationConfig {
  std::uint64_t seed = 1;
  double density = 2.0;  // points per meter of wall
  int descriptor_dim = 32;
  /// Half height of the band around eye level in which points are spread.
  double height_band = 0.8;
  /// Groups of polyline indices whose walls share one descriptor sequence.
  std::vector<std::vector<int>> aliasing_groups;
  /// (polyline, segment) pairs that receive no features.
  std::vector<std::pair<int, int>> textureless_segments;

  bool operator==(const FeatureGenerationConfig&) const = default;
};

struct SceneDescription {
  std::string name = "scene";
  std::vector<Polyline> walls;
  std::vector<FeaturePoint> feature_points;
  CameraConfig camera;
  DiscretizationConfig discretization;
  std::optional<FeatureGenerationConfig> feature_generation;

  bool operator==(const SceneDescription&) const = default;
};

/// Throws ValidationError when a scene invariant does not hold.
void validate(const SceneDescription& scene);

/// Even-odd rule over all wall polylines.
bool in_free_space(const std::vector<Polyline>& walls, const Vec2& point);

/// Distance from a point to the nearest wall segment.
double distance_to_walls(const std::vector<Polyline>& walls, const Vec2& point);

struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();  // lower-left corner of cell (0, 0)
  double resolution = 1.0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> occupied;  // row-major, row = y index

  bool is_occupied(int ix, int iy) const;
  Vec2 cell_center(int ix, int iy) const;
  int free_count() const;

  bool operator==(const OccupancyGrid&) const = default;
};

/// A feasible marker pose on the free-space perimeter.
struct MarkerCandidate {
  Pose6D pose;
  int polyline = 0;
  int segment = 0;
  /// Arc length along its polyline, measured from the first vertex.
  double arc_length = 0.0;
  /// Arc length along the concatenation of all polylines.
  double perimeter_position = 0.0;

  bool operator==(const MarkerCandidate&) const = default;
};

/// Discretized ground plane: feasible camera poses, feasible marker poses,
/// the occupancy grid they were derived from, and the markers placed so far.
struct GroundPlaneSpace {
  std::vector<Pose6D> camera_poses;
  /// Free-cell center for each camera location; pose i sits at location i / orientations.
  std::vector<Vec2> camera_locations;
  int orientations = 1;
  std::vector<MarkerCandidate> marker_candidates;
  OccupancyGrid occupancy;
  std::vector<int> placed_markers;
  double perimeter_length = 0.0;

  int location_of(int camera_idx) const { return camera_idx / orientations; }
  bool is_placed(int marker_idx) const;
  /// Throws ValidationError on duplicates or out-of-range indices.
  void place(int marker_idx);
};

/// Converts a scene into feasible camera and marker poses.
GroundPlaneSpace discretize(const SceneDescription& scene);

/// Point on a polyline at the given arc length (wrapped to the polyline length),
/// with the index of the segment containing it and that segment's inward normal.
struct PerimeterSample {
  Vec2 position;
  int segment = 0;
  Vec2 inward_normal;
};
PerimeterSample sample_perimeter(const std::vector<Polyline>& walls, int polyline, double arc_length);

double polyline_length(const Polyline& polyline);

/// Inward (free-space facing) unit normal of a wall segment.
Vec2 inward_normal(const std::vector<Polyline>& walls, int polyline, int segment);

/// Moves a marker candidate along its wall polyline by `delta` meters.
MarkerCandidate shift_along_perimeter(const std::vector<Polyline>& walls,
                                      const MarkerCandidate& marker, double delta);

// Serialization. Scene files are JSON with keys name, walls, camera,
// discretization, feature_points and optionally feature_generation.
nlohmann::json scene_to_json(const SceneDescription& scene);
SceneDescription scene_from_json(const nlohmann::json& doc);
SceneDescription load_scene(const std::filesystem::path& path);
void save_scene(const SceneDescription& scene, const std::filesystem::path& path);

nlohmann::json pose_to_json(const Pose6D& pose);
Pose6D pose_from_json(const nlohmann::json& doc);
nlohmann::json space_to_json(const GroundPlaneSpace& space);
void save_space(const GroundPlaneSpace& space, const std::filesystem::path& path);

/// 64-bit FNV-1a over the canonical JSON serialization of the scene.
std::uint64_t scene_content_hash(const SceneDescription& scene);

}  // namespace markerplan
