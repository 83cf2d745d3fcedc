#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "markerplan/scene.hpp"

namespace markerplan {

struct VisibilityParams {
  double fov = kPi / 2.0;
  double range = 10.0;
  /// Markers seen at a larger incidence angle than this are rejected.
  double max_incidence = deg2rad(70.0);
  /// Markers must lie within frustum_margin * fov / 2 of the optical axis.
  double frustum_margin = 0.9;

  bool operator==(const VisibilityParams&) const = default;
};

VisibilityParams visibility_params(const SceneDescription& scene);

/// Horizontal angle of `point` off the optical axis, in (-pi, pi].
double horizontal_offset_angle(const Pose6D& camera, const Vec3& point);

/// True if the open segment from a to b crosses a wall before reaching b.
bool occluded(const std::vector<Polyline>& walls, const Vec2& from, const Vec2& to);

bool point_visible(const Pose6D& camera, const Vec3& point, const std::vector<Polyline>& walls,
                   const VisibilityParams& params);

/// point_visible for the marker center, plus a facing test and a frustum margin.
bool marker_visible(const Pose6D& camera, const Pose6D& marker, const std::vector<Polyline>& walls,
                    const VisibilityParams& params);

struct VisibilityIndex {
  std::vector<std::vector<int>> points_seen;       // camera -> feature points
  std::vector<std::vector<int>> markers_seen;      // camera -> marker candidates
  std::vector<std::vector<int>> affected_cameras;  // marker candidate -> cameras (C_m)

  bool operator==(const VisibilityIndex&) const = default;
};

/// Evaluates both predicates for every camera. Rows are independent and may be
/// computed on `jobs` threads; the result is identical for any job count.
VisibilityIndex build_index(const GroundPlaneSpace& space, const std::vector<Polyline>& walls,
                            const std::vector<FeaturePoint>& points, const VisibilityParams& params,
                            int jobs = 1);

VisibilityIndex build_index(const GroundPlaneSpace& space, const SceneDescription& scene, int jobs = 1);

/// Key identifying the inputs of an index: scene content, points and parameters.
std::uint64_t index_cache_key(const SceneDescription& scene, const std::vector<FeaturePoint>& points,
                              const VisibilityParams& params);

void save_index_cache(const VisibilityIndex& index, std::uint64_t key, const std::filesystem::path& path);

/// Returns nothing if the file is missing or was written for a different key.
std::optional<VisibilityIndex> load_index_cache(const std::filesystem::path& path, std::uint64_t key);

}  // namespace markerplan
