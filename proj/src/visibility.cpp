#include "markerplan/visibility.hpp"

#include <cmath>
#include <fstream>

#include "markerplan/errors.hpp"
#include "markerplan/io.hpp"
#include "markerplan/parallel.hpp"

namespace markerplan {

namespace {
constexpr double kOcclusionSlack = 1e-9;
}

VisibilityParams visibility_params(const SceneDescription& scene) {
  VisibilityParams params;
  params.fov = scene.camera.fov;
  params.range = scene.camera.range;
  return params;
}

double horizontal_offset_angle(const Pose6D& camera, const Vec3& point) {
  const Vec3 axis = optical_axis(camera);
  const Vec2 forward = Vec2(axis.x(), axis.y()).normalized();
  const Vec2 d(point.x() - camera.translation.x(), point.y() - camera.translation.y());
  const double cross = forward.x() * d.y() - forward.y() * d.x();
  return std::atan2(cross, forward.dot(d));
}

bool occluded(const std::vector<Polyline>& walls, const Vec2& from, const Vec2& to) {
  for (const auto& poly : walls) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = segment_intersection(from, to, poly[i], poly[(i + 1) % n]);
      if (t >= 0.0 && t < 1.0 - kOcclusionSlack) return true;
    }
  }
  return false;
}

bool point_visible(const Pose6D& camera, const Vec3& point, const std::vector<Polyline>& walls,
                   const VisibilityParams& params) {
  const Vec3 d = point - camera.translation;
  if (d.norm() > params.range) return false;
  const Vec2 dh(d.x(), d.y());
  if (dh.norm() < 1e-12) return false;
  if (std::abs(horizontal_offset_angle(camera, point)) > 0.5 * params.fov) return false;
  return !occluded(walls, camera.translation.head<2>(), point.head<2>());
}

bool marker_visible(const Pose6D& camera, const Pose6D& marker, const std::vector<Polyline>& walls,
                    const VisibilityParams& params) {
  const Vec3& center = marker.translation;
  const Vec3 to_camera = camera.translation - center;
  const double dist = to_camera.norm();
  if (dist < 1e-12) return false;
  if (marker_normal(marker).dot(to_camera) / dist <= std::cos(params.max_incidence)) return false;
  if (std::abs(horizontal_offset_angle(camera, center)) > params.frustum_margin * 0.5 * params.fov) {
    return false;
  }
  return point_visible(camera, center, walls, params);
}

VisibilityIndex build_index(const GroundPlaneSpace& space, const std::vector<Polyline>& walls,
                            const std::vector<FeaturePoint>& points, const VisibilityParams& params,
                            int jobs) {
  const std::size_t n_cam = space.camera_poses.size();
  VisibilityIndex index;
  index.points_seen.resize(n_cam);
  index.markers_seen.resize(n_cam);
  parallel_for(n_cam, jobs, [&](std::size_t c) {
    const Pose6D& cam = space.camera_poses[c];
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (point_visible(cam, points[p].position, walls, params)) {
        index.points_seen[c].push_back(static_cast<int>(p));
      }
    }
    for (std::size_t m = 0; m < space.marker_candidates.size(); ++m) {
      if (marker_visible(cam, space.marker_candidates[m].pose, walls, params)) {
        index.markers_seen[c].push_back(static_cast<int>(m));
      }
    }
  });
  index.affected_cameras.resize(space.marker_candidates.size());
  for (std::size_t c = 0; c < n_cam; ++c) {
    for (int m : index.markers_seen[c]) {
      index.affected_cameras[static_cast<std::size_t>(m)].push_back(static_cast<int>(c));
    }
  }
  return index;
}

VisibilityIndex build_index(const GroundPlaneSpace& space, const SceneDescription& scene, int jobs) {
  return build_index(space, scene.walls, scene.feature_points, visibility_params(scene), jobs);
}

std::uint64_t index_cache_key(const SceneDescription& scene, const std::vector<FeaturePoint>& points,
                              const VisibilityParams& params) {
  nlohmann::json doc = scene_to_json(scene);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back({p.position.x(), p.position.y(), p.position.z()});
  doc["__index_points"] = std::move(pts);
  doc["__index_params"] = {params.fov, params.range, params.max_incidence, params.frustum_margin};
  return fnv1a64(doc.dump());
}

void save_index_cache(const VisibilityIndex& index, std::uint64_t key, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["key"] = to_hex(key);
  doc["points_seen"] = index.points_seen;
  doc["markers_seen"] = index.markers_seen;
  doc["affected_cameras"] = index.affected_cameras;
  write_file_atomic(path, doc.dump() + "\n");
}

std::optional<VisibilityIndex> load_index_cache(const std::filesystem::path& path, std::uint64_t key) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    if (doc.at("key").get<std::string>() != to_hex(key)) return std::nullopt;
    VisibilityIndex index;
    doc.at("points_seen").get_to(index.points_seen);
    doc.at("markers_seen").get_to(index.markers_seen);
    doc.at("affected_cameras").get_to(index.affected_cameras);
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("corrupt visibility cache " + path.string() + ": " + e.what());
  }
}

}  // namespace markerplan
