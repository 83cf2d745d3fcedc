#include <doctest.h>

#include <filesystem>

#include "markerplan/features.hpp"
#include "markerplan/visibility.hpp"
#include "markerplan/workspace.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace markerplan;

namespace {

// Room 10 x 4 with a thin inner wall block at x in [4, 4.2], y in [0.5, 3.5].
std::vector<Polyline> room_with_block() {
  return {{Vec2(0, 0), Vec2(10, 0), Vec2(10, 4), Vec2(0, 4)},
          {Vec2(4, 0.5), Vec2(4.2, 0.5), Vec2(4.2, 3.5), Vec2(4, 3.5)}};
}

VisibilityParams params() { return {}; }

/// Independent angle test in the camera frame (x right, z forward).
bool within_fov(const Pose6D& cam, const Vec3& p, double fov) {
  const Vec3 q = cam.inverse_transform(p);
  return std::abs(std::atan2(q.x(), q.z())) <= 0.5 * fov;
}

}  // namespace

TEST_CASE("point visibility") {
  const auto walls = room_with_block();
  const Pose6D cam = camera_pose(Vec2(1, 2), 0.0);
  CHECK(point_visible(cam, Vec3(2, 2, 0), walls, params()));
  CHECK(point_visible(cam, Vec3(2, 2, 0.5), walls, params()));

  // Range bound on the axis.
  const Pose6D far_cam = camera_pose(Vec2(0.5, 0.25), 0.0);
  const auto open = std::vector<Polyline>{{Vec2(0, 0), Vec2(20, 0), Vec2(20, 1), Vec2(0, 1)}};
  CHECK(point_visible(far_cam, Vec3(10.5, 0.25, 0), open, params()));
  CHECK_FALSE(point_visible(far_cam, Vec3(10.5 + 1e-6, 0.25, 0), open, params()));

  // Behind the block.
  CHECK_FALSE(point_visible(cam, Vec3(6, 2, 0), walls, params()));
  CHECK(oracle::marched_occlusion(walls, Vec2(1, 2), Vec2(6, 2)));
  // Behind the camera and outside the field of view.
  CHECK_FALSE(point_visible(cam, Vec3(0.5, 2, 0), walls, params()));
  CHECK_FALSE(point_visible(cam, Vec3(2, 3.5, 0), walls, params()));
  CHECK(point_visible(cam, Vec3(2, 2.9, 0), walls, params()));
}

TEST_CASE("marker visibility") {
  const auto walls = room_with_block();
  const Pose6D cam = camera_pose(Vec2(1, 2), 0.0);
  // On the block's left face, facing the camera head-on, 3 m ahead.
  const Pose6D facing = marker_pose(Vec3(4, 2, 0), Vec2(-1, 0));
  CHECK(marker_visible(cam, facing, walls, params()));
  const Pose6D away = marker_pose(Vec3(4, 2, 0), Vec2(1, 0));
  CHECK_FALSE(marker_visible(cam, away, walls, params()));
  // Behind the camera.
  const Pose6D behind = marker_pose(Vec3(0, 2, 0), Vec2(1, 0));
  CHECK_FALSE(marker_visible(cam, behind, walls, params()));
}

TEST_CASE("incidence cutoff") {
  const std::vector<Polyline> open = {{Vec2(-20, -20), Vec2(20, -20), Vec2(20, 20), Vec2(-20, 20)}};
  const Vec2 origin(0, 0);
  // The camera sits on the ray from the marker that makes `incidence` with its normal.
  auto seen_at = [&](double incidence_deg) {
    const double a = deg2rad(incidence_deg);
    const Vec2 normal(std::cos(a), std::sin(a));
    const Pose6D marker = marker_pose(Vec3(2, 0, 0), normal);
    const Pose6D cam = camera_pose(origin, 0.0);
    return marker_visible(cam, marker, open, params());
  };
  // Direction from marker to camera is -x; a normal rotated by theta from -x.
  auto seen_rot = [&](double incidence_deg) {
    const double a = kPi - deg2rad(incidence_deg);
    const Pose6D marker = marker_pose(Vec3(2, 0, 0), Vec2(std::cos(a), std::sin(a)));
    return marker_visible(camera_pose(origin, 0.0), marker, open, params());
  };
  CHECK_FALSE(seen_at(0.0));  // facing away
  CHECK(seen_rot(0.0));
  CHECK(seen_rot(60.0));
  CHECK(seen_rot(69.9));
  CHECK_FALSE(seen_rot(70.1));
  CHECK_FALSE(seen_rot(89.9));
  // The oracle: cos(89.9 deg) is below cos(70 deg).
  CHECK(std::cos(deg2rad(89.9)) < std::cos(deg2rad(70.0)));
}

TEST_CASE("frustum margin") {
  const std::vector<Polyline> open = {{Vec2(-20, -20), Vec2(20, -20), Vec2(20, 20), Vec2(-20, 20)}};
  const Pose6D cam = camera_pose(Vec2(0, 0), 0.0);
  auto at_angle = [&](double deg) {
    const double a = deg2rad(deg);
    const Vec3 c(3 * std::cos(a), 3 * std::sin(a), 0);
    return marker_pose(c, Vec2(-std::cos(a), -std::sin(a)));
  };
  // 0.9 * 45 = 40.5 degrees.
  CHECK(marker_visible(cam, at_angle(40.0), open, params()));
  CHECK_FALSE(marker_visible(cam, at_angle(41.0), open, params()));
  // The same direction still sees a point.
  CHECK(point_visible(cam, at_angle(41.0).translation, open, params()));
}

TEST_CASE("index in an empty room") {
  auto scene = testgen::rectangle_scene(4, 4, 1.0, 1.0, 4);
  const auto space = discretize(scene);
  const auto index = build_index(space, scene.walls, {}, visibility_params(scene));
  // Camera at (1.5, 1.5) facing +y sees the top-wall marker at (2, 4) [index 10: arc 10 = (2, 4)].
  const int cam = 5 * 4 + 1;
  REQUIRE((space.camera_poses[cam].translation.head<2>() - Vec2(1.5, 1.5)).norm() < 1e-12);
  const auto& m10 = space.marker_candidates[10];
  REQUIRE((m10.pose.translation.head<2>() - Vec2(2, 4)).norm() < 1e-12);
  auto contains = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  CHECK(contains(index.markers_seen[cam], 10));
  CHECK(contains(index.affected_cameras[10], cam));
  // Bottom-wall marker (2, 0) is behind that camera.
  CHECK_FALSE(contains(index.markers_seen[cam], 2));
  CHECK_FALSE(contains(index.affected_cameras[2], cam));
}

TEST_CASE("index equals all-pairs predicates and independent oracles") {
  testgen::Rng rng(41);
  auto scene = testgen::rectangle_scene(7, 4, 1.0, 0.7, 5, 0.9);
  FeatureGenerationConfig gen;
  gen.seed = 9;
  gen.density = 3;
  const auto points = generate_features(scene, gen);
  const auto space = discretize(scene);
  REQUIRE(space.camera_poses.size() >= 50);
  const auto p = visibility_params(scene);
  const auto index = build_index(space, scene.walls, points, p);

  int mismatches = 0;
  int visible_pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = static_cast<std::size_t>(testgen::uni_int(rng, 0, static_cast<int>(space.camera_poses.size()) - 1));
    const Pose6D& cam = space.camera_poses[c];
    std::vector<int> expect_points;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec3& x = points[i].position;
      const bool oracle_visible = (x - cam.translation).norm() <= p.range && within_fov(cam, x, p.fov) &&
                                  !oracle::marched_occlusion(scene.walls, cam.translation.head<2>(), x.head<2>());
      if (point_visible(cam, x, scene.walls, p)) expect_points.push_back(static_cast<int>(i));
      if (oracle_visible != point_visible(cam, x, scene.walls, p)) {
        ++mismatches;
        MESSAGE(cam.translation.transpose(), " | ", x.transpose(), " oracle ", oracle_visible);
      }
      visible_pairs += oracle_visible;
    }
    CHECK(index.points_seen[c] == expect_points);
    std::vector<int> expect_markers;
    for (std::size_t m = 0; m < space.marker_candidates.size(); ++m) {
      if (marker_visible(cam, space.marker_candidates[m].pose, scene.walls, p)) expect_markers.push_back(static_cast<int>(m));
    }
    CHECK(index.markers_seen[c] == expect_markers);
  }
  CHECK(visible_pairs > 100);
  CHECK(mismatches == 0);
}

TEST_CASE("transpose consistency, range monotonicity and job independence") {
  auto scene = testgen::rectangle_scene(6, 4, 0.5, 0.5, 8, 1.0);
  FeatureGenerationConfig gen;
  gen.density = 2;
  const auto points = generate_features(scene, gen);
  const auto space = discretize(scene);
  auto p = visibility_params(scene);
  const auto index = build_index(space, scene.walls, points, p, 1);

  for (std::size_t c = 0; c < index.markers_seen.size(); ++c) {
    for (int m : index.markers_seen[c]) {
      const auto& col = index.affected_cameras[static_cast<std::size_t>(m)];
      CHECK(std::find(col.begin(), col.end(), static_cast<int>(c)) != col.end());
    }
  }
  std::size_t pairs = 0;
  for (const auto& row : index.markers_seen) pairs += row.size();
  std::size_t pairs_t = 0;
  for (const auto& col : index.affected_cameras) pairs_t += col.size();
  CHECK(pairs == pairs_t);

  CHECK(build_index(space, scene.walls, points, p, 3) == index);

  p.range = 3.0;
  const auto shorter = build_index(space, scene.walls, points, p, 1);
  for (std::size_t c = 0; c < index.points_seen.size(); ++c) {
    for (int i : shorter.points_seen[c]) {
      CHECK(std::binary_search(index.points_seen[c].begin(), index.points_seen[c].end(), i));
    }
    for (int m : shorter.markers_seen[c]) {
      CHECK(std::binary_search(index.markers_seen[c].begin(), index.markers_seen[c].end(), m));
    }
  }
}

TEST_CASE("index cache") {
  auto scene = testgen::rectangle_scene(4, 3, 0.5, 0.5, 4);
  FeatureGenerationConfig gen;
  const auto points = generate_features(scene, gen);
  const auto space = discretize(scene);
  const auto p = visibility_params(scene);
  const auto index = build_index(space, scene.walls, points, p);
  const auto key = index_cache_key(scene, points, p);
  const auto path = std::filesystem::temp_directory_path() / "markerplan_test_cache" / "index.json";
  std::filesystem::remove_all(path.parent_path());
  CHECK_FALSE(load_index_cache(path, key).has_value());
  save_index_cache(index, key, path);
  const auto hit = load_index_cache(path, key);
  REQUIRE(hit.has_value());
  CHECK(*hit == index);

  auto other = scene;
  other.camera.range = 9.0;
  const auto other_key = index_cache_key(other, points, visibility_params(other));
  CHECK(other_key != key);
  CHECK_FALSE(load_index_cache(path, other_key).has_value());
}
