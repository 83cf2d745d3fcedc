#include <doctest.h>

#include <map>
#include <numeric>
#include <set>

#include "markerplan/errors.hpp"
#include "markerplan/eval_sim.hpp"
#include "markerplan/stats.hpp"
#include "markerplan/workspace.hpp"
#include "support/generators.hpp"

using namespace markerplan;

namespace {

SceneDescription textured_room() {
  auto scene = testgen::rectangle_scene(5, 3, 0.5, 0.6, 6, 0.5);
  FeatureGenerationConfig gen;
  gen.seed = 3;
  gen.density = 3.0;
  scene.feature_generation = gen;
  return scene;
}

/// Two identical rooms 10 m apart whose walls carry identical features.
SceneDescription cloned_rooms() {
  SceneDescription s;
  s.name = "cloned";
  s.walls = {{Vec2(0, 0), Vec2(5, 0), Vec2(5, 3), Vec2(0, 3)},
             {Vec2(10, 0), Vec2(15, 0), Vec2(15, 3), Vec2(10, 3)}};
  s.discretization.grid_resolution = 0.5;
  s.discretization.marker_spacing = 0.6;
  s.discretization.orientations = 4;
  FeatureGenerationConfig gen;
  gen.seed = 5;
  gen.density = 3.0;
  gen.aliasing_groups = {{0, 1}};
  s.feature_generation = gen;
  return s;
}

LocalizationWorld world_of(const Workspace& ws, std::vector<Pose6D> markers = {}) {
  LocalizationWorld w;
  w.walls = &ws.scene().walls;
  w.points = &ws.points();
  w.markers = std::move(markers);
  w.visibility = visibility_params(ws.scene());
  return w;
}

LocalizationResult ok_result(double t, double r) {
  LocalizationResult res;
  res.failed = false;
  res.translation_error = t;
  res.rotation_error = r;
  return res;
}

}  // namespace

TEST_CASE("sampling weights") {
  CHECK(sampling_weights(std::vector<double>{0, -2}) == std::vector<double>{1, 3});
  CHECK(sampling_weights(std::vector<double>{4, 4, 4}) == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(sampling_weights(std::vector<double>{}), ValidationError);
  testgen::Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(static_cast<std::size_t>(testgen::uni_int(rng, 1, 30)));
    for (double& x : s) x = testgen::uni(rng, -50, 10);
    const auto w = sampling_weights(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(w[i] >= 0.0);
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[i] < s[j]) CHECK(w[i] >= w[j]);
      }
    }
  }
}

TEST_CASE("test pose parents follow the weights") {
  auto scene = testgen::rectangle_scene(2, 1, 1.0, 1.0, 4);
  const auto space = discretize(scene);
  REQUIRE(space.camera_poses.size() == 8);
  const std::vector<double> scores = {0, -1, -2, -3, -4, -5, -6, kUnconstrainedScore};
  const int n = 20000;
  // Sentinel becomes the lowest finite score, -6.
  std::vector<double> replaced = scores;
  replaced.back() = -6;
  const auto w = sampling_weights(replaced);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);

  const auto weighted = sample_test_poses(space, scene.walls, scores, n, SamplingMode::Weighted, 7);
  const auto uniform = sample_test_poses(space, scene.walls, scores, n, SamplingMode::Uniform, 7);
  std::vector<int> cw(8, 0);
  std::vector<int> cu(8, 0);
  for (const auto& t : weighted) ++cw[static_cast<std::size_t>(t.parent)];
  for (const auto& t : uniform) ++cu[static_cast<std::size_t>(t.parent)];
  for (std::size_t i = 0; i < 8; ++i) {
    const double p = w[i] / total;
    if (p > 0.05) CHECK(std::abs(cw[i] / double(n) - p) / p < 0.05);
    if (p == 0.0) CHECK(cw[i] == 0);
    const double sd = std::sqrt(n * 0.125 * 0.875);
    CHECK(std::abs(cu[i] - n * 0.125) < 3 * sd);
  }
  CHECK(cw[7] == doctest::Approx(cw[6]).epsilon(0.1));

  // Equal scores give all-zero weights and fall back to uniform.
  const auto flat = sample_test_poses(space, scene.walls, std::vector<double>(8, -3.0), 4000, SamplingMode::Weighted, 8);
  std::vector<int> cf(8, 0);
  for (const auto& t : flat) ++cf[static_cast<std::size_t>(t.parent)];
  for (int c : cf) CHECK(c > 350);
}

TEST_CASE("test pose perturbations") {
  const Workspace ws(textured_room());
  const auto scores = ws.model().scores({});
  const PerturbationBounds bounds;
  const auto poses = sample_test_poses(ws.space(), ws.scene().walls, scores, 300, SamplingMode::Weighted, 9, bounds);
  for (const auto& t : poses) {
    CHECK(std::abs(t.perturbation.x()) <= bounds.translation);
    CHECK(std::abs(t.perturbation.y()) <= bounds.translation);
    CHECK(std::abs(t.perturbation.z()) <= bounds.yaw);
    const Vec2 pos = t.ground_truth.translation.head<2>();
    CHECK(in_free_space(ws.scene().walls, pos));
    CHECK(distance_to_walls(ws.scene().walls, pos) >= bounds.wall_clearance);
    const Pose6D& parent = ws.space().camera_poses[static_cast<std::size_t>(t.parent)];
    CHECK((pos - parent.translation.head<2>() - t.perturbation.head<2>()).norm() < 1e-12);
    CHECK(t.ground_truth.is_valid());
  }
  const auto again = sample_test_poses(ws.space(), ws.scene().walls, scores, 300, SamplingMode::Weighted, 9, bounds);
  CHECK(test_set_hash(poses) == test_set_hash(again));
  const auto other = sample_test_poses(ws.space(), ws.scene().walls, scores, 300, SamplingMode::Weighted, 10, bounds);
  CHECK(test_set_hash(poses) != test_set_hash(other));
  CHECK_THROWS_AS(sample_test_poses(ws.space(), ws.scene().walls, scores, 0, SamplingMode::Weighted, 9), ValidationError);
  CHECK_THROWS_AS(sample_test_poses(ws.space(), ws.scene().walls, std::vector<double>{1.0}, 5, SamplingMode::Weighted, 9),
                  ValidationError);
}

TEST_CASE("error metrics and recall") {
  const Mat3 rz = so3_exp(Vec3(0, 0, kPi / 2));
  CHECK(rotation_error(rz, Mat3::Identity()) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(rotation_error(Mat3::Identity(), Mat3::Identity()) == 0.0);
  CHECK(translation_error(Vec3(1, 2, 2), Vec3::Zero()) == doctest::Approx(3.0));

  LocalizationResult failed;
  const std::vector<LocalizationResult> rs = {ok_result(0.01, 0.01), ok_result(0.2, 0.01), ok_result(0.01, 0.2),
                                              failed};
  CHECK(recall(rs, 0.05, deg2rad(5)) == doctest::Approx(25.0));
  CHECK(recall(rs, 1.0, 1.0) == doctest::Approx(75.0));
  CHECK_THROWS_AS(recall(std::vector<LocalizationResult>{}, 1, 1), ValidationError);

  const auto row = summarize("s", "none", 0, 0, rs, 0.05, deg2rad(5));
  CHECK(row.n == 4);
  CHECK(row.mean_translation_error == doctest::Approx((0.01 + 0.2 + 0.01) / 3));
  const auto empty = summarize("s", "none", 0, 0, std::vector<LocalizationResult>{failed}, 0.05, 0.1);
  CHECK(std::isnan(empty.mean_translation_error));
}

TEST_CASE("planar resection recovers planar poses") {
  testgen::Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose6D cam = camera_pose(Vec2(testgen::uni(rng, -5, 5), testgen::uni(rng, -5, 5)), testgen::uni(rng, -kPi, kPi));
    std::vector<Vec3> pts;
    std::vector<double> angles;
    for (int i = 0; i < testgen::uni_int(rng, 3, 8); ++i) {
      const Vec3 p = testgen::point_in_front(rng, cam);
      const Vec3 q = cam.inverse_transform(p);
      pts.push_back(p);
      angles.push_back(std::atan2(-q.x(), q.z()));
    }
    const auto est = planar_resection(pts, angles);
    REQUIRE(est.has_value());
    CHECK(translation_error(est->translation, cam.translation) < 1e-6);
    CHECK(rotation_error(est->rotation, cam.rotation) < 1e-6);
  }
  const std::vector<Vec3> two = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
  CHECK_FALSE(planar_resection(two, std::vector<double>{0.1, 0.2}).has_value());
}

TEST_CASE("noise-free localization is exact") {
  const Workspace ws(textured_room());
  LocalizerConfig cfg;
  cfg.bearing_sigma = 0;
  cfg.descriptor_noise = 0;
  cfg.marker_rotation_sigma = 0;
  cfg.marker_translation_sigma = 0;
  const auto scores = ws.model().scores({});
  const auto tests = sample_test_poses(ws.space(), ws.scene().walls, scores, 60, SamplingMode::Uniform, 11);
  const auto markers = marker_poses(ws.space(), std::vector<int>{0, 5, 10});
  const auto world = world_of(ws, markers);
  int solved = 0;
  for (const auto& t : tests) {
    const auto r = localize(t, world, cfg);
    if (r.failed) continue;
    ++solved;
    CHECK(r.translation_error < 1e-6);
    CHECK(r.rotation_error < 1e-6);
  }
  CHECK(solved > 50);
}

TEST_CASE("localization is deterministic and fails without observations") {
  const Workspace ws(textured_room());
  const auto scores = ws.model().scores({});
  const auto tests = sample_test_poses(ws.space(), ws.scene().walls, scores, 20, SamplingMode::Uniform, 12);
  const LocalizerConfig cfg;
  const auto world = world_of(ws);
  for (const auto& t : tests) {
    const auto a = localize(t, world, cfg);
    const auto b = localize(t, world, cfg);
    CHECK(a.failed == b.failed);
    CHECK(a.translation_error == b.translation_error);
    CHECK(a.rotation_error == b.rotation_error);
  }
  const std::vector<FeaturePoint> none;
  LocalizationWorld blind = world;
  blind.points = &none;
  for (const auto& t : tests) CHECK(localize(t, blind, cfg).failed);
}

TEST_CASE("cloned rooms alias and markers disambiguate") {
  const Workspace ws(cloned_rooms());
  const auto scores = ws.model().scores({});
  const auto tests = sample_test_poses(ws.space(), ws.scene().walls, scores, 500, SamplingMode::Uniform, 13);
  const LocalizerConfig cfg;
  auto gross = [&](const std::vector<Pose6D>& markers) {
    const auto world = world_of(ws, markers);
    int count = 0;
    for (const auto& t : tests) {
      const auto r = localize(t, world, cfg);
      if (!r.failed && r.translation_error > 5.0) ++count;
    }
    return count;
  };
  // Markers in the second room only.
  std::vector<int> in_b;
  for (int m = 0; m < static_cast<int>(ws.space().marker_candidates.size()); m += 2) {
    if (ws.space().marker_candidates[static_cast<std::size_t>(m)].polyline == 1) in_b.push_back(m);
  }
  REQUIRE_FALSE(in_b.empty());
  const int without = gross({});
  const int with = gross(marker_poses(ws.space(), in_b));
  MESSAGE("gross errors without markers " << without << ", with " << with);
  CHECK(without > 50);
  CHECK(with < without);
}

TEST_CASE("baseline placements") {
  auto scene = testgen::rectangle_scene(4, 4, 1.0, 1.0, 4);
  const auto space = discretize(scene);
  REQUIRE(space.marker_candidates.size() == 16);
  CHECK(uniform_placement(space, 4) == std::vector<int>{0, 4, 8, 12});
  CHECK(uniform_placement(space, 4, 0.5) == std::vector<int>{2, 6, 10, 14});
  CHECK(uniform_placement(space, 0).empty());
  auto all = uniform_placement(space, 16, 0.3);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 16; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  CHECK_THROWS_AS(uniform_placement(space, 17), ValidationError);

  const auto r = random_placement(16, 5, 99);
  CHECK(r.size() == 5);
  CHECK(std::set<int>(r.begin(), r.end()).size() == 5);
  CHECK(r == random_placement(16, 5, 99));
  CHECK(r != random_placement(16, 5, 100));
  auto perm = random_placement(16, 16, 1);
  std::sort(perm.begin(), perm.end());
  CHECK(perm == all);
  CHECK_THROWS_AS(random_placement(16, 17, 1), ValidationError);

  // Every candidate is chosen about equally often.
  std::vector<int> hits(16, 0);
  for (std::uint64_t s = 0; s < 4000; ++s) {
    for (int m : random_placement(16, 2, s)) ++hits[static_cast<std::size_t>(m)];
  }
  for (int h : hits) CHECK(std::abs(h - 500) < 3 * std::sqrt(8000 * (1.0 / 16) * (15.0 / 16)));
}

TEST_CASE("shifted markers move along their wall") {
  const Workspace ws(textured_room());
  std::vector<int> chosen;
  for (std::size_t m = 0; m < ws.space().marker_candidates.size(); ++m) {
    chosen.push_back(static_cast<int>(m));
  }
  const auto shifted = shifted_markers(ws, chosen, 0.25, 4);
  CHECK(shifted == shifted_markers(ws, chosen, 0.25, 4));
  int straight = 0;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto& orig = ws.space().marker_candidates[static_cast<std::size_t>(chosen[i])].pose;
    const double moved = (shifted[i].translation - orig.translation).norm();
    CHECK(moved <= 0.25 + 1e-9);
    CHECK(moved > 0.0);
    if (marker_normal(shifted[i]).isApprox(marker_normal(orig), 1e-12)) {
      ++straight;
      CHECK(moved == doctest::Approx(0.25));
    }
  }
  CHECK(straight > static_cast<int>(chosen.size()) / 2);
  const auto unmoved = shifted_markers(ws, chosen, 0.0, 4);
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    CHECK((unmoved[i].translation - ws.space().marker_candidates[static_cast<std::size_t>(chosen[i])].pose.translation).norm() < 1e-12);
  }
}

TEST_CASE("test pose scores at unperturbed poses equal model scores") {
  const Workspace ws(textured_room());
  const auto scores = ws.model().scores({});
  PerturbationBounds zero;
  zero.translation = 0;
  zero.yaw = 0;
  const auto tests = sample_test_poses(ws.space(), ws.scene().walls, scores, 50, SamplingMode::Uniform, 14, zero);
  const std::vector<int> placed = {1, 6, 11};
  const auto markers = marker_poses(ws.space(), placed);
  const auto at_tests = test_pose_scores(ws, tests, markers, 1);
  const auto grid = ws.model().scores(placed);
  for (std::size_t i = 0; i < tests.size(); ++i) {
    CHECK(at_tests[i] == doctest::Approx(grid[static_cast<std::size_t>(tests[i].parent)]).epsilon(1e-10));
  }
  CHECK(test_pose_scores(ws, tests, markers, 3) == at_tests);
}

TEST_CASE("experiment runner") {
  const Workspace ws(textured_room());
  ExperimentConfig cfg;
  cfg.k_values = {0, 2};
  cfg.n_test = 40;
  cfg.versions = 2;
  cfg.seed = 3;
  const auto result = run_experiment(ws, cfg);
  CHECK(result.rows.size() == 2 + 2 + 4 + 4);
  CHECK(result.test_poses.size() == 40);
  CHECK(result.test_set_hash == test_set_hash(result.test_poses));
  std::map<std::string, std::vector<double>> at_zero;
  for (const auto& row : result.rows) {
    CHECK(row.n == 40);
    if (row.k == 0) at_zero[row.strategy].push_back(row.recall);
  }
  // With no markers every strategy localizes against the same map.
  const double base = at_zero["none"].front();
  for (const auto& [name, values] : at_zero) {
    for (double v : values) CHECK(v == base);
  }
  CHECK(result.omp_plan.steps.size() == 2);
  const auto [mean, sd] = result.recall_stats("random", 2);
  CHECK(mean >= 0.0);
  CHECK(sd >= 0.0);

  const std::string csv = experiment_csv(result.rows);
  CHECK(csv.rfind("scene,strategy,seed,k,N,recall,mean_translation_error,mean_rotation_error\n", 0) == 0);
  CHECK(csv == experiment_csv(run_experiment(ws, cfg).rows));
  cfg.jobs = 2;
  CHECK(csv == experiment_csv(run_experiment(ws, cfg).rows));
}

TEST_CASE("pearson correlation") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {2, 4, 5, 4, 5};
  // Reference values from an independent statistics package.
  const auto c = pearson(x, y);
  CHECK(c.r == doctest::Approx(0.7745966692414834).epsilon(1e-12));
  CHECK(c.p == doctest::Approx(0.1240270626575546).epsilon(1e-9));
  CHECK(c.n == 5);
  const auto d = pearson(std::vector<double>{1, 2, 3, 4, 5, 6}, std::vector<double>{6, 5, 3, 4, 2, 1});
  CHECK(d.r == doctest::Approx(-0.9428571428571428).epsilon(1e-12));
  CHECK(d.p == doctest::Approx(0.004804664723032073).epsilon(1e-9));
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), ValidationError);
}
