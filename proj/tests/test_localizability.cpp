#include <doctest.h>

#include "markerplan/errors.hpp"
#include "markerplan/localizability.hpp"
#include "markerplan/workspace.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace markerplan;

namespace {

SceneDescription textured_room() {
  auto scene = testgen::rectangle_scene(5, 3, 0.5, 0.6, 6, 0.5);
  FeatureGenerationConfig gen;
  gen.seed = 3;
  gen.density = 2.0;
  scene.feature_generation = gen;
  return scene;
}

/// Independent graph for camera c: rebuilt from positions and similar counts.
GaussianFactorGraph oracle_graph(const Workspace& ws, int c, const std::vector<int>& markers) {
  const Pose6D& cam = ws.space().camera_poses[static_cast<std::size_t>(c)];
  auto g = testgen::camera_only_graph();
  for (int p : ws.index().points_seen[static_cast<std::size_t>(c)]) {
    const auto& fp = ws.points()[static_cast<std::size_t>(p)];
    testgen::add_point(g, cam, fp.position, fp.similar_count);
  }
  // Marker sets are sets: repeats count once.
  std::vector<int> unique = markers;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  for (int m : unique) {
    if (ws.model().sees_marker(c, m)) testgen::add_marker(g, cam, ws.space().marker_candidates[static_cast<std::size_t>(m)].pose);
  }
  return g;
}

}  // namespace

TEST_CASE("graph contents follow visibility") {
  const Workspace ws(textured_room());
  const auto& index = ws.index();
  int checked = 0;
  for (std::size_t c = 0; c < index.points_seen.size() && checked < 20; ++c) {
    if (index.markers_seen[c].empty() || index.points_seen[c].size() < 3) continue;
    ++checked;
    const int ci = static_cast<int>(c);
    const int seen = index.markers_seen[c].front();
    const auto g0 = ws.model().build_graph(ci, {});
    const auto n_pts = static_cast<int>(index.points_seen[c].size());
    CHECK(g0.count(VariableKind::Camera) == 1);
    CHECK(g0.count(VariableKind::Point) == n_pts);
    CHECK(g0.count(FactorKind::Bearing) == n_pts);
    CHECK(g0.count(FactorKind::PointPrior) == n_pts);
    CHECK(g0.count(VariableKind::Marker) == 0);

    std::vector<int> unseen;
    for (int m = 0; m < static_cast<int>(ws.space().marker_candidates.size()); ++m) {
      if (!ws.model().sees_marker(ci, m)) unseen.push_back(m);
    }
    std::vector<int> markers = {seen};
    markers.insert(markers.end(), unseen.begin(), unseen.end());
    const auto g1 = ws.model().build_graph(ci, markers);
    CHECK(g1.count(VariableKind::Marker) == 1);
    CHECK(g1.count(FactorKind::MarkerPrior) == 1);
    CHECK(g1.count(FactorKind::MarkerRelativePose) == 1);
    CHECK(g1.variables().back().source == seen);
    // Unseen markers leave the score untouched.
    CHECK(ws.model().score(ci, unseen) == ws.model().score(ci, {}));
  }
  CHECK(checked == 20);
}

TEST_CASE("score equals the independent oracle") {
  const Workspace ws(textured_room());
  testgen::Rng rng(21);
  const int n_cam = static_cast<int>(ws.space().camera_poses.size());
  const int n_m = static_cast<int>(ws.space().marker_candidates.size());
  int finite = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int c = testgen::uni_int(rng, 0, n_cam - 1);
    std::vector<int> markers;
    for (int i = testgen::uni_int(rng, 0, 4); i > 0; --i) markers.push_back(testgen::uni_int(rng, 0, n_m - 1));
    const double s = ws.model().score(c, markers);
    const auto g = oracle_graph(ws, c, markers);
    const bool sparse = ws.index().points_seen[static_cast<std::size_t>(c)].size() < 2 &&
                        g.count(VariableKind::Marker) == 0;
    if (sparse) {
      CHECK(s == kUnconstrainedScore);
      continue;
    }
    ++finite;
    CHECK(std::abs(s + oracle::dense_entropy(oracle::dense_marginal(g))) < 1e-8);
  }
  CHECK(finite > 30);
}

TEST_CASE("sentinel when too little is visible") {
  auto scene = testgen::rectangle_scene(4, 3, 0.5, 0.5, 4);
  const auto space = discretize(scene);
  const std::vector<FeaturePoint> none;
  const auto index = build_index(space, scene.walls, none, visibility_params(scene));
  const LocalizabilityModel model(space, none, index, {});
  int with_marker = 0;
  for (int c = 0; c < static_cast<int>(space.camera_poses.size()); ++c) {
    CHECK(model.score(c, {}) == kUnconstrainedScore);
    CHECK(model.build_graph(c, {}).unconstrained);
    const auto& seen = index.markers_seen[static_cast<std::size_t>(c)];
    if (!seen.empty()) {
      ++with_marker;
      const double s = model.score(c, seen);
      CHECK(s > kUnconstrainedScore);
      CHECK(std::isfinite(s));
    }
  }
  CHECK(with_marker > 0);
}

TEST_CASE("more observations never lower the score") {
  const Workspace ws(textured_room());
  const auto& model = ws.model();
  testgen::Rng rng(22);
  int strict = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int c = testgen::uni_int(rng, 0, static_cast<int>(ws.space().camera_poses.size()) - 1);
    const Pose6D& cam = ws.space().camera_poses[static_cast<std::size_t>(c)];
    const auto& seen = ws.index().points_seen[static_cast<std::size_t>(c)];
    if (seen.size() < 3) continue;
    std::vector<int> fewer(seen.begin(), seen.end() - 1);
    std::vector<int> doubled(seen.begin(), seen.end());
    doubled.push_back(seen.front());
    const double base = model.score_at(cam, seen, {});
    CHECK(model.score_at(cam, fewer, {}) <= base + 1e-9);
    const double dup = model.score_at(cam, doubled, {});
    CHECK(dup >= base - 1e-9);
    strict += dup > base;
    CHECK(base == doctest::Approx(model.score(c, {})).epsilon(1e-12));
  }
  CHECK(strict > 0);
}

TEST_CASE("information gain of a marker") {
  const Workspace ws(textured_room());
  const auto& model = ws.model();
  testgen::Rng rng(23);
  const int n_cam = static_cast<int>(ws.space().camera_poses.size());
  const int n_m = static_cast<int>(ws.space().marker_candidates.size());
  for (int trial = 0; trial < 200; ++trial) {
    const int c = testgen::uni_int(rng, 0, n_cam - 1);
    const int m = testgen::uni_int(rng, 0, n_m - 1);
    std::vector<int> placed;
    for (int i = testgen::uni_int(rng, 0, 3); i > 0; --i) placed.push_back(testgen::uni_int(rng, 0, n_m - 1));
    const double g = model.info_gain(c, m, placed);
    const bool already = std::find(placed.begin(), placed.end(), m) != placed.end();
    if (!model.sees_marker(c, m) || already) {
      CHECK(g == 0.0);
      continue;
    }
    CHECK(g >= -1e-9);
    std::vector<int> with = placed;
    with.push_back(m);
    const double without_h = oracle::dense_entropy(oracle::dense_marginal(oracle_graph(ws, c, placed)));
    const double with_h = oracle::dense_entropy(oracle::dense_marginal(oracle_graph(ws, c, with)));
    if (model.score(c, placed) != kUnconstrainedScore) CHECK(std::abs(g - (without_h - with_h)) < 1e-8);
  }
}

TEST_CASE("more similar points never raise the score") {
  const Workspace ws(textured_room());
  std::vector<FeaturePoint> inflated = ws.points();
  for (auto& p : inflated) p.similar_count += 2;
  const LocalizabilityModel worse(ws.space(), inflated, ws.index(), ws.similarity());
  int strict = 0;
  for (int c = 0; c < static_cast<int>(ws.space().camera_poses.size()); ++c) {
    const double a = ws.model().score(c, {});
    const double b = worse.score(c, {});
    CHECK(b <= a + 1e-9);
    strict += b < a;
  }
  CHECK(strict > 0);
}

TEST_CASE("marker order and jobs do not matter") {
  const Workspace ws(textured_room());
  const int n_m = static_cast<int>(ws.space().marker_candidates.size());
  std::vector<int> fwd = {0, n_m / 3, n_m / 2, n_m - 1};
  std::vector<int> rev(fwd.rbegin(), fwd.rend());
  rev.push_back(fwd.front());
  const auto a = ws.model().scores(fwd, 1);
  CHECK(a == ws.model().scores(rev, 1));
  CHECK(a == ws.model().scores(fwd, 3));
}

TEST_CASE("location means") {
  auto scene = testgen::rectangle_scene(2, 1, 1.0, 1.0, 4);
  const auto space = discretize(scene);
  std::vector<double> per_pose;
  for (std::size_t i = 0; i < space.camera_poses.size(); ++i) per_pose.push_back(static_cast<double>(i));
  const auto means = location_means(space, per_pose);
  REQUIRE(means.size() == space.camera_locations.size());
  for (std::size_t loc = 0; loc < means.size(); ++loc) CHECK(means[loc] == doctest::Approx(4.0 * loc + 1.5));
}

TEST_CASE("model rejects a mismatched index") {
  auto scene = testgen::rectangle_scene(3, 3, 1.0, 1.0, 4);
  const auto space = discretize(scene);
  const std::vector<FeaturePoint> none;
  VisibilityIndex empty;
  CHECK_THROWS_AS(LocalizabilityModel(space, none, empty, {}), ValidationError);
}
