#include "markerplan/eval_sim.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "markerplan/errors.hpp"
#include "markerplan/io.hpp"
#include "markerplan/parallel.hpp"
#include "markerplan/rng.hpp"
#include "markerplan/workspace.hpp"

namespace markerplan {

// ---------------------------------------------------------------------------
// Test poses

std::vector<double> sampling_weights(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("sampling weights need at least one score");
  const double best = *std::max_element(scores.begin(), scores.end());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  std::vector<double> weights;
  weights.reserve(scores.size());
  for (double s : scores) weights.push_back(std::max(0.0, 2.0 * best - mean - s));
  return weights;
}

std::vector<TestPose> sample_test_poses(const GroundPlaneSpace& space, const std::vector<Polyline>& walls,
                                        std::span<const double> scores, int n, SamplingMode mode,
                                        std::uint64_t seed, const PerturbationBounds& bounds) {
  if (n <= 0) throw ValidationError("number of test poses must be positive");
  const std::size_t n_cam = space.camera_poses.size();
  if (scores.size() != n_cam) throw ValidationError("one score per camera pose required");

  std::vector<double> weights(n_cam, 1.0);
  if (mode == SamplingMode::Weighted) {
    double lowest = std::numeric_limits<double>::infinity();
    for (double s : scores) {
      if (s > kUnconstrainedScore) lowest = std::min(lowest, s);
    }
    std::vector<double> finite(scores.begin(), scores.end());
    for (double& s : finite) {
      if (s <= kUnconstrainedScore) s = std::isfinite(lowest) ? lowest : 0.0;
    }
    weights = sampling_weights(finite);
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0.0; })) {
      weights.assign(n_cam, 1.0);
    }
  }
  std::vector<double> cumulative(n_cam);
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  const double total = cumulative.back();

  std::mt19937_64 parent_rng(derive_seed(seed, "test-parents"));
  const std::uint64_t perturb_base = derive_seed(seed, "test-perturbation");
  const std::uint64_t observe_base = derive_seed(seed, "test-observation");

  std::vector<TestPose> poses;
  poses.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(parent_rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const auto parent = static_cast<std::size_t>(it - cumulative.begin());

    const Pose6D& base = space.camera_poses[parent];
    const Vec2 center = base.translation.head<2>();
    const double yaw = camera_yaw(base);
    std::mt19937_64 rng(derive_seed(perturb_base, static_cast<std::uint64_t>(i)));
    Vec3 delta = Vec3::Zero();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Vec3 candidate(uniform(rng, -bounds.translation, bounds.translation),
                           uniform(rng, -bounds.translation, bounds.translation),
                           uniform(rng, -bounds.yaw, bounds.yaw));
      const Vec2 pos = center + candidate.head<2>();
      if (in_free_space(walls, pos) && distance_to_walls(walls, pos) >= bounds.wall_clearance) {
        delta = candidate;
        break;
      }
    }
    TestPose tp;
    tp.parent = static_cast<int>(parent);
    tp.perturbation = delta;
    tp.ground_truth = camera_pose(center + delta.head<2>(), yaw + delta.z(), base.translation.z());
    tp.seed = derive_seed(observe_base, static_cast<std::uint64_t>(i));
    poses.push_back(tp);
  }
  return poses;
}

std::uint64_t test_set_hash(const std::vector<TestPose>& poses) {
  std::ostringstream ss;
  ss.precision(17);
  for (const auto& p : poses) {
    ss << p.parent << ' ' << p.seed;
    for (int i = 0; i < 3; ++i) ss << ' ' << p.ground_truth.translation[i];
    for (int i = 0; i < 9; ++i) ss << ' ' << p.ground_truth.rotation(i / 3, i % 3);
    ss << '\n';
  }
  return fnv1a64(ss.str());
}

// ---------------------------------------------------------------------------
// Metrics

double rotation_error(const Mat3& estimated, const Mat3& truth) {
  const double c = std::clamp(((estimated.transpose() * truth).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::abs(std::acos(c));
}

double translation_error(const Vec3& estimated, const Vec3& truth) { return (estimated - truth).norm(); }

double recall(std::span<const LocalizationResult> results, double max_translation, double max_rotation) {
  if (results.empty()) throw ValidationError("recall of an empty result set");
  if (!(max_translation > 0.0) || !(max_rotation > 0.0)) throw ValidationError("thresholds must be positive");
  const auto hits = std::count_if(results.begin(), results.end(), [&](const LocalizationResult& r) {
    return !r.failed && r.translation_error <= max_translation && r.rotation_error <= max_rotation;
  });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

// ---------------------------------------------------------------------------
// Localization

namespace {

struct PointObservation {
  Vec3 bearing;  // camera frame, unit
  int map_index = -1;
};

struct MarkerObservation {
  int id = -1;
  Vec3 bearing;
  Pose6D relative;  // T_camera^-1 T_marker as measured
};

Vec3 perturb_direction(const Vec3& b, double sigma, std::mt19937_64& rng) {
  const Vec3 noise(standard_normal(rng), standard_normal(rng), standard_normal(rng));
  // Project the rotation vector onto the tangent plane so the bearing moves by ~sigma per axis.
  const Vec3 tangent = (noise - noise.dot(b) * b) * sigma;
  return (so3_exp(tangent) * b).normalized();
}

double bearing_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

struct Hypothesis {
  Pose6D pose;
  int point_inliers = 0;
  int marker_inliers = 0;
};

bool marker_consistent(const Pose6D& camera, const Pose6D& map_marker, const MarkerObservation& obs) {
  const Pose6D predicted = camera.inverse() * map_marker;
  const double rot = rotation_error(predicted.rotation, obs.relative.rotation);
  const double trans = (predicted.translation - obs.relative.translation).norm();
  return rot < deg2rad(5.0) && trans < 0.1;
}

std::vector<int> point_inliers(const Pose6D& pose, const std::vector<PointObservation>& obs,
                               const std::vector<FeaturePoint>& map, double threshold) {
  std::vector<int> inliers;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Vec3 q = pose.inverse_transform(map[static_cast<std::size_t>(obs[i].map_index)].position);
    if (q.norm() < 1e-9) continue;
    if (bearing_angle(q.normalized(), obs[i].bearing) < threshold) inliers.push_back(static_cast<int>(i));
  }
  return inliers;
}

/// Levenberg-Marquardt over the camera pose with point bearings and full marker constraints.
Pose6D refine_pose(Pose6D pose, const std::vector<PointObservation>& points, std::span<const int> inliers,
                   const std::vector<MarkerObservation>& markers, const LocalizationWorld& world,
                   const LocalizerConfig& cfg) {
  const auto& map = *world.points;
  // Noise-free simulations still need finite weights.
  const double bearing_sigma = std::max(cfg.bearing_sigma, 1e-6);
  const double rotation_sigma = std::max(cfg.marker_rotation_sigma, 1e-6);
  const double translation_sigma = std::max(cfg.marker_translation_sigma, 1e-6);
  auto evaluate = [&](const Pose6D& x, Mat6* h, Vec6* g) {
    double cost = 0.0;
    if (h) h->setZero();
    if (g) g->setZero();
    const Mat3 rt = x.rotation.transpose();
    auto add_bearing = [&](const Vec3& world_point, const Vec3& observed, double sigma) {
      const Vec3 q = rt * (world_point - x.translation);
      const double range = q.norm();
      if (range < 1e-9) return;
      const Vec3 b = q / range;
      const Vec3 r = (b - observed) / sigma;
      cost += r.squaredNorm();
      if (!h) return;
      Eigen::Matrix<double, 3, 6> j;
      j.leftCols<3>() = skew(q);
      j.rightCols<3>() = -rt;
      j = ((Mat3::Identity() - b * b.transpose()) / (range * sigma)) * j;
      h->noalias() += j.transpose() * j;
      g->noalias() += j.transpose() * r;
    };
    for (int i : inliers) {
      const auto& o = points[static_cast<std::size_t>(i)];
      add_bearing(map[static_cast<std::size_t>(o.map_index)].position, o.bearing, bearing_sigma);
    }
    for (const auto& m : markers) {
      const Pose6D& map_marker = world.markers[static_cast<std::size_t>(m.id)];
      add_bearing(map_marker.translation, m.bearing, bearing_sigma);
      const Mat3 r_rel = rt * map_marker.rotation;
      const Vec3 t_rel = rt * (map_marker.translation - x.translation);
      Vec6 r;
      r.head<3>() = so3_log(m.relative.rotation.transpose() * r_rel) / rotation_sigma;
      r.tail<3>() = (t_rel - m.relative.translation) / translation_sigma;
      cost += r.squaredNorm();
      if (!h) continue;
      Mat6 j = Mat6::Zero();
      j.topLeftCorner<3, 3>() = -r_rel.transpose() / rotation_sigma;
      j.bottomLeftCorner<3, 3>() = skew(t_rel) / translation_sigma;
      j.bottomRightCorner<3, 3>() = -rt / translation_sigma;
      h->noalias() += j.transpose() * j;
      g->noalias() += j.transpose() * r;
    }
    return cost;
  };

  double lambda = 1e-4;
  Mat6 h;
  Vec6 g;
  double cost = evaluate(pose, &h, &g);
  for (int it = 0; it < cfg.refine_iterations; ++it) {
    Mat6 damped = h;
    damped.diagonal() += lambda * (h.diagonal().array() + 1e-9).matrix();
    const Vec6 step = damped.ldlt().solve(-g);
    if (!step.allFinite()) break;
    const Pose6D trial = pose.retract(step);
    const double trial_cost = evaluate(trial, nullptr, nullptr);
    if (trial_cost < cost) {
      pose = trial;
      lambda = std::max(lambda * 0.3, 1e-9);
      const double previous = cost;
      cost = evaluate(pose, &h, &g);
      if (previous - cost < 1e-10 * (1.0 + previous) || step.norm() < 1e-10) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e8) break;
    }
  }
  return pose;
}

}  // namespace

std::optional<Pose6D> planar_resection(std::span<const Vec3> world_points, std::span<const double> angles) {
  const std::size_t n = world_points.size();
  if (n < 3 || angles.size() != n) return std::nullopt;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    const double er = std::cos(angles[i]);
    const double ei = -std::sin(angles[i]);
    const double px = world_points[i].x();
    const double py = world_points[i].y();
    a.row(static_cast<Eigen::Index>(i)) << px * ei + py * er, px * er - py * ei, -ei, -er;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[2] < 1e-8 * sv[0]) return std::nullopt;
  Eigen::Vector4d x = svd.matrixV().col(3);
  const double norm = std::hypot(x[0], x[1]);
  if (norm < 1e-12) return std::nullopt;
  x /= norm;
  // Choose the sign that puts the points in front of the camera.
  const std::complex<double> w0(x[0], x[1]);
  const std::complex<double> z0(x[2], x[3]);
  int positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<double> p(world_points[i].x(), world_points[i].y());
    const std::complex<double> e = std::polar(1.0, -angles[i]);
    if (((p * w0 - z0) * e).real() > 0.0) ++positive;
  }
  if (2 * positive < static_cast<int>(n)) x = -x;
  const std::complex<double> w(x[0], x[1]);
  const std::complex<double> z(x[2], x[3]);
  const std::complex<double> c = z * std::conj(w);
  const double yaw = -std::arg(w);
  return camera_pose(Vec2(c.real(), c.imag()), yaw, 0.0);
}

LocalizationResult localize(const TestPose& test, const LocalizationWorld& world, const LocalizerConfig& cfg) {
  const auto& walls = *world.walls;
  const auto& map = *world.points;
  const Pose6D& truth = test.ground_truth;
  std::mt19937_64 rng(test.seed);

  std::vector<PointObservation> points;
  for (std::size_t p = 0; p < map.size(); ++p) {
    if (!point_visible(truth, map[p].position, walls, world.visibility)) continue;
    PointObservation obs;
    obs.bearing = perturb_direction(truth.inverse_transform(map[p].position).normalized(), cfg.bearing_sigma, rng);
    Eigen::VectorXd desc = map[p].descriptor;
    for (Eigen::Index d = 0; d < desc.size(); ++d) desc[d] += cfg.descriptor_noise * standard_normal(rng);
    desc.normalize();
    // Identical descriptors are indistinguishable: pick uniformly among ties.
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> nearest;
    for (std::size_t j = 0; j < map.size(); ++j) {
      const double dist = (map[j].descriptor - desc).squaredNorm();
      if (dist < best - 1e-12) {
        best = dist;
        nearest.assign(1, static_cast<int>(j));
      } else if (dist <= best + 1e-12) {
        nearest.push_back(static_cast<int>(j));
      }
    }
    obs.map_index = nearest.size() == 1 ? nearest.front() : nearest[uniform_index(rng, nearest.size())];
    points.push_back(obs);
  }

  std::vector<MarkerObservation> markers;
  for (std::size_t m = 0; m < world.markers.size(); ++m) {
    if (!marker_visible(truth, world.markers[m], walls, world.visibility)) continue;
    MarkerObservation obs;
    obs.id = static_cast<int>(m);
    const Pose6D rel = truth.inverse() * world.markers[m];
    obs.bearing = perturb_direction(rel.translation.normalized(), cfg.bearing_sigma, rng);
    const Vec3 rot_noise(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    const Vec3 trans_noise(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    obs.relative.rotation = rel.rotation * so3_exp(rot_noise * cfg.marker_rotation_sigma);
    obs.relative.translation = rel.translation + trans_noise * cfg.marker_translation_sigma;
    markers.push_back(obs);
  }

  LocalizationResult result;
  result.observed_points = static_cast<int>(points.size());
  result.observed_markers = static_cast<int>(markers.size());
  const int correspondences =
      static_cast<int>(points.size()) + cfg.correspondences_per_marker * static_cast<int>(markers.size());
  if (correspondences < 3) return result;

  const int marker_weight = static_cast<int>(points.size()) + 1;
  auto evaluate = [&](const Pose6D& pose) {
    Hypothesis h;
    h.pose = pose;
    h.point_inliers = static_cast<int>(point_inliers(pose, points, map, cfg.ransac_threshold).size());
    for (const auto& m : markers) {
      if (marker_consistent(pose, world.markers[static_cast<std::size_t>(m.id)], m)) ++h.marker_inliers;
    }
    return h;
  };
  auto better = [&](const Hypothesis& a, const Hypothesis& b) {
    return a.marker_inliers * marker_weight + a.point_inliers > b.marker_inliers * marker_weight + b.point_inliers;
  };

  std::optional<Hypothesis> best;
  for (const auto& m : markers) {
    const Hypothesis h = evaluate(world.markers[static_cast<std::size_t>(m.id)] * m.relative.inverse());
    if (!best || better(h, *best)) best = h;
  }
  if (points.size() >= 3) {
    std::array<Vec3, 3> sample_points;
    std::array<double, 3> sample_angles;
    for (int it = 0; it < cfg.ransac_iterations; ++it) {
      std::array<std::size_t, 3> idx{};
      idx[0] = uniform_index(rng, points.size());
      do {
        idx[1] = uniform_index(rng, points.size());
      } while (idx[1] == idx[0]);
      do {
        idx[2] = uniform_index(rng, points.size());
      } while (idx[2] == idx[0] || idx[2] == idx[1]);
      for (int s = 0; s < 3; ++s) {
        const auto& o = points[idx[static_cast<std::size_t>(s)]];
        sample_points[static_cast<std::size_t>(s)] = map[static_cast<std::size_t>(o.map_index)].position;
        sample_angles[static_cast<std::size_t>(s)] = std::atan2(-o.bearing.x(), o.bearing.z());
      }
      const auto pose = planar_resection(sample_points, sample_angles);
      if (!pose) continue;
      const Hypothesis h = evaluate(*pose);
      if (!best || better(h, *best)) best = h;
    }
  }
  if (!best) return result;
  if (best->marker_inliers == 0 && best->point_inliers < 3) return result;

  Pose6D pose = best->pose;
  std::vector<int> inliers = point_inliers(pose, points, map, cfg.ransac_threshold);
  for (int pass = 0; pass < 2; ++pass) {
    pose = refine_pose(pose, points, inliers, markers, world, cfg);
    inliers = point_inliers(pose, points, map, cfg.ransac_threshold);
  }

  result.failed = false;
  result.estimated = pose;
  result.inliers = static_cast<int>(inliers.size()) + static_cast<int>(markers.size());
  result.used_marker = !markers.empty();
  result.rotation_error = rotation_error(pose.rotation, truth.rotation);
  result.translation_error = translation_error(pose.translation, truth.translation);
  return result;
}

// ---------------------------------------------------------------------------
// Baselines

std::vector<int> random_placement(int n_candidates, int k, std::uint64_t seed) {
  if (k < 0 || k > n_candidates) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the " + std::to_string(n_candidates) +
                          " marker candidates");
  }
  std::vector<int> pool(static_cast<std::size_t>(n_candidates));
  std::iota(pool.begin(), pool.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   uniform_index(rng, static_cast<std::uint64_t>(n_candidates - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

std::vector<int> uniform_placement(const GroundPlaneSpace& space, int k, double offset_fraction) {
  const int n = static_cast<int>(space.marker_candidates.size());
  if (k < 0 || k > n) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the " + std::to_string(n) +
                          " marker candidates");
  }
  const double total = space.perimeter_length;
  const double spacing = k > 0 ? total / k : 0.0;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<int> out;
  for (int j = 0; j < k; ++j) {
    const double target = std::fmod((j + offset_fraction) * spacing, total);
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int m = 0; m < n; ++m) {
      if (used[static_cast<std::size_t>(m)]) continue;
      const double d = std::abs(space.marker_candidates[static_cast<std::size_t>(m)].perimeter_position - target);
      const double circular = std::min(d, total - d);
      if (circular < best_dist - 1e-12) {
        best_dist = circular;
        best = m;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    out.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

std::string PlacementStrategy::name() const {
  switch (kind) {
    case StrategyKind::None: return "none";
    case StrategyKind::Omp: return "omp";
    case StrategyKind::Random: return "random";
    case StrategyKind::Uniform: return "uniform";
  }
  return "unknown";
}

std::pair<double, double> ExperimentResult::recall_stats(const std::string& strategy, int k) const {
  std::vector<double> values;
  for (const auto& row : rows) {
    if (row.strategy == strategy && row.k == k) values.push_back(row.recall);
  }
  if (values.empty()) throw ValidationError("no rows for strategy " + strategy);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

std::vector<Pose6D> marker_poses(const GroundPlaneSpace& space, std::span<const int> indices) {
  std::vector<Pose6D> out;
  out.reserve(indices.size());
  for (int m : indices) out.push_back(space.marker_candidates.at(static_cast<std::size_t>(m)).pose);
  return out;
}

std::vector<LocalizationResult> evaluate_placement(const Workspace& ws, std::span<const Pose6D> markers,
                                                   std::span<const TestPose> tests,
                                                   const LocalizerConfig& cfg, int jobs) {
  LocalizationWorld world;
  world.walls = &ws.scene().walls;
  world.points = &ws.points();
  world.markers.assign(markers.begin(), markers.end());
  world.visibility = visibility_params(ws.scene());
  std::vector<LocalizationResult> results(tests.size());
  parallel_for(tests.size(), jobs, [&](std::size_t i) { results[i] = localize(tests[i], world, cfg); });
  return results;
}

std::vector<double> test_pose_scores(const Workspace& ws, std::span<const TestPose> tests,
                                     std::span<const Pose6D> markers, int jobs) {
  const auto& walls = ws.scene().walls;
  const auto& points = ws.points();
  const VisibilityParams params = visibility_params(ws.scene());
  std::vector<double> out(tests.size());
  parallel_for(tests.size(), jobs, [&](std::size_t i) {
    const Pose6D& pose = tests[i].ground_truth;
    std::vector<int> seen_points;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (point_visible(pose, points[p].position, walls, params)) seen_points.push_back(static_cast<int>(p));
    }
    std::vector<Pose6D> seen_markers;
    for (const auto& m : markers) {
      if (marker_visible(pose, m, walls, params)) seen_markers.push_back(m);
    }
    out[i] = ws.model().score_at(pose, seen_points, seen_markers);
  });
  return out;
}

ExperimentRow summarize(const std::string& scene, const std::string& strategy, int version, int k,
                        std::span<const LocalizationResult> results, double max_translation,
                        double max_rotation) {
  ExperimentRow row;
  row.scene = scene;
  row.strategy = strategy;
  row.version = version;
  row.k = k;
  row.n = static_cast<int>(results.size());
  row.recall = recall(results, max_translation, max_rotation);
  double st = 0.0;
  double sr = 0.0;
  int ok = 0;
  for (const auto& r : results) {
    if (r.failed) continue;
    st += r.translation_error;
    sr += r.rotation_error;
    ++ok;
  }
  row.mean_translation_error = ok > 0 ? st / ok : std::numeric_limits<double>::quiet_NaN();
  row.mean_rotation_error = ok > 0 ? sr / ok : std::numeric_limits<double>::quiet_NaN();
  return row;
}

ExperimentResult run_experiment(const Workspace& ws, const ExperimentConfig& cfg) {
  ExperimentResult out;
  const auto& space = ws.space();
  const std::vector<int> no_markers;
  out.baseline_scores = ws.model().scores(no_markers, cfg.jobs);
  out.test_poses = sample_test_poses(space, ws.scene().walls, out.baseline_scores, cfg.n_test, cfg.sampling,
                                     derive_seed(cfg.seed, "test-poses"), cfg.perturbation);
  out.test_set_hash = test_set_hash(out.test_poses);

  const int k_max = cfg.k_values.empty() ? 0 : *std::max_element(cfg.k_values.begin(), cfg.k_values.end());
  const bool wants_omp =
      std::find(cfg.strategies.begin(), cfg.strategies.end(), StrategyKind::Omp) != cfg.strategies.end();
  if (wants_omp && k_max > 0) {
    PlannerConfig pc;
    pc.k = k_max;
    pc.v = cfg.v;
    pc.jobs = cfg.jobs;
    pc.seed = cfg.seed;
    out.omp_plan = plan(ws.model(), pc);
  }

  const std::string& scene = ws.scene().name;
  auto run = [&](const std::string& name, int version, int k, const std::vector<int>& indices) {
    const auto poses = marker_poses(space, indices);
    const auto results = evaluate_placement(ws, poses, out.test_poses, cfg.localizer, cfg.jobs);
    out.rows.push_back(summarize(scene, name, version, k, results, cfg.max_translation, cfg.max_rotation));
  };

  for (StrategyKind kind : cfg.strategies) {
    const std::string name = PlacementStrategy{kind, 0}.name();
    for (int k : cfg.k_values) {
      switch (kind) {
        case StrategyKind::None:
          run(name, 0, k, {});
          break;
        case StrategyKind::Omp: {
          const auto all = out.omp_plan.marker_indices();
          run(name, 0, k, std::vector<int>(all.begin(), all.begin() + k));
          break;
        }
        case StrategyKind::Random:
          for (int s = 0; s < cfg.versions; ++s) {
            const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, "random-placement"),
                                                   static_cast<std::uint64_t>(s * 1000 + k));
            run(name, s, k, random_placement(static_cast<int>(space.marker_candidates.size()), k, seed));
          }
          break;
        case StrategyKind::Uniform:
          for (int s = 0; s < cfg.versions; ++s) {
            run(name, s, k, uniform_placement(space, k, static_cast<double>(s) / cfg.versions));
          }
          break;
      }
    }
  }
  return out;
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = "scene,strategy,seed,k,N,recall,mean_translation_error,mean_rotation_error\n";
  for (const auto& r : rows) {
    out += r.scene + "," + r.strategy + "," + std::to_string(r.version) + "," + std::to_string(r.k) + "," +
           std::to_string(r.n) + "," + format_value(r.recall) + "," + format_value(r.mean_translation_error) +
           "," + format_value(r.mean_rotation_error) + "\n";
  }
  return out;
}

std::vector<Pose6D> shifted_markers(const Workspace& ws, std::span<const int> indices, double delta,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Pose6D> out;
  out.reserve(indices.size());
  for (int m : indices) {
    const double sign = (rng() & 1U) ? 1.0 : -1.0;
    const auto& cand = ws.space().marker_candidates.at(static_cast<std::size_t>(m));
    out.push_back(shift_along_perimeter(ws.scene().walls, cand, sign * delta).pose);
  }
  return out;
}

}  // namespace markerplan
