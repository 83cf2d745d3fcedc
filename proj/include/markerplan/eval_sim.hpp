#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "markerplan/features.hpp"
#include "markerplan/localizability.hpp"
#include "markerplan/planner.hpp"
#include "markerplan/scene.hpp"
#include "markerplan/visibility.hpp"

namespace markerplan {

// ---------------------------------------------------------------------------
// Test poses

struct PerturbationBounds {
  double translation = 0.5;  // meters, per horizontal axis
  double yaw = 0.5;          // radians
  /// Perturbed poses closer than this to a wall, or outside free space, are redrawn.
  double wall_clearance = 0.05;
};

struct TestPose {
  Pose6D ground_truth;
  int parent = -1;
  /// Drawn (dx, dy, dyaw).
  Vec3 perturbation = Vec3::Zero();
  /// Seed of the observation noise stream for this pose.
  std::uint64_t seed = 0;
};

enum class SamplingMode { Weighted, Uniform };

/// w(c) = 2 l* - mean(l) - l(c). Lower scores get larger weights; all weights
/// are non-negative. Throws on an empty input.
std::vector<double> sampling_weights(std::span<const double> scores);

/// Draws parents by weight (or uniformly) and perturbs them uniformly in x, y
/// and yaw. Unconstrained-sentinel scores are replaced by the lowest finite
/// score before weighting. All-zero weights fall back to uniform sampling.
std::vector<TestPose> sample_test_poses(const GroundPlaneSpace& space, const std::vector<Polyline>& walls,
                                        std::span<const double> scores, int n, SamplingMode mode,
                                        std::uint64_t seed, const PerturbationBounds& bounds = {});

std::uint64_t test_set_hash(const std::vector<TestPose>& poses);

// ---------------------------------------------------------------------------
// Localization

struct LocalizerConfig {
  double bearing_sigma = deg2rad(1.0);
  double ransac_threshold = deg2rad(2.0);
  int ransac_iterations = 200;
  /// Per-dimension Gaussian noise added to observed descriptors before renormalizing.
  double descriptor_noise = 0.05;
  double marker_translation_sigma = 0.01;
  double marker_rotation_sigma = deg2rad(1.0);
  /// A decoded marker supplies its four corners as correspondences.
  int correspondences_per_marker = 4;
  int refine_iterations = 20;
};

/// What the localizer's map contains: the walls (for visibility), the map
/// points with descriptors, and the placed markers keyed by ID (their index).
struct LocalizationWorld {
  const std::vector<Polyline>* walls = nullptr;
  const std::vector<FeaturePoint>* points = nullptr;
  std::vector<Pose6D> markers;
  VisibilityParams visibility;
};

struct LocalizationResult {
  bool failed = true;
  Pose6D estimated;
  double rotation_error = 0.0;
  double translation_error = 0.0;
  int inliers = 0;
  bool used_marker = false;
  int observed_points = 0;
  int observed_markers = 0;
};

/// Angular distance |arccos((tr(R_est^T R_true) - 1) / 2)|, argument clamped to [-1, 1].
double rotation_error(const Mat3& estimated, const Mat3& truth);
double translation_error(const Vec3& estimated, const Vec3& truth);

/// Planar resection from horizontal bearing angles (radians, counter-clockwise
/// from the optical axis) to known points. Solves the linear system in
/// (e^{-i yaw}, position * e^{-i yaw}); needs at least three non-degenerate rays.
std::optional<Pose6D> planar_resection(std::span<const Vec3> world_points, std::span<const double> angles);

/// Simulates one query: noisy observations from the true pose, nearest-descriptor
/// association (markers associate by ID), hypothesize-and-verify over minimal
/// point triples and marker poses, and least-squares refinement on the inliers
/// plus every observed marker.
LocalizationResult localize(const TestPose& test, const LocalizationWorld& world, const LocalizerConfig& cfg);

/// 100 * fraction of results localized within both thresholds (failures count as misses).
double recall(std::span<const LocalizationResult> results, double max_translation, double max_rotation);

// ---------------------------------------------------------------------------
// Baseline placements

/// k distinct candidates drawn uniformly.
std::vector<int> random_placement(int n_candidates, int k, std::uint64_t seed);

/// k candidates nearest to equally spaced arc-length targets along the
/// concatenated perimeter, the first target at offset_fraction * spacing.
std::vector<int> uniform_placement(const GroundPlaneSpace& space, int k, double offset_fraction = 0.0);

// ---------------------------------------------------------------------------
// Experiments

enum class StrategyKind { None, Omp, Random, Uniform };

struct PlacementStrategy {
  StrategyKind kind = StrategyKind::None;
  int version = 0;
  std::string name() const;
};

struct ExperimentConfig {
  std::vector<int> k_values = {0, 5};
  int n_test = 500;
  SamplingMode sampling = SamplingMode::Weighted;
  int versions = 5;  // random and uniform placements per k
  std::uint64_t seed = 1;
  double max_translation = 0.05;
  double max_rotation = deg2rad(5.0);
  double v = 90.0;
  int jobs = 1;
  std::vector<StrategyKind> strategies = {StrategyKind::None, StrategyKind::Omp, StrategyKind::Random,
                                          StrategyKind::Uniform};
  LocalizerConfig localizer;
  PerturbationBounds perturbation;
};

struct ExperimentRow {
  std::string scene;
  std::string strategy;
  int version = 0;
  int k = 0;
  int n = 0;
  double recall = 0.0;
  double mean_translation_error = 0.0;
  double mean_rotation_error = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<TestPose> test_poses;
  std::uint64_t test_set_hash = 0;
  std::vector<double> baseline_scores;
  PlacementPlan omp_plan;

  /// Mean and standard deviation of recall over versions of one strategy at one k.
  std::pair<double, double> recall_stats(const std::string& strategy, int k) const;
};

class Workspace;

/// Localizes every test pose against the given marker poses.
std::vector<LocalizationResult> evaluate_placement(const Workspace& ws, std::span<const Pose6D> markers,
                                                   std::span<const TestPose> tests,
                                                   const LocalizerConfig& cfg, int jobs);

/// Localizability score at each test pose's true pose, using the points and
/// markers visible from there.
std::vector<double> test_pose_scores(const Workspace& ws, std::span<const TestPose> tests,
                                     std::span<const Pose6D> markers, int jobs);

std::vector<Pose6D> marker_poses(const GroundPlaneSpace& space, std::span<const int> indices);

ExperimentRow summarize(const std::string& scene, const std::string& strategy, int version, int k,
                        std::span<const LocalizationResult> results, double max_translation,
                        double max_rotation);

ExperimentResult run_experiment(const Workspace& ws, const ExperimentConfig& cfg);

std::string experiment_csv(const std::vector<ExperimentRow>& rows);

/// Shifts every marker along its wall by +delta or -delta (sign drawn per marker).
std::vector<Pose6D> shifted_markers(const Workspace& ws, std::span<const int> indices, double delta,
                                    std::uint64_t seed);

}  // namespace markerplan
