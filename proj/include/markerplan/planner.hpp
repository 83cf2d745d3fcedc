#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "markerplan/localizability.hpp"

namespace markerplan {

/// Empirical-CDF percentile: the smallest listed value v with F(v) >= q / 100,
/// where F(v) = #{x <= v} / N. `sorted` must be ascending; q = 0 gives the minimum.
double percentile(std::span<const double> sorted, double q);

/// Zero-based position in a sorted list of length n that percentile() returns.
std::size_t percentile_index(std::size_t n, double q);

/// Percentages of affected camera poses, 100 |C_m| / |C|, for a candidate set.
struct VisibilityStats {
  std::vector<int> markers;
  std::vector<double> percentages;
};

VisibilityStats visibility_stats(const GroundPlaneSpace& space, const VisibilityIndex& index,
                                 std::span<const int> candidates);

/// q = 100 - inf{p in [0, 100] : F_P(p) >= (100 - v) / 100}, clamped to [0, 100].
/// Ensures the most visible v percent of candidates can earn a nonzero gain.
double adaptive_q(const VisibilityStats& stats, double v);

/// Information gains of one marker at every camera pose (zeros where unaffected).
struct GainDistribution {
  std::vector<double> gains;
  std::vector<double> sorted;
};

GainDistribution gain_distribution(const LocalizabilityModel& model, int marker_idx,
                                   std::span<const int> placed, std::span<const double> current_scores);

/// q-th percentile of the marker's gain distribution against `placed`.
double marker_gain(const LocalizabilityModel& model, int marker_idx, std::span<const int> placed, double q);

/// Order-independent hash of a placed-marker set.
std::uint64_t placed_set_hash(std::span<const int> placed);

/// Localizability scores of every camera for a given placed set.
struct ScoreCache {
  std::vector<double> scores;
  std::uint64_t placed_hash = 0;
  std::size_t evaluations = 0;
};

ScoreCache initial_scores(const LocalizabilityModel& model, std::span<const int> placed, int jobs = 1);

/// Brings `cache` from `placed_after` minus `newly_placed` to `placed_after` by
/// rescoring only the cameras that see the new marker. Throws StaleCacheError
/// if the cache was built for a different set.
void incremental_rescore(const LocalizabilityModel& model, std::span<const int> placed_after,
                         int newly_placed, ScoreCache& cache);

struct PlannerConfig {
  int k = 0;
  double v = 90.0;
  int jobs = 1;
  /// Reuse a candidate's gains while none of its affected cameras changed.
  bool gain_caching = true;
  /// Echoed into the plan file.
  std::uint64_t seed = 0;
};

struct PlanStep {
  int marker = -1;
  Pose6D pose;
  double gain = 0.0;
  double q = 0.0;
  double mean_score_before = 0.0;
  double min_score_before = 0.0;
  /// Information gain of the chosen marker at every camera pose.
  std::vector<double> camera_gains;
};

struct PlanStats {
  std::size_t score_evaluations = 0;
  std::size_t gain_evaluations = 0;
  std::size_t cached_gain_reuses = 0;
};

struct PlacementPlan {
  std::vector<PlanStep> steps;
  PlannerConfig config;
  PlanStats stats;
  std::vector<std::string> warnings;
  /// Scores after the last placement.
  std::vector<double> final_scores;

  std::vector<int> marker_indices() const;
};

/// Greedy optimized marker placement. Each round recomputes q over the
/// remaining candidates, evaluates every remaining candidate's gain, and keeps
/// the first candidate (ascending index) with a strictly larger gain.
/// Markers already placed in the model's space are kept and never re-chosen.
PlacementPlan plan(const LocalizabilityModel& model, const PlannerConfig& config);

nlohmann::json plan_to_json(const PlacementPlan& plan);

}  // namespace markerplan
