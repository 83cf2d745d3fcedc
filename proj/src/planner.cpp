#include "markerplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "markerplan/errors.hpp"
#include "markerplan/io.hpp"
#include "markerplan/parallel.hpp"

namespace markerplan {

std::size_t percentile_index(std::size_t n, double q) {
  if (n == 0) throw ValidationError("percentile of an empty list");
  const double target = q / 100.0;
  // Smallest rank r in [1, n] with r / n >= target; F is monotone in r.
  std::size_t lo = 1;
  std::size_t hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (static_cast<double>(mid) / static_cast<double>(n) >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo - 1;
}

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("percentile of an empty list");
  return sorted[percentile_index(sorted.size(), q)];
}

VisibilityStats visibility_stats(const GroundPlaneSpace& space, const VisibilityIndex& index,
                                 std::span<const int> candidates) {
  VisibilityStats stats;
  const double n_cam = static_cast<double>(space.camera_poses.size());
  for (int m : candidates) {
    stats.markers.push_back(m);
    stats.percentages.push_back(
        100.0 * static_cast<double>(index.affected_cameras.at(static_cast<std::size_t>(m)).size()) / n_cam);
  }
  return stats;
}

double adaptive_q(const VisibilityStats& stats, double v) {
  if (stats.percentages.empty()) throw ValidationError("adaptive q needs at least one candidate");
  const double level = 100.0 - v;
  double threshold = 0.0;
  // F_P(p) >= 0 holds everywhere on [0, 100], so the infimum is 0.
  if (level > 0.0) {
    std::vector<double> sorted = stats.percentages;
    std::sort(sorted.begin(), sorted.end());
    threshold = percentile(sorted, level);
  }
  return std::clamp(100.0 - threshold, 0.0, 100.0);
}

GainDistribution gain_distribution(const LocalizabilityModel& model, int marker_idx,
                                   std::span<const int> placed, std::span<const double> current_scores) {
  GainDistribution dist;
  dist.gains.assign(model.space().camera_poses.size(), 0.0);
  if (std::find(placed.begin(), placed.end(), marker_idx) == placed.end()) {
    std::vector<int> with(placed.begin(), placed.end());
    with.push_back(marker_idx);
    for (int c : model.index().affected_cameras.at(static_cast<std::size_t>(marker_idx))) {
      dist.gains[static_cast<std::size_t>(c)] =
          model.score(c, with) - current_scores[static_cast<std::size_t>(c)];
    }
  }
  dist.sorted = dist.gains;
  std::sort(dist.sorted.begin(), dist.sorted.end());
  return dist;
}

double marker_gain(const LocalizabilityModel& model, int marker_idx, std::span<const int> placed, double q) {
  std::vector<double> current(model.space().camera_poses.size(), 0.0);
  for (int c : model.index().affected_cameras.at(static_cast<std::size_t>(marker_idx))) {
    current[static_cast<std::size_t>(c)] = model.score(c, placed);
  }
  const auto dist = gain_distribution(model, marker_idx, placed, current);
  return percentile(dist.sorted, q);
}

std::uint64_t placed_set_hash(std::span<const int> placed) {
  std::vector<int> sorted(placed.begin(), placed.end());
  std::sort(sorted.begin(), sorted.end());
  std::string bytes;
  for (int m : sorted) bytes += std::to_string(m) + ",";
  return fnv1a64(bytes);
}

ScoreCache initial_scores(const LocalizabilityModel& model, std::span<const int> placed, int jobs) {
  ScoreCache cache;
  cache.scores = model.scores(placed, jobs);
  cache.placed_hash = placed_set_hash(placed);
  cache.evaluations = cache.scores.size();
  return cache;
}

void incremental_rescore(const LocalizabilityModel& model, std::span<const int> placed_after,
                         int newly_placed, ScoreCache& cache) {
  std::vector<int> before;
  bool found = false;
  for (int m : placed_after) {
    if (m == newly_placed && !found) {
      found = true;
    } else {
      before.push_back(m);
    }
  }
  if (!found) throw ValidationError("newly placed marker missing from the placed set");
  if (placed_set_hash(before) != cache.placed_hash) {
    throw StaleCacheError("score cache does not match the previous placed set");
  }
  for (int c : model.index().affected_cameras.at(static_cast<std::size_t>(newly_placed))) {
    cache.scores[static_cast<std::size_t>(c)] = model.score(c, placed_after);
    ++cache.evaluations;
  }
  cache.placed_hash = placed_set_hash(placed_after);
}

std::vector<int> PlacementPlan::marker_indices() const {
  std::vector<int> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.marker);
  return out;
}

namespace {

struct CandidateGains {
  bool valid = false;
  /// Gains at affected_cameras[m], in that order.
  std::vector<double> values;
};

double gain_from_affected(const std::vector<double>& affected_gains, std::size_t n_cameras, double q,
                          std::vector<double>& scratch) {
  scratch.assign(n_cameras - affected_gains.size(), 0.0);
  scratch.insert(scratch.end(), affected_gains.begin(), affected_gains.end());
  std::sort(scratch.begin(), scratch.end());
  return percentile(scratch, q);
}

}  // namespace

PlacementPlan plan(const LocalizabilityModel& model, const PlannerConfig& config) {
  const auto& space = model.space();
  const auto& index = model.index();
  const std::size_t n_cam = space.camera_poses.size();
  const std::size_t n_markers = space.marker_candidates.size();
  if (config.k < 0) throw ValidationError("k must be non-negative");
  if (!(config.v >= 0.0 && config.v <= 100.0)) throw ValidationError("v must lie in [0, 100]");

  std::vector<int> placed = space.placed_markers;
  std::vector<int> remaining;
  for (std::size_t m = 0; m < n_markers; ++m) {
    if (!space.is_placed(static_cast<int>(m))) remaining.push_back(static_cast<int>(m));
  }
  if (static_cast<std::size_t>(config.k) > remaining.size()) {
    throw ValidationError("k = " + std::to_string(config.k) + " exceeds the " +
                          std::to_string(remaining.size()) + " available marker candidates");
  }

  PlacementPlan result;
  result.config = config;
  if (config.k == 0) {
    result.final_scores = model.scores(placed, config.jobs);
    return result;
  }

  ScoreCache cache = initial_scores(model, placed, config.jobs);
  result.stats.score_evaluations = cache.evaluations;
  std::vector<CandidateGains> gain_cache(n_markers);

  for (int round = 0; round < config.k; ++round) {
    if (round > 0) {
      const int last = result.steps.back().marker;
      const std::size_t before = cache.evaluations;
      incremental_rescore(model, placed, last, cache);
      result.stats.score_evaluations += cache.evaluations - before;
      for (int c : index.affected_cameras[static_cast<std::size_t>(last)]) {
        for (int m : index.markers_seen[static_cast<std::size_t>(c)]) {
          gain_cache[static_cast<std::size_t>(m)].valid = false;
        }
      }
    }

    const double q = adaptive_q(visibility_stats(space, index, remaining), config.v);

    std::vector<int> stale;
    for (int m : remaining) {
      if (!config.gain_caching || !gain_cache[static_cast<std::size_t>(m)].valid) stale.push_back(m);
    }
    parallel_for(stale.size(), config.jobs, [&](std::size_t i) {
      const int m = stale[i];
      auto& entry = gain_cache[static_cast<std::size_t>(m)];
      std::vector<int> with = placed;
      with.push_back(m);
      const auto& affected = index.affected_cameras[static_cast<std::size_t>(m)];
      entry.values.resize(affected.size());
      for (std::size_t j = 0; j < affected.size(); ++j) {
        const int c = affected[j];
        entry.values[j] = model.score(c, with) - cache.scores[static_cast<std::size_t>(c)];
      }
      entry.valid = true;
    });
    result.stats.gain_evaluations += stale.size();
    result.stats.cached_gain_reuses += remaining.size() - stale.size();
    for (int m : stale) {
      result.stats.score_evaluations += index.affected_cameras[static_cast<std::size_t>(m)].size();
    }

    int best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    std::vector<double> scratch;
    for (int m : remaining) {
      const double g = gain_from_affected(gain_cache[static_cast<std::size_t>(m)].values, n_cam, q, scratch);
      if (g > best_gain) {
        best_gain = g;
        best = m;
      }
    }

    PlanStep step;
    step.marker = best;
    step.pose = space.marker_candidates[static_cast<std::size_t>(best)].pose;
    step.gain = best_gain;
    step.q = q;
    step.mean_score_before =
        std::accumulate(cache.scores.begin(), cache.scores.end(), 0.0) / static_cast<double>(n_cam);
    step.min_score_before = *std::min_element(cache.scores.begin(), cache.scores.end());
    step.camera_gains.assign(n_cam, 0.0);
    const auto& affected = index.affected_cameras[static_cast<std::size_t>(best)];
    const auto& values = gain_cache[static_cast<std::size_t>(best)].values;
    for (std::size_t j = 0; j < affected.size(); ++j) {
      step.camera_gains[static_cast<std::size_t>(affected[j])] = values[j];
    }
    if (best_gain == 0.0) {
      result.warnings.push_back("round " + std::to_string(round) +
                                ": every candidate has zero localizability gain; picked the first");
    }
    result.steps.push_back(std::move(step));
    placed.push_back(best);
    remaining.erase(std::find(remaining.begin(), remaining.end(), best));
  }

  // Not needed for selection, so it is left out of the evaluation count.
  incremental_rescore(model, placed, result.steps.back().marker, cache);
  result.final_scores = std::move(cache.scores);
  return result;
}

nlohmann::json plan_to_json(const PlacementPlan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    nlohmann::json js = pose_to_json(s.pose);
    js["round"] = i;
    js["marker"] = s.marker;
    js["gain"] = s.gain;
    js["q"] = s.q;
    js["mean_score_before"] = s.mean_score_before;
    js["min_score_before"] = s.min_score_before;
    steps.push_back(std::move(js));
  }
  nlohmann::json doc;
  doc["config"] = {{"k", plan.config.k}, {"v", plan.config.v}, {"seed", plan.config.seed},
                   {"gain_caching", plan.config.gain_caching}};
  doc["steps"] = std::move(steps);
  doc["warnings"] = plan.warnings;
  return doc;
}

}  // namespace markerplan
