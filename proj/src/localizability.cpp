#include "markerplan/localizability.hpp"

#include <algorithm>

#include "markerplan/errors.hpp"
#include "markerplan/parallel.hpp"

namespace markerplan {

LocalizabilityModel::LocalizabilityModel(const GroundPlaneSpace& space,
                                         const std::vector<FeaturePoint>& points,
                                         const VisibilityIndex& index,
                                         const SimilarityConfig& similarity, NoiseModel noise)
    : space_(&space), points_(&points), index_(&index), noise_(std::move(noise)) {
  validate(similarity);
  if (index.points_seen.size() != space.camera_poses.size()) {
    throw ValidationError("visibility index does not match the camera set");
  }
  if (!(noise_.bearing_sigma > 0.0)) throw ValidationError("bearing sigma must be positive");
  point_covariances_.reserve(points.size());
  point_whitening_.reserve(points.size());
  for (const auto& p : points) {
    point_covariances_.push_back(point_covariance(p.similar_count, similarity));
    point_whitening_.push_back(whitening(point_covariances_.back()));
  }
  camera_prior_whitening_ = whitening(noise_.camera_prior);
  marker_prior_whitening_ = whitening(noise_.marker_prior);
}

bool LocalizabilityModel::sees_marker(int camera_idx, int marker_idx) const {
  const auto& row = index_->markers_seen.at(static_cast<std::size_t>(camera_idx));
  return std::binary_search(row.begin(), row.end(), marker_idx);
}

GaussianFactorGraph LocalizabilityModel::build_graph(int camera_idx, std::span<const int> markers) const {
  const auto c = static_cast<std::size_t>(camera_idx);
  std::vector<int> included;
  for (int m : markers) {
    if (sees_marker(camera_idx, m)) included.push_back(m);
  }
  std::sort(included.begin(), included.end());
  included.erase(std::unique(included.begin(), included.end()), included.end());
  std::vector<Pose6D> marker_poses;
  marker_poses.reserve(included.size());
  for (int m : included) marker_poses.push_back(space_->marker_candidates[static_cast<std::size_t>(m)].pose);
  return build_graph_at(space_->camera_poses.at(c), index_->points_seen[c], marker_poses, included);
}

GaussianFactorGraph LocalizabilityModel::build_graph_at(const Pose6D& cam, std::span<const int> visible_points,
                                                        std::span<const Pose6D> visible_markers,
                                                        std::span<const int> marker_sources) const {
  if (!marker_sources.empty() && marker_sources.size() != visible_markers.size()) {
    throw ValidationError("one source index per marker required");
  }
  GaussianFactorGraph graph;
  const int cam_key = graph.add_variable(VariableKind::Camera, 6);
  graph.add_factor({FactorKind::CameraPrior, {cam_key}, {camera_prior_whitening_}});

  for (int p : visible_points) {
    const int key = graph.add_variable(VariableKind::Point, 3, p);
    graph.add_factor({FactorKind::PointPrior, {key}, {point_whitening_[static_cast<std::size_t>(p)]}});
    graph.add_factor(bearing_factor(cam_key, key, cam, (*points_)[static_cast<std::size_t>(p)].position,
                                    noise_.bearing_sigma));
  }
  for (std::size_t i = 0; i < visible_markers.size(); ++i) {
    const int source = marker_sources.empty() ? -1 : marker_sources[i];
    const int key = graph.add_variable(VariableKind::Marker, 6, source);
    graph.add_factor({FactorKind::MarkerPrior, {key}, {marker_prior_whitening_}});
    graph.add_factor(relative_pose_factor(cam_key, key, cam, visible_markers[i], noise_.marker_relative));
  }
  graph.unconstrained =
      static_cast<int>(visible_points.size()) < noise_.min_points && visible_markers.empty();
  return graph;
}

double LocalizabilityModel::score_at(const Pose6D& camera, std::span<const int> visible_points,
                                     std::span<const Pose6D> visible_markers) const {
  const GaussianFactorGraph graph = build_graph_at(camera, visible_points, visible_markers);
  if (graph.unconstrained) return kUnconstrainedScore;
  return -entropy(camera_marginal(graph));
}

double LocalizabilityModel::score(int camera_idx, std::span<const int> markers) const {
  const GaussianFactorGraph graph = build_graph(camera_idx, markers);
  if (graph.unconstrained) return kUnconstrainedScore;
  return -entropy(camera_marginal(graph));
}

double LocalizabilityModel::score(int camera_idx) const {
  return score(camera_idx, space_->placed_markers);
}

double LocalizabilityModel::info_gain(int camera_idx, int marker_idx, std::span<const int> placed) const {
  if (!sees_marker(camera_idx, marker_idx)) return 0.0;
  if (std::find(placed.begin(), placed.end(), marker_idx) != placed.end()) return 0.0;
  std::vector<int> with(placed.begin(), placed.end());
  with.push_back(marker_idx);
  return score(camera_idx, with) - score(camera_idx, placed);
}

std::vector<double> LocalizabilityModel::scores(std::span<const int> markers, int jobs) const {
  std::vector<double> out(space_->camera_poses.size());
  parallel_for(out.size(), jobs, [&](std::size_t c) { out[c] = score(static_cast<int>(c), markers); });
  return out;
}

std::vector<double> location_means(const GroundPlaneSpace& space, std::span<const double> per_pose) {
  const std::size_t n_loc = space.camera_locations.size();
  std::vector<double> means(n_loc, 0.0);
  const auto n = static_cast<std::size_t>(space.orientations);
  for (std::size_t loc = 0; loc < n_loc; ++loc) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += per_pose[loc * n + k];
    means[loc] = sum / static_cast<double>(n);
  }
  return means;
}

}  // namespace markerplan
