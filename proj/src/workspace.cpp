#include "markerplan/workspace.hpp"

namespace markerplan {

std::vector<FeaturePoint> scene_features(const SceneDescription& scene) {
  if (!scene.feature_points.empty() || !scene.feature_generation) return scene.feature_points;
  return generate_features(scene, *scene.feature_generation);
}

Workspace::Workspace(SceneDescription scene, SimilarityConfig similarity, NoiseModel noise, int jobs)
    : scene_(std::move(scene)), similarity_(similarity) {
  space_ = discretize(scene_);
  points_ = scene_features(scene_);
  index_ = build_index(space_, scene_.walls, points_, visibility_params(scene_), jobs);
  std::vector<bool> observed(points_.size(), false);
  for (const auto& row : index_.points_seen) {
    for (int p : row) observed[static_cast<std::size_t>(p)] = true;
  }
  assign_similar_counts(points_, similarity_, &observed, jobs);
  model_ = std::make_unique<LocalizabilityModel>(space_, points_, index_, similarity_, std::move(noise));
}

}  // namespace markerplan
