#pragma once

#include <memory>

#include "markerplan/features.hpp"
#include "markerplan/localizability.hpp"
#include "markerplan/scene.hpp"
#include "markerplan/visibility.hpp"

namespace markerplan {

/// Everything derived from one scene description: feature points with their
/// similarity counts, the discretized space, the visibility index and the
/// localizability model. Pinned in memory because the model refers to the others.
class Workspace {
 public:
  Workspace(SceneDescription scene, SimilarityConfig similarity = {}, NoiseModel noise = {}, int jobs = 1);
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const SceneDescription& scene() const { return scene_; }
  const std::vector<FeaturePoint>& points() const { return points_; }
  const GroundPlaneSpace& space() const { return space_; }
  const VisibilityIndex& index() const { return index_; }
  const LocalizabilityModel& model() const { return *model_; }
  const SimilarityConfig& similarity() const { return similarity_; }

 private:
  SceneDescription scene_;
  SimilarityConfig similarity_;
  std::vector<FeaturePoint> points_;
  GroundPlaneSpace space_;
  VisibilityIndex index_;
  std::unique_ptr<LocalizabilityModel> model_;
};

/// Feature points of a scene: the stored ones, or generated from its recipe.
std::vector<FeaturePoint> scene_features(const SceneDescription& scene);

}  // namespace markerplan
