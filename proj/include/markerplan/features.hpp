#pragma once

#include <vector>

#include "markerplan/scene.hpp"

namespace markerplan {

struct SimilarityConfig {
  /// Maximum Euclidean descriptor distance for two points to look alike.
  double tau_desc = 0.2;
  /// Minimum 3D separation for a look-alike to count as ambiguous.
  double tau_geo = 2.0;
  /// Base point covariance (m^2) scaled by 1 + n_p.
  Mat3 base_covariance = Mat3::Identity() * 2.5e-3;
};

void validate(const SimilarityConfig& cfg);

double descriptor_distance(const FeaturePoint& a, const FeaturePoint& b);

/// Number of other points with a close descriptor but a distant location.
/// The query itself never qualifies since its separation is zero.
int count_similar(const FeaturePoint& query, const std::vector<FeaturePoint>& all,
                  const SimilarityConfig& cfg);

/// (1 + n_p) * base covariance.
Mat3 point_covariance(int similar_count, const SimilarityConfig& cfg);

/// Fills similar_count for every point. When `observed` is given, only points
/// flagged there are considered as look-alikes.
void assign_similar_counts(std::vector<FeaturePoint>& points, const SimilarityConfig& cfg,
                           const std::vector<bool>* observed = nullptr, int jobs = 1);

/// Places points along the walls with random unit descriptors. Polylines in an
/// aliasing group copy the arc-length positions, heights and descriptors of the
/// group's first polyline.
std::vector<FeaturePoint> generate_features(const SceneDescription& scene,
                                            const FeatureGenerationConfig& cfg);

}  // namespace markerplan
