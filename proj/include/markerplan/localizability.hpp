#pragma once

#include <span>
#include <vector>

#include "markerplan/factor_graph.hpp"
#include "markerplan/features.hpp"
#include "markerplan/scene.hpp"
#include "markerplan/visibility.hpp"

namespace markerplan {

/// Score assigned to a camera that sees fewer than `min_points` points and no
/// marker. Keeps scores totally ordered.
inline constexpr double kUnconstrainedScore = -1e6;

struct NoiseModel {
  /// Bearing noise on the unit sphere (radians).
  double bearing_sigma = deg2rad(1.0);
  /// Weak prior on the camera pose, [rotation; translation] ordering.
  Mat6 camera_prior = (Vec6() << 4.0 * kPi * kPi, 4.0 * kPi * kPi, 4.0 * kPi * kPi, 100.0, 100.0, 100.0)
                          .finished()
                          .asDiagonal();
  /// Prior on a marker pose, [rotation; translation].
  Mat6 marker_prior = Mat6::Identity() * 1e-4;
  /// Camera-to-marker relative pose noise, [rotation; translation].
  Mat6 marker_relative = (Vec6() << deg2rad(1.0) * deg2rad(1.0), deg2rad(1.0) * deg2rad(1.0),
                          deg2rad(1.0) * deg2rad(1.0), 1e-4, 1e-4, 1e-4)
                             .finished()
                             .asDiagonal();
  int min_points = 2;
};

/// Per-camera Gaussian localization problems over a discretized space.
///
/// Holds references to the space, points and visibility index; they must
/// outlive the model. All queries are const and safe to call concurrently.
/// Marker sets are given as candidate indices; only markers the camera
/// actually sees enter its graph, always in ascending index order so the
/// result does not depend on how the set was assembled.
class LocalizabilityModel {
 public:
  LocalizabilityModel(const GroundPlaneSpace& space, const std::vector<FeaturePoint>& points,
                      const VisibilityIndex& index, const SimilarityConfig& similarity,
                      NoiseModel noise = {});

  /// Camera prior, one prior + bearing pair per visible point, and one prior +
  /// relative-pose pair per included visible marker.
  GaussianFactorGraph build_graph(int camera_idx, std::span<const int> markers) const;

  /// Negative entropy of the camera marginal (nats), or kUnconstrainedScore.
  double score(int camera_idx, std::span<const int> markers) const;

  /// Same problem for an arbitrary camera pose, given the indices of the points
  /// it sees and the poses of the markers it sees. `marker_sources`, when not
  /// empty, tags each marker variable with its candidate index.
  GaussianFactorGraph build_graph_at(const Pose6D& camera, std::span<const int> visible_points,
                                     std::span<const Pose6D> visible_markers,
                                     std::span<const int> marker_sources = {}) const;
  double score_at(const Pose6D& camera, std::span<const int> visible_points,
                  std::span<const Pose6D> visible_markers) const;

  /// Score with the markers currently placed in the space.
  double score(int camera_idx) const;

  /// H(without m) - H(with m) given the markers in `placed`; exactly 0 when
  /// the camera does not see m or m is already placed.
  double info_gain(int camera_idx, int marker_idx, std::span<const int> placed) const;

  std::vector<double> scores(std::span<const int> markers, int jobs = 1) const;

  const GroundPlaneSpace& space() const { return *space_; }
  const std::vector<FeaturePoint>& points() const { return *points_; }
  const VisibilityIndex& index() const { return *index_; }
  const NoiseModel& noise() const { return noise_; }
  const Mat3& point_covariance_of(int point_idx) const {
    return point_covariances_[static_cast<std::size_t>(point_idx)];
  }
  bool sees_marker(int camera_idx, int marker_idx) const;

 private:
  const GroundPlaneSpace* space_;
  const std::vector<FeaturePoint>* points_;
  const VisibilityIndex* index_;
  NoiseModel noise_;
  std::vector<Mat3> point_covariances_;
  std::vector<Eigen::MatrixXd> point_whitening_;
  Eigen::MatrixXd camera_prior_whitening_;
  Eigen::MatrixXd marker_prior_whitening_;
};

/// Mean of per-pose values at each camera location (all orientations).
std::vector<double> location_means(const GroundPlaneSpace& space, std::span<const double> per_pose);

}  // namespace markerplan
