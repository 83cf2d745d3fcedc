#pragma once

#include <vector>

#include <Eigen/Core>

#include "markerplan/geometry.hpp"

namespace markerplan {

enum class VariableKind { Camera, Point, Marker };

enum class FactorKind { CameraPrior, PointPrior, Bearing, MarkerPrior, MarkerRelativePose };

struct Variable {
  VariableKind kind = VariableKind::Camera;
  int dim = 6;
  /// Feature-point or marker-candidate index the variable stands for; -1 for the camera.
  int source = -1;
};

/// Linearized, whitened Gaussian factor. Its negative log-likelihood is
/// 1/2 || sum_k blocks[k] * dx[keys[k]] ||^2, so it contributes
/// blocks[i]^T blocks[j] to the (keys[i], keys[j]) block of the information matrix.
struct LinearFactor {
  FactorKind kind = FactorKind::CameraPrior;
  std::vector<int> keys;
  std::vector<Eigen::MatrixXd> blocks;

  Eigen::Index rows() const { return blocks.empty() ? 0 : blocks.front().rows(); }
};

/// Gaussian factor graph linearized at ground truth. Variable 0 is always the
/// camera pose; every other variable is a point or a marker.
class GaussianFactorGraph {
 public:
  int add_variable(VariableKind kind, int dim, int source = -1);
  void add_factor(LinearFactor factor);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LinearFactor>& factors() const { return factors_; }
  std::vector<LinearFactor>& factors() { return factors_; }

  int count(VariableKind kind) const;
  int count(FactorKind kind) const;

  /// Total tangent dimension and the offset of each variable in it.
  int dimension() const;
  std::vector<int> offsets() const;

  /// Dense joint information matrix (sum of A^T A over all factors).
  Eigen::MatrixXd information_matrix() const;

  /// Set when the camera sees too little for a meaningful score.
  bool unconstrained = false;

 private:
  std::vector<Variable> variables_;
  std::vector<LinearFactor> factors_;
};

/// Square-root information A with A^T A = covariance^-1.
Eigen::MatrixXd whitening(const Eigen::MatrixXd& covariance);

/// Prior on a single variable with the given covariance.
LinearFactor prior_factor(FactorKind kind, int key, const Eigen::MatrixXd& covariance);

/// Unit-bearing factor between a camera and a point variable. The residual is
/// the bearing error on the 2-dof tangent plane of the unit sphere with
/// isotropic standard deviation `sigma` (radians).
LinearFactor bearing_factor(int camera_key, int point_key, const Pose6D& camera, const Vec3& point,
                            double sigma);

/// Relative-pose factor on T_c^-1 T_m. Residual ordering [rotation; translation]
/// in the camera frame; `covariance` uses the same ordering.
LinearFactor relative_pose_factor(int camera_key, int marker_key, const Pose6D& camera,
                                  const Pose6D& marker, const Mat6& covariance);

/// Marginal covariance of the camera pose: the inverse of the Schur complement
/// of the joint information matrix onto the camera block. Variables connected
/// only to the camera are eliminated block by block; other structures fall
/// back to a dense elimination. Throws RankDeficientError.
Mat6 camera_marginal(const GaussianFactorGraph& graph);

/// Differential entropy (nats) of a 6-dof Gaussian with covariance `sigma`:
/// 1/2 ln|sigma| + 3 (1 + ln 2 pi). Throws ValidationError unless SPD.
double entropy(const Mat6& sigma);

/// 3 (1 + ln 2 pi).
double entropy_constant();

}  // namespace markerplan
