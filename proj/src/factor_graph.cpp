#include "markerplan/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "markerplan/errors.hpp"

namespace markerplan {

int GaussianFactorGraph::add_variable(VariableKind kind, int dim, int source) {
  variables_.push_back({kind, dim, source});
  return static_cast<int>(variables_.size()) - 1;
}

void GaussianFactorGraph::add_factor(LinearFactor factor) {
  if (factor.keys.size() != factor.blocks.size()) {
    throw ValidationError("factor keys and blocks differ in count");
  }
  for (std::size_t k = 0; k < factor.keys.size(); ++k) {
    const int key = factor.keys[k];
    if (key < 0 || key >= static_cast<int>(variables_.size())) {
      throw ValidationError("factor references unknown variable " + std::to_string(key));
    }
    if (factor.blocks[k].cols() != variables_[static_cast<std::size_t>(key)].dim ||
        factor.blocks[k].rows() != factor.rows()) {
      throw ValidationError("factor block has the wrong shape");
    }
  }
  factors_.push_back(std::move(factor));
}

int GaussianFactorGraph::count(VariableKind kind) const {
  return static_cast<int>(std::count_if(variables_.begin(), variables_.end(),
                                        [kind](const Variable& v) { return v.kind == kind; }));
}

int GaussianFactorGraph::count(FactorKind kind) const {
  return static_cast<int>(std::count_if(factors_.begin(), factors_.end(),
                                        [kind](const LinearFactor& f) { return f.kind == kind; }));
}

int GaussianFactorGraph::dimension() const {
  int dim = 0;
  for (const auto& v : variables_) dim += v.dim;
  return dim;
}

std::vector<int> GaussianFactorGraph::offsets() const {
  std::vector<int> out;
  out.reserve(variables_.size());
  int acc = 0;
  for (const auto& v : variables_) {
    out.push_back(acc);
    acc += v.dim;
  }
  return out;
}

Eigen::MatrixXd GaussianFactorGraph::information_matrix() const {
  const auto off = offsets();
  const int n = dimension();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
  for (const auto& f : factors_) {
    for (std::size_t i = 0; i < f.keys.size(); ++i) {
      for (std::size_t j = 0; j < f.keys.size(); ++j) {
        const auto& vi = variables_[static_cast<std::size_t>(f.keys[i])];
        const auto& vj = variables_[static_cast<std::size_t>(f.keys[j])];
        info.block(off[static_cast<std::size_t>(f.keys[i])], off[static_cast<std::size_t>(f.keys[j])],
                   vi.dim, vj.dim) += f.blocks[i].transpose() * f.blocks[j];
      }
    }
  }
  return info;
}

Eigen::MatrixXd whitening(const Eigen::MatrixXd& covariance) {
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw ValidationError("noise covariance is not positive definite");
  // covariance = L L^T  =>  covariance^-1 = L^-T L^-1, so A = L^-1.
  const Eigen::Index n = covariance.rows();
  return llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
}

LinearFactor prior_factor(FactorKind kind, int key, const Eigen::MatrixXd& covariance) {
  return {kind, {key}, {whitening(covariance)}};
}

namespace {

/// Orthonormal 2x3 basis of the plane orthogonal to unit vector b.
Eigen::Matrix<double, 2, 3> tangent_basis(const Vec3& b) {
  const Vec3 helper = std::abs(b.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = b.cross(helper).normalized();
  const Vec3 e2 = b.cross(e1);
  Eigen::Matrix<double, 2, 3> basis;
  basis.row(0) = e1.transpose();
  basis.row(1) = e2.transpose();
  return basis;
}

int null_directions(const Eigen::MatrixXd& info) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (info + info.transpose()),
                                                           Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  int count = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= 1e-12 * scale) ++count;
  }
  return count;
}

[[noreturn]] void throw_rank_deficient(const GaussianFactorGraph& graph) {
  const int nulls = std::max(1, null_directions(graph.information_matrix()));
  throw RankDeficientError(nulls, "rank-deficient information matrix: " + std::to_string(nulls) +
                                      " null direction(s)");
}

Mat6 dense_camera_schur(const GaussianFactorGraph& graph) {
  const Eigen::MatrixXd info = graph.information_matrix();
  const Eigen::Index rest = info.rows() - 6;
  Mat6 schur = info.topLeftCorner<6, 6>();
  if (rest > 0) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info.bottomRightCorner(rest, rest));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      throw_rank_deficient(graph);
    }
    schur -= info.topRightCorner(6, rest) * ldlt.solve(info.bottomLeftCorner(rest, 6));
  }
  return schur;
}

}  // namespace

LinearFactor bearing_factor(int camera_key, int point_key, const Pose6D& camera, const Vec3& point,
                            double sigma) {
  const Mat3 rt = camera.rotation.transpose();
  const Vec3 q = rt * (point - camera.translation);
  const double range = q.norm();
  if (range < 1e-12) throw ValidationError("bearing to a point at the camera center");
  const Vec3 b = q / range;
  // d b / d q = (I - b b^T) / |q|, and the tangent basis annihilates b.
  const Eigen::Matrix<double, 2, 3> jq = tangent_basis(b) / (range * sigma);
  Eigen::Matrix<double, 3, 6> dq_dcam;
  dq_dcam.leftCols<3>() = skew(q);
  dq_dcam.rightCols<3>() = -rt;
  LinearFactor f;
  f.kind = FactorKind::Bearing;
  f.keys = {camera_key, point_key};
  f.blocks = {jq * dq_dcam, jq * rt};
  return f;
}

LinearFactor relative_pose_factor(int camera_key, int marker_key, const Pose6D& camera,
                                  const Pose6D& marker, const Mat6& covariance) {
  const Mat3 rct = camera.rotation.transpose();
  const Mat3 r_rel = rct * marker.rotation;
  const Vec3 t_rel = rct * (marker.translation - camera.translation);
  Mat6 j_cam = Mat6::Zero();
  j_cam.topLeftCorner<3, 3>() = -r_rel.transpose();
  j_cam.bottomLeftCorner<3, 3>() = skew(t_rel);
  j_cam.bottomRightCorner<3, 3>() = -rct;
  Mat6 j_marker = Mat6::Zero();
  j_marker.topLeftCorner<3, 3>() = Mat3::Identity();
  j_marker.bottomRightCorner<3, 3>() = rct;
  const Eigen::MatrixXd w = whitening(covariance);
  LinearFactor f;
  f.kind = FactorKind::MarkerRelativePose;
  f.keys = {camera_key, marker_key};
  f.blocks = {w * j_cam, w * j_marker};
  return f;
}

Mat6 camera_marginal(const GaussianFactorGraph& graph) {
  const auto& vars = graph.variables();
  if (vars.empty() || vars.front().kind != VariableKind::Camera || vars.front().dim != 6) {
    throw ValidationError("variable 0 must be the 6-dof camera pose");
  }

  const std::size_t n_var = vars.size();
  bool star_shaped = true;
  for (const auto& f : graph.factors()) {
    int others = 0;
    for (int key : f.keys) others += key != 0 ? 1 : 0;
    if (others > 1 || (others == 1 && f.keys.size() > 2)) {
      star_shaped = false;
      break;
    }
  }

  Mat6 schur = Mat6::Zero();
  if (star_shaped) {
    std::vector<Eigen::MatrixXd> cross(n_var);
    std::vector<Eigen::MatrixXd> diag(n_var);
    for (std::size_t v = 1; v < n_var; ++v) {
      cross[v] = Eigen::MatrixXd::Zero(6, vars[v].dim);
      diag[v] = Eigen::MatrixXd::Zero(vars[v].dim, vars[v].dim);
    }
    for (const auto& f : graph.factors()) {
      int cam_slot = -1;
      int other_slot = -1;
      for (std::size_t k = 0; k < f.keys.size(); ++k) {
        if (f.keys[k] == 0) {
          cam_slot = static_cast<int>(k);
        } else {
          other_slot = static_cast<int>(k);
        }
      }
      if (cam_slot >= 0) {
        const auto& a = f.blocks[static_cast<std::size_t>(cam_slot)];
        schur.noalias() += a.transpose() * a;
      }
      if (other_slot >= 0) {
        const auto v = static_cast<std::size_t>(f.keys[static_cast<std::size_t>(other_slot)]);
        const auto& b = f.blocks[static_cast<std::size_t>(other_slot)];
        diag[v].noalias() += b.transpose() * b;
        if (cam_slot >= 0) {
          cross[v].noalias() += f.blocks[static_cast<std::size_t>(cam_slot)].transpose() * b;
        }
      }
    }
    for (std::size_t v = 1; v < n_var; ++v) {
      const Eigen::LLT<Eigen::MatrixXd> llt(diag[v]);
      if (llt.info() != Eigen::Success) throw_rank_deficient(graph);
      schur.noalias() -= cross[v] * llt.solve(cross[v].transpose());
    }
  } else {
    schur = dense_camera_schur(graph);
  }

  schur = 0.5 * (schur + schur.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Mat6> eig(schur, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  int nulls = 0;
  for (int i = 0; i < 6; ++i) {
    if (eig.eigenvalues()[i] <= 1e-12 * scale) ++nulls;
  }
  if (nulls > 0) {
    throw RankDeficientError(nulls, "rank-deficient camera information: " + std::to_string(nulls) +
                                        " null direction(s)");
  }
  const Eigen::LLT<Mat6> llt(schur);
  Mat6 sigma = llt.solve(Mat6::Identity());
  return 0.5 * (sigma + sigma.transpose());
}

double entropy_constant() { return 3.0 * (1.0 + std::log(2.0 * kPi)); }

double entropy(const Mat6& sigma) {
  if (!sigma.allFinite()) throw ValidationError("covariance has non-finite entries");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw ValidationError("covariance is not symmetric");
  }
  const Eigen::LLT<Mat6> llt(sigma);
  if (llt.info() != Eigen::Success) throw ValidationError("covariance is not positive definite");
  const Mat6 l = llt.matrixL();
  double log_det = 0.0;
  for (int i = 0; i < 6; ++i) {
    if (!(l(i, i) > 0.0)) throw ValidationError("covariance is not positive definite");
    log_det += 2.0 * std::log(l(i, i));
  }
  return 0.5 * log_det + entropy_constant();
}

}  // namespace markerplan
