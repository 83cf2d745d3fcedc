#include "markerplan/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "markerplan/errors.hpp"
#include "markerplan/parallel.hpp"
#include "markerplan/rng.hpp"

namespace markerplan {

void validate(const SimilarityConfig& cfg) {
  if (!(cfg.tau_desc > 0.0)) throw ValidationError("tau_desc must be positive");
  if (!(cfg.tau_geo > 0.0)) throw ValidationError("tau_geo must be positive");
  const Mat3& s = cfg.base_covariance;
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ValidationError("base covariance must be symmetric");
  }
  if (Eigen::SelfAdjointEigenSolver<Mat3>(s).eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("base covariance must be positive definite");
  }
}

double descriptor_distance(const FeaturePoint& a, const FeaturePoint& b) {
  return (a.descriptor - b.descriptor).norm();
}

int count_similar(const FeaturePoint& query, const std::vector<FeaturePoint>& all,
                  const SimilarityConfig& cfg) {
  int count = 0;
  for (const auto& other : all) {
    if (other.descriptor.size() != query.descriptor.size()) continue;
    if ((other.position - query.position).norm() < cfg.tau_geo) continue;
    if (descriptor_distance(other, query) <= cfg.tau_desc) ++count;
  }
  return count;
}

Mat3 point_covariance(int similar_count, const SimilarityConfig& cfg) {
  if (similar_count < 0) throw ValidationError("similar count must be non-negative");
  return (1.0 + similar_count) * cfg.base_covariance;
}

void assign_similar_counts(std::vector<FeaturePoint>& points, const SimilarityConfig& cfg,
                           const std::vector<bool>* observed, int jobs) {
  validate(cfg);
  std::vector<FeaturePoint> pool;
  if (observed) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if ((*observed)[i]) pool.push_back(points[i]);
    }
  }
  const auto& candidates = observed ? pool : points;
  std::vector<int> counts(points.size(), 0);
  parallel_for(points.size(), jobs,
               [&](std::size_t i) { counts[i] = count_similar(points[i], candidates, cfg); });
  for (std::size_t i = 0; i < points.size(); ++i) points[i].similar_count = counts[i];
}

namespace {

struct WallSample {
  double arc_length;
  double height;
  Eigen::VectorXd descriptor;
};

bool is_textureless(const FeatureGenerationConfig& cfg, int polyline, int segment) {
  return std::find(cfg.textureless_segments.begin(), cfg.textureless_segments.end(),
                   std::pair{polyline, segment}) != cfg.textureless_segments.end();
}

}  // namespace

std::vector<FeaturePoint> generate_features(const SceneDescription& scene,
                                            const FeatureGenerationConfig& cfg) {
  if (!(cfg.density > 0.0)) throw ValidationError("feature density must be positive");
  if (cfg.descriptor_dim < 1) throw ValidationError("descriptor dimension must be >= 1");

  const std::size_t n_poly = scene.walls.size();
  std::vector<int> source(n_poly);
  for (std::size_t p = 0; p < n_poly; ++p) source[p] = static_cast<int>(p);
  for (const auto& group : cfg.aliasing_groups) {
    for (std::size_t i = 1; i < group.size(); ++i) {
      source.at(static_cast<std::size_t>(group[i])) = group.front();
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::vector<WallSample>> samples(n_poly);
  for (std::size_t p = 0; p < n_poly; ++p) {
    if (source[p] != static_cast<int>(p)) continue;
    const double total = polyline_length(scene.walls[p]);
    const int count = static_cast<int>(std::floor(total * cfg.density + 1e-9));
    for (int j = 0; j < count; ++j) {
      const double s = (j + 0.5) / cfg.density;
      const auto where = sample_perimeter(scene.walls, static_cast<int>(p), s);
      // Draw for every slot so textureless edits do not shift other walls' streams.
      const double height = uniform(rng, -cfg.height_band, cfg.height_band);
      Eigen::VectorXd desc(cfg.descriptor_dim);
      for (int d = 0; d < cfg.descriptor_dim; ++d) desc[d] = standard_normal(rng);
      desc.normalize();
      if (is_textureless(cfg, static_cast<int>(p), where.segment)) continue;
      samples[p].push_back({s, height, std::move(desc)});
    }
  }

  std::vector<FeaturePoint> points;
  for (std::size_t p = 0; p < n_poly; ++p) {
    const auto& src = samples[static_cast<std::size_t>(source[p])];
    for (const auto& sample : src) {
      const auto where = sample_perimeter(scene.walls, static_cast<int>(p), sample.arc_length);
      FeaturePoint fp;
      fp.position = Vec3(where.position.x(), where.position.y(), sample.height);
      fp.descriptor = sample.descriptor;
      points.push_back(std::move(fp));
    }
  }
  return points;
}

}  // namespace markerplan
