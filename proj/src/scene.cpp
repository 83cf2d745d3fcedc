#include "markerplan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "markerplan/errors.hpp"
#include "markerplan/io.hpp"

namespace markerplan {

namespace {

using nlohmann::json;

const json& require(const json& doc, const char* key, const std::string& context = {}) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ParseError("missing field: " + context + key);
  }
  return doc.at(key);
}

template <typename T>
T read_as(const json& doc, const char* key, const std::string& context = {}) {
  const json& value = require(doc, key, context);
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ParseError("invalid field: " + context + key);
  }
}

Vec2 read_vec2(const json& value, const std::string& field) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
    throw ParseError("invalid field: " + field);
  }
  return {value[0].get<double>(), value[1].get<double>()};
}

Eigen::VectorXd read_vector(const json& value, const std::string& field) {
  if (!value.is_array()) throw ParseError("invalid field: " + field);
  Eigen::VectorXd v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) throw ParseError("invalid field: " + field);
    v[static_cast<Eigen::Index>(i)] = value[i].get<double>();
  }
  return v;
}

json write_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

std::vector<double> polyline_offsets(const std::vector<Polyline>& walls) {
  std::vector<double> offsets(walls.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < walls.size(); ++i) {
    offsets[i] = acc;
    acc += polyline_length(walls[i]);
  }
  return offsets;
}

}  // namespace

void validate(const SceneDescription& scene) {
  if (scene.walls.empty()) throw ValidationError("walls: at least one closed polyline required");
  for (std::size_t i = 0; i < scene.walls.size(); ++i) {
    const auto& poly = scene.walls[i];
    if (poly.size() < 3) {
      throw ValidationError("walls[" + std::to_string(i) + "]: a closed polyline needs >= 3 vertices");
    }
    for (const auto& v : poly) {
      if (!v.allFinite()) throw ValidationError("walls[" + std::to_string(i) + "]: non-finite vertex");
    }
    if (polyline_length(poly) <= 0.0) {
      throw ValidationError("walls[" + std::to_string(i) + "]: zero length");
    }
  }
  const auto& cam = scene.camera;
  if (!(cam.fov > 0.0 && cam.fov <= kPi)) throw ValidationError("camera.fov must lie in (0, pi]");
  if (!(cam.range > 0.0)) throw ValidationError("camera.range must be positive");
  const auto& disc = scene.discretization;
  if (!(disc.grid_resolution > 0.0)) {
    throw ValidationError("discretization.grid_resolution must be positive");
  }
  if (!(disc.marker_spacing > 0.0)) {
    throw ValidationError("discretization.marker_spacing must be positive");
  }
  if (disc.orientations < 1) throw ValidationError("discretization.orientations must be >= 1");

  Eigen::Index dim = -1;
  for (std::size_t i = 0; i < scene.feature_points.size(); ++i) {
    const auto& fp = scene.feature_points[i];
    const std::string where = "feature_points[" + std::to_string(i) + "]";
    if (dim < 0) dim = fp.descriptor.size();
    if (fp.descriptor.size() == 0 || fp.descriptor.size() != dim) {
      throw ValidationError(where + ".descriptor: inconsistent dimension");
    }
    if (std::abs(fp.descriptor.norm() - 1.0) > 1e-9) {
      throw ValidationError(where + ".descriptor: not unit length");
    }
    if (!fp.position.allFinite()) throw ValidationError(where + ".position: non-finite");
    if (fp.similar_count < 0) throw ValidationError(where + ".similar_count: negative");
  }
  if (scene.feature_generation) {
    const auto& gen = *scene.feature_generation;
    if (!(gen.density > 0.0)) throw ValidationError("feature_generation.density must be positive");
    if (gen.descriptor_dim < 1) throw ValidationError("feature_generation.descriptor_dim must be >= 1");
    for (const auto& group : gen.aliasing_groups) {
      for (int idx : group) {
        if (idx < 0 || idx >= static_cast<int>(scene.walls.size())) {
          throw ValidationError("feature_generation.aliasing_groups: polyline index out of range");
        }
      }
    }
  }
}

bool in_free_space(const std::vector<Polyline>& walls, const Vec2& point) {
  bool inside = false;
  for (const auto& poly : walls) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[j];
      if ((a.y() > point.y()) != (b.y() > point.y())) {
        const double x_cross = (b.x() - a.x()) * (point.y() - a.y()) / (b.y() - a.y()) + a.x();
        if (point.x() < x_cross) inside = !inside;
      }
    }
  }
  return inside;
}

double distance_to_walls(const std::vector<Polyline>& walls, const Vec2& point) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& poly : walls) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      best = std::min(best, point_segment_distance(point, poly[i], poly[(i + 1) % poly.size()]));
    }
  }
  return best;
}

bool OccupancyGrid::is_occupied(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= width || iy >= height) return true;
  return occupied[static_cast<std::size_t>(iy) * width + ix] != 0;
}

Vec2 OccupancyGrid::cell_center(int ix, int iy) const {
  return origin + Vec2((ix + 0.5) * resolution, (iy + 0.5) * resolution);
}

int OccupancyGrid::free_count() const {
  return static_cast<int>(std::count(occupied.begin(), occupied.end(), std::uint8_t{0}));
}

bool GroundPlaneSpace::is_placed(int marker_idx) const {
  return std::find(placed_markers.begin(), placed_markers.end(), marker_idx) != placed_markers.end();
}

void GroundPlaneSpace::place(int marker_idx) {
  if (marker_idx < 0 || marker_idx >= static_cast<int>(marker_candidates.size())) {
    throw ValidationError("marker index out of range: " + std::to_string(marker_idx));
  }
  if (is_placed(marker_idx)) {
    throw ValidationError("marker already placed: " + std::to_string(marker_idx));
  }
  placed_markers.push_back(marker_idx);
}

double polyline_length(const Polyline& polyline) {
  double len = 0.0;
  for (std::size_t i = 0; i < polyline.size(); ++i) {
    len += (polyline[(i + 1) % polyline.size()] - polyline[i]).norm();
  }
  return len;
}

Vec2 inward_normal(const std::vector<Polyline>& walls, int polyline, int segment) {
  const auto& poly = walls.at(static_cast<std::size_t>(polyline));
  const Vec2& a = poly.at(static_cast<std::size_t>(segment));
  const Vec2& b = poly[(static_cast<std::size_t>(segment) + 1) % poly.size()];
  const Vec2 dir = (b - a).normalized();
  const Vec2 left(-dir.y(), dir.x());
  const Vec2 mid = 0.5 * (a + b);
  const double probe = std::min(1e-4, 1e-3 * (b - a).norm());
  return in_free_space(walls, mid + probe * left) ? left : Vec2(-left);
}

PerimeterSample sample_perimeter(const std::vector<Polyline>& walls, int polyline, double arc_length) {
  const auto& poly = walls.at(static_cast<std::size_t>(polyline));
  const double total = polyline_length(poly);
  double s = std::fmod(arc_length, total);
  if (s < 0.0) s += total;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double len = (b - a).norm();
    if (s < len || i + 1 == n) {
      const double t = len > 0.0 ? std::min(s / len, 1.0) : 0.0;
      const int seg = static_cast<int>(i);
      return {a + t * (b - a), seg, inward_normal(walls, polyline, seg)};
    }
    s -= len;
  }
  return {poly.front(), 0, inward_normal(walls, polyline, 0)};
}

MarkerCandidate shift_along_perimeter(const std::vector<Polyline>& walls,
                                      const MarkerCandidate& marker, double delta) {
  const double total = polyline_length(walls.at(static_cast<std::size_t>(marker.polyline)));
  double s = std::fmod(marker.arc_length + delta, total);
  if (s < 0.0) s += total;
  const auto sample = sample_perimeter(walls, marker.polyline, s);
  MarkerCandidate out = marker;
  out.pose = marker_pose(Vec3(sample.position.x(), sample.position.y(), marker.pose.translation.z()),
                         sample.inward_normal);
  out.segment = sample.segment;
  out.arc_length = s;
  out.perimeter_position = polyline_offsets(walls)[static_cast<std::size_t>(marker.polyline)] + s;
  return out;
}

GroundPlaneSpace discretize(const SceneDescription& scene) {
  validate(scene);
  const auto& disc = scene.discretization;
  const double res = disc.grid_resolution;

  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& poly : scene.walls) {
    for (const auto& v : poly) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }

  GroundPlaneSpace space;
  space.orientations = disc.orientations;
  auto& grid = space.occupancy;
  grid.resolution = res;
  // One padding cell on each side so the area outside the outer walls is represented.
  grid.origin = lo - Vec2::Constant(res);
  const Vec2 extent = hi - lo;
  grid.width = static_cast<int>(std::ceil(extent.x() / res - 1e-9)) + 2;
  grid.height = static_cast<int>(std::ceil(extent.y() / res - 1e-9)) + 2;
  grid.occupied.assign(static_cast<std::size_t>(grid.width) * grid.height, 1);

  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      const Vec2 c = grid.cell_center(ix, iy);
      if (in_free_space(scene.walls, c) && distance_to_walls(scene.walls, c) > 1e-9) {
        grid.occupied[static_cast<std::size_t>(iy) * grid.width + ix] = 0;
        space.camera_locations.push_back(c);
      }
    }
  }
  if (space.camera_locations.empty()) throw DegenerateSceneError("degenerate scene: no free cells");

  const int n = disc.orientations;
  space.camera_poses.reserve(space.camera_locations.size() * static_cast<std::size_t>(n));
  for (const auto& loc : space.camera_locations) {
    for (int k = 0; k < n; ++k) {
      space.camera_poses.push_back(camera_pose(loc, 2.0 * kPi * k / n));
    }
  }

  const auto offsets = polyline_offsets(scene.walls);
  for (std::size_t p = 0; p < scene.walls.size(); ++p) {
    const double total = polyline_length(scene.walls[p]);
    for (int j = 0;; ++j) {
      const double s = j * disc.marker_spacing;
      if (s >= total - 1e-9) break;
      const auto sample = sample_perimeter(scene.walls, static_cast<int>(p), s);
      MarkerCandidate cand;
      cand.pose = marker_pose(Vec3(sample.position.x(), sample.position.y(), 0.0), sample.inward_normal);
      cand.polyline = static_cast<int>(p);
      cand.segment = sample.segment;
      cand.arc_length = s;
      cand.perimeter_position = offsets[p] + s;
      space.marker_candidates.push_back(cand);
    }
    space.perimeter_length += total;
  }
  if (space.marker_candidates.empty()) {
    throw DegenerateSceneError("degenerate scene: no perimeter points");
  }
  return space;
}

json scene_to_json(const SceneDescription& scene) {
  json doc;
  doc["name"] = scene.name;
  json walls = json::array();
  for (const auto& poly : scene.walls) {
    json jp = json::array();
    for (const auto& v : poly) jp.push_back({v.x(), v.y()});
    walls.push_back(std::move(jp));
  }
  doc["walls"] = std::move(walls);
  doc["camera"] = {{"fov", scene.camera.fov}, {"range", scene.camera.range}};
  doc["discretization"] = {{"grid_resolution", scene.discretization.grid_resolution},
                           {"marker_spacing", scene.discretization.marker_spacing},
                           {"orientations", scene.discretization.orientations}};
  json points = json::array();
  for (const auto& fp : scene.feature_points) {
    points.push_back({{"position", write_vector(fp.position)},
                      {"descriptor", write_vector(fp.descriptor)},
                      {"similar_count", fp.similar_count}});
  }
  doc["feature_points"] = std::move(points);
  if (scene.feature_generation) {
    const auto& gen = *scene.feature_generation;
    json textureless = json::array();
    for (const auto& [poly, seg] : gen.textureless_segments) textureless.push_back({poly, seg});
    doc["feature_generation"] = {{"seed", gen.seed},
                                 {"density", gen.density},
                                 {"descriptor_dim", gen.descriptor_dim},
                                 {"height_band", gen.height_band},
                                 {"aliasing_groups", gen.aliasing_groups},
                                 {"textureless_segments", std::move(textureless)}};
  }
  return doc;
}

SceneDescription scene_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("invalid field: <root> must be an object");
  SceneDescription scene;
  if (doc.contains("name")) scene.name = read_as<std::string>(doc, "name");

  const json& walls = require(doc, "walls");
  if (!walls.is_array()) throw ParseError("invalid field: walls");
  for (std::size_t i = 0; i < walls.size(); ++i) {
    const std::string field = "walls[" + std::to_string(i) + "]";
    if (!walls[i].is_array()) throw ParseError("invalid field: " + field);
    Polyline poly;
    for (const auto& v : walls[i]) poly.push_back(read_vec2(v, field));
    scene.walls.push_back(std::move(poly));
  }

  const json& cam = require(doc, "camera");
  scene.camera.fov = read_as<double>(cam, "fov", "camera.");
  scene.camera.range = read_as<double>(cam, "range", "camera.");

  const json& disc = require(doc, "discretization");
  scene.discretization.grid_resolution = read_as<double>(disc, "grid_resolution", "discretization.");
  scene.discretization.marker_spacing = read_as<double>(disc, "marker_spacing", "discretization.");
  scene.discretization.orientations = read_as<int>(disc, "orientations", "discretization.");

  if (doc.contains("feature_points")) {
    const json& points = doc.at("feature_points");
    if (!points.is_array()) throw ParseError("invalid field: feature_points");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::string ctx = "feature_points[" + std::to_string(i) + "].";
      FeaturePoint fp;
      const Eigen::VectorXd pos = read_vector(require(points[i], "position", ctx), ctx + "position");
      if (pos.size() != 3) throw ParseError("invalid field: " + ctx + "position");
      fp.position = pos;
      fp.descriptor = read_vector(require(points[i], "descriptor", ctx), ctx + "descriptor");
      if (points[i].contains("similar_count")) {
        fp.similar_count = read_as<int>(points[i], "similar_count", ctx);
      }
      scene.feature_points.push_back(std::move(fp));
    }
  }

  if (doc.contains("feature_generation")) {
    const json& gen = doc.at("feature_generation");
    const std::string ctx = "feature_generation.";
    FeatureGenerationConfig cfg;
    cfg.seed = read_as<std::uint64_t>(gen, "seed", ctx);
    cfg.density = read_as<double>(gen, "density", ctx);
    if (gen.contains("descriptor_dim")) cfg.descriptor_dim = read_as<int>(gen, "descriptor_dim", ctx);
    if (gen.contains("height_band")) cfg.height_band = read_as<double>(gen, "height_band", ctx);
    if (gen.contains("aliasing_groups")) {
      cfg.aliasing_groups = read_as<std::vector<std::vector<int>>>(gen, "aliasing_groups", ctx);
    }
    if (gen.contains("textureless_segments")) {
      for (const auto& pair : read_as<std::vector<std::vector<int>>>(gen, "textureless_segments", ctx)) {
        if (pair.size() != 2) throw ParseError("invalid field: " + ctx + "textureless_segments");
        cfg.textureless_segments.emplace_back(pair[0], pair[1]);
      }
    }
    scene.feature_generation = cfg;
  }

  validate(scene);
  return scene;
}

SceneDescription load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return scene_from_json(doc);
}

void save_scene(const SceneDescription& scene, const std::filesystem::path& path) {
  write_file_atomic(path, scene_to_json(scene).dump(2) + "\n");
}

json pose_to_json(const Pose6D& pose) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  }
  return {{"rotation", std::move(rot)}, {"translation", write_vector(pose.translation)}};
}

Pose6D pose_from_json(const json& doc) {
  const Eigen::VectorXd rot = read_vector(require(doc, "rotation"), "rotation");
  const Eigen::VectorXd trans = read_vector(require(doc, "translation"), "translation");
  if (rot.size() != 9) throw ParseError("invalid field: rotation");
  if (trans.size() != 3) throw ParseError("invalid field: translation");
  Pose6D pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot[r * 3 + c];
  }
  pose.translation = trans;
  return pose;
}

json space_to_json(const GroundPlaneSpace& space) {
  json doc;
  doc["orientations"] = space.orientations;
  json locations = json::array();
  for (const auto& loc : space.camera_locations) locations.push_back({loc.x(), loc.y()});
  doc["camera_locations"] = std::move(locations);
  json cams = json::array();
  for (const auto& pose : space.camera_poses) cams.push_back(pose_to_json(pose));
  doc["camera_poses"] = std::move(cams);
  json markers = json::array();
  for (const auto& m : space.marker_candidates) {
    json jm = pose_to_json(m.pose);
    jm["polyline"] = m.polyline;
    jm["segment"] = m.segment;
    jm["arc_length"] = m.arc_length;
    markers.push_back(std::move(jm));
  }
  doc["marker_candidates"] = std::move(markers);
  const auto& grid = space.occupancy;
  json rows = json::array();
  for (int iy = 0; iy < grid.height; ++iy) {
    std::string row;
    for (int ix = 0; ix < grid.width; ++ix) row.push_back(grid.is_occupied(ix, iy) ? '#' : '.');
    rows.push_back(std::move(row));
  }
  doc["occupancy"] = {{"origin", {grid.origin.x(), grid.origin.y()}},
                      {"resolution", grid.resolution},
                      {"width", grid.width},
                      {"height", grid.height},
                      {"rows", std::move(rows)}};
  doc["placed_markers"] = space.placed_markers;
  return doc;
}

void save_space(const GroundPlaneSpace& space, const std::filesystem::path& path) {
  write_file_atomic(path, space_to_json(space).dump(2) + "\n");
}

std::uint64_t scene_content_hash(const SceneDescription& scene) {
  return fnv1a64(scene_to_json(scene).dump());
}

}  // namespace markerplan
