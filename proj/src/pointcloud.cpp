#include "partfuse/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "io_util.hpp"
#include "partfuse/error.hpp"
#include "partfuse/kdtree.hpp"
#include "partfuse/rng.hpp"

namespace partfuse {

// ---------------------------------------------------------------------------
// PLY

PointCloud parse_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto malformed = [](const std::string& why) { return ValidationError("malformed-ply", "PLY: " + why); };

  if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw malformed("missing 'ply' magic");

  bool ascii = false, in_vertex = false, seen_vertex = false, ended = false;
  std::size_t vertex_count = 0;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string word;
    words >> word;
    if (word == "format") {
      std::string kind;
      words >> kind;
      ascii = kind == "ascii";
    } else if (word == "comment" || word == "obj_info" || word.empty()) {
      continue;
    } else if (word == "element") {
      std::string name;
      long long count = -1;
      words >> name >> count;
      if (count < 0) throw malformed("bad element count");
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw malformed("duplicate vertex element");
        seen_vertex = true;
        vertex_count = static_cast<std::size_t>(count);
      } else if (!seen_vertex && count > 0) {
        throw malformed("elements before 'vertex' are not supported");
      }
    } else if (word == "property") {
      std::string type, name;
      words >> type;
      if (type == "list") throw malformed("list properties are not supported on vertices");
      words >> name;
      if (in_vertex) props.push_back(name);
    } else if (word == "end_header") {
      ended = true;
      break;
    } else {
      throw malformed("unexpected header line '" + line + "'");
    }
  }
  if (!ended) throw malformed("missing end_header");
  if (!ascii) throw malformed("only ASCII PLY is supported");
  if (!seen_vertex) throw malformed("no vertex element");

  auto column = [&](const char* name) {
    auto it = std::find(props.begin(), props.end(), name);
    if (it == props.end()) throw ValidationError("missing-property", std::string("PLY: missing property ") + name);
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::array<std::size_t, 6> cols{column("x"), column("y"), column("z"),
                                        column("red"), column("green"), column("blue")};

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> values(props.size());
  while (cloud.points.size() < vertex_count) {
    if (!std::getline(in, line)) {
      throw ValidationError("count-mismatch", "PLY: header declares " + std::to_string(vertex_count) +
                                                  " vertices, found " + std::to_string(cloud.points.size()));
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    for (auto& v : values) {
      if (!(row >> v)) throw malformed("short vertex row '" + line + "'");
    }
    Point3 p;
    p.x = values[cols[0]];
    p.y = values[cols[1]];
    p.z = values[cols[2]];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) throw malformed("non-finite coordinate");
    auto channel = [&](std::size_t c) {
      const double v = values[c];
      if (v < 0 || v > 255 || v != std::floor(v)) throw malformed("colour outside 0..255");
      return static_cast<std::uint8_t>(v);
    };
    p.r = channel(cols[3]);
    p.g = channel(cols[4]);
    p.b = channel(cols[5]);
    cloud.points.push_back(p);
  }
  // Trailing vertex rows are an error only when the vertex element is the last one.
  if (in_vertex) {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw ValidationError("count-mismatch", "PLY: more vertex rows than declared");
      }
    }
  }
  return cloud;
}

std::string format_ply(const PointCloud& cloud) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char buf[128];
  for (const auto& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %u %u %u\n", p.x, p.y, p.z, p.r, p.g, p.b);
    out += buf;
  }
  return out;
}

PointCloud read_ply(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return parse_ply(std::string(bytes.begin(), bytes.end()));
  } catch (const ValidationError& e) {
    throw ValidationError(e.code(), path.string() + ": " + e.what());
  }
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  detail::write_text(path, format_ply(cloud));
}

// ---------------------------------------------------------------------------
// Progressive morphological filter

void PmfParams::validate() const {
  if (!(cell_size > 0.0) || initial_window == 0 || max_window < initial_window || !(slope > 0.0) ||
      !(initial_height_threshold > 0.0) || max_height_threshold < initial_height_threshold) {
    throw ValidationError("pmf-params", "PMF parameters must be positive with initial <= max");
  }
}

namespace {

class HeightGrid {
 public:
  HeightGrid(std::size_t cols, std::size_t rows, double fill) : cols_(cols), rows_(rows), z_(cols * rows, fill) {}

  double& at(std::size_t c, std::size_t r) { return z_[r * cols_ + c]; }

  /// Separable running min (erode) or max (dilate) over a (2w+1)^2 window,
  /// clipped at the border.
  HeightGrid filtered(std::size_t w, bool take_min) const {
    auto pick = [take_min](double a, double b) { return take_min ? std::min(a, b) : std::max(a, b); };
    HeightGrid rows_pass(cols_, rows_, 0.0), out(cols_, rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) {
        const std::size_t c0 = c >= w ? c - w : 0, c1 = std::min(cols_ - 1, c + w);
        double v = z_[r * cols_ + c0];
        for (auto k = c0 + 1; k <= c1; ++k) v = pick(v, z_[r * cols_ + k]);
        rows_pass.z_[r * cols_ + c] = v;
      }
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      const std::size_t r0 = r >= w ? r - w : 0, r1 = std::min(rows_ - 1, r + w);
      for (std::size_t c = 0; c < cols_; ++c) {
        double v = rows_pass.z_[r0 * cols_ + c];
        for (auto k = r0 + 1; k <= r1; ++k) v = pick(v, rows_pass.z_[k * cols_ + c]);
        out.z_[r * cols_ + c] = v;
      }
    }
    return out;
  }

  /// Empty cells (+inf) never win an erosion; after it, any cell still
  /// infinite had no data nearby and must not win the dilation either.
  HeightGrid opened(std::size_t w) const {
    HeightGrid eroded = filtered(w, true);
    for (auto& v : eroded.z_) {
      if (std::isinf(v)) v = -std::numeric_limits<double>::infinity();
    }
    return eroded.filtered(w, false);
  }

 private:
  std::size_t cols_, rows_;
  std::vector<double> z_;
};

}  // namespace

std::vector<bool> progressive_morphological_filter(const PointCloud& cloud, const PmfParams& params) {
  params.validate();
  if (cloud.empty()) throw ValidationError("empty-cloud", "progressive morphological filter needs points");

  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const auto& p : cloud.points) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  const auto cols = static_cast<std::size_t>(std::floor((max_x - min_x) / params.cell_size)) + 1;
  const auto rows = static_cast<std::size_t>(std::floor((max_y - min_y) / params.cell_size)) + 1;
  if (cols > 1 << 15 || rows > 1 << 15) {
    throw ValidationError("pmf-grid", "cloud extent too large for the configured cell size");
  }

  std::vector<std::pair<std::size_t, std::size_t>> cell_of(cloud.size());
  HeightGrid surface(cols, rows, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const auto c = std::min(cols - 1, static_cast<std::size_t>((p.x - min_x) / params.cell_size));
    const auto r = std::min(rows - 1, static_cast<std::size_t>((p.y - min_y) / params.cell_size));
    cell_of[i] = {c, r};
    surface.at(c, r) = std::min(surface.at(c, r), p.z);
  }

  std::vector<bool> ground(cloud.size(), true);
  std::uint32_t previous_side = 0;
  for (std::uint32_t w = params.initial_window; w <= params.max_window; w *= 2) {
    const std::uint32_t side = 2 * w + 1;
    double threshold = params.initial_height_threshold;
    if (previous_side != 0) {
      threshold = params.slope * static_cast<double>(side - previous_side) * params.cell_size +
                  params.initial_height_threshold;
    }
    threshold = std::min(threshold, params.max_height_threshold);
    previous_side = side;

    surface = surface.opened(w);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!ground[i]) continue;
      const auto [c, r] = cell_of[i];
      if (cloud.points[i].z - surface.at(c, r) > threshold) ground[i] = false;
    }
    if (w > params.max_window / 2) break;  // next doubling would overshoot (and guards overflow)
  }
  return ground;
}

// ---------------------------------------------------------------------------
// RANSAC

namespace {

Plane canonical(Eigen::Vector3d n, double offset) {
  n.normalize();
  for (int axis : {2, 1, 0}) {
    if (n[axis] > 0) break;
    if (n[axis] < 0) {
      n = -n;
      offset = -offset;
      break;
    }
  }
  return Plane{{n[0], n[1], n[2]}, offset};
}

Eigen::Vector3d vec(const Point3& p) { return {p.x, p.y, p.z}; }

}  // namespace

PlaneFit ransac_plane(std::span<const Point3> points, const RansacParams& params) {
  if (points.size() < 3) throw ValidationError("too-few-points", "RANSAC plane fit needs at least 3 points");
  if (!(params.distance_threshold > 0.0)) throw ValidationError("ransac-params", "distance threshold must be > 0");

  SplitMix64 rng(params.seed);
  const auto n = points.size();
  std::size_t best_count = 0;
  Eigen::Vector3d best_normal;
  double best_offset = 0.0;
  for (std::uint32_t it = 0; it < params.iterations; ++it) {
    const auto i0 = rng.below(n);
    auto i1 = rng.below(n - 1);
    if (i1 >= i0) ++i1;
    auto i2 = rng.below(n - 2);
    if (i2 >= std::min(i0, i1)) ++i2;
    if (i2 >= std::max(i0, i1)) ++i2;

    const Eigen::Vector3d a = vec(points[i0]), b = vec(points[i1]), c = vec(points[i2]);
    Eigen::Vector3d normal = (b - a).cross(c - a);
    const double scale = (b - a).norm() * (c - a).norm();
    if (!(normal.norm() > 1e-12 * scale) || scale == 0.0) continue;
    normal.normalize();
    const double offset = normal.dot(a);
    std::size_t count = 0;
    for (const auto& p : points) {
      if (std::abs(normal.dot(vec(p)) - offset) <= params.distance_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_normal = normal;
      best_offset = offset;
    }
  }
  if (best_count == 0) throw ValidationError("degenerate", "RANSAC found no non-collinear sample");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  std::size_t m = 0;
  for (const auto& p : points) {
    if (std::abs(best_normal.dot(vec(p)) - best_offset) <= params.distance_threshold) {
      centroid += vec(p);
      ++m;
    }
  }
  centroid /= static_cast<double>(m);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    if (std::abs(best_normal.dot(vec(p)) - best_offset) <= params.distance_threshold) {
      const Eigen::Vector3d d = vec(p) - centroid;
      cov += d * d.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Eigen::Vector3d normal = eig.eigenvectors().col(0);  // smallest eigenvalue first
  if (!normal.allFinite() || normal.norm() < 0.5) normal = best_normal;
  normal.normalize();

  PlaneFit fit;
  fit.plane = canonical(normal, normal.dot(centroid));
  fit.inliers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.inliers[i] = std::abs(fit.plane.signed_distance(points[i])) <= params.distance_threshold;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Euclidean clustering

std::vector<std::uint32_t> euclidean_clusters(std::span<const Point3> points, double radius,
                                              std::size_t min_points) {
  std::vector<std::uint32_t> ids(points.size(), 0);
  if (points.empty()) return ids;
  std::vector<KdTree<3>::Point> coords(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) coords[i] = {points[i].x, points[i].y, points[i].z};
  const KdTree<3> tree(std::move(coords));

  std::vector<bool> visited(points.size(), false);
  std::uint32_t next_id = 1;
  std::vector<std::uint32_t> component;
  std::deque<std::uint32_t> frontier;
  for (std::uint32_t seed = 0; seed < points.size(); ++seed) {
    if (visited[seed]) continue;
    component.clear();
    visited[seed] = true;
    frontier.push_back(seed);
    while (!frontier.empty()) {
      const auto cur = frontier.front();
      frontier.pop_front();
      component.push_back(cur);
      for (auto nb : tree.radius_search(tree.point(cur), radius)) {
        if (!visited[nb]) {
          visited[nb] = true;
          frontier.push_back(nb);
        }
      }
    }
    if (component.size() >= min_points) {
      for (auto i : component) ids[i] = next_id;
      ++next_id;
    }
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Camera

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("camera", "focal lengths must be positive");
  if (width == 0 || height == 0) throw ValidationError("camera", "image size must be positive");
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = extrinsic[static_cast<std::size_t>(4 * i + j)];
  }
  const double ortho_err = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho_err <= 1e-6) || std::abs(r.determinant() - 1.0) > 1e-6) {
    throw ValidationError("camera", "extrinsic rotation block is not a proper rotation");
  }
  if (std::abs(extrinsic[12]) > 1e-6 || std::abs(extrinsic[13]) > 1e-6 || std::abs(extrinsic[14]) > 1e-6 ||
      std::abs(extrinsic[15] - 1.0) > 1e-6) {
    throw ValidationError("camera", "extrinsic bottom row must be 0 0 0 1");
  }
}

CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel cam;
  try {
    cam.width = j.at("width").get<std::uint32_t>();
    cam.height = j.at("height").get<std::uint32_t>();
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    const auto ext = j.at("extrinsic").get<std::vector<double>>();
    if (ext.size() != 16) throw ValidationError("camera", "extrinsic must have 16 entries");
    std::copy(ext.begin(), ext.end(), cam.extrinsic.begin());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("camera", std::string("camera JSON: ") + e.what());
  }
  cam.validate();
  return cam;
}

nlohmann::json camera_to_json(const CameraModel& camera) {
  return {{"width", camera.width}, {"height", camera.height}, {"fx", camera.fx},    {"fy", camera.fy},
          {"cx", camera.cx},       {"cy", camera.cy},         {"extrinsic", camera.extrinsic}};
}

CameraModel read_camera(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return camera_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("camera", path.string() + ": " + e.what());
  }
}

std::vector<Projection> project(std::span<const Point3> points, const CameraModel& camera) {
  const auto& e = camera.extrinsic;
  std::vector<Projection> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const double x = e[0] * p.x + e[1] * p.y + e[2] * p.z + e[3];
    const double y = e[4] * p.x + e[5] * p.y + e[6] * p.z + e[7];
    const double z = e[8] * p.x + e[9] * p.y + e[10] * p.z + e[11];
    auto& pr = out[i];
    pr.depth = z;
    if (z > 0.0) {
      pr.u = camera.fx * x / z + camera.cx;
      pr.v = camera.fy * y / z + camera.cy;
      pr.in_frame = pr.u >= 0.0 && pr.u < camera.width && pr.v >= 0.0 && pr.v < camera.height;
    }
  }
  return out;
}

std::array<double, 3> back_project(double u, double v, double depth, const CameraModel& camera) {
  const auto& e = camera.extrinsic;
  const double xc = (u - camera.cx) / camera.fx * depth - e[3];
  const double yc = (v - camera.cy) / camera.fy * depth - e[7];
  const double zc = depth - e[11];
  // Inverse of a rotation is its transpose.
  return {e[0] * xc + e[4] * yc + e[8] * zc, e[1] * xc + e[5] * yc + e[9] * zc, e[2] * xc + e[6] * yc + e[10] * zc};
}

}  // namespace partfuse
