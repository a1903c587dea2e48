#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace partfuse {

struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;
  std::uint8_t r = 0, g = 0, b = 0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

struct PointCloud {
  std::vector<Point3> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

/// ASCII PLY with one vertex element carrying x, y, z, red, green, blue
/// (other vertex properties are skipped on read). Coordinates are written
/// with 9 significant digits.
PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud parse_ply(const std::string& text);
std::string format_ply(const PointCloud& cloud);

/// Plane {p : normal . p = offset}, |normal| = 1. Orientation is canonical:
/// the first non-zero normal component, scanning z, y, x, is positive.
struct Plane {
  std::array<double, 3> normal{0.0, 0.0, 1.0};
  double offset = 0.0;

  double signed_distance(const Point3& p) const noexcept {
    return normal[0] * p.x + normal[1] * p.y + normal[2] * p.z - offset;
  }
};

struct PmfParams {
  double cell_size = 0.01;
  std::uint32_t initial_window = 1;
  std::uint32_t max_window = 16;
  double slope = 0.3;
  double initial_height_threshold = 0.005;
  double max_height_threshold = 0.05;

  void validate() const;
};

/// Progressive morphological ground filter on a min-z raster. Windows are
/// half-widths in cells (square element of side 2w+1), doubling from
/// initial_window up to max_window. Returns true for ground points.
std::vector<bool> progressive_morphological_filter(const PointCloud& cloud, const PmfParams& params);

struct RansacParams {
  std::uint32_t iterations = 500;
  double distance_threshold = 0.004;
  std::uint64_t seed = 0;
};

struct PlaneFit {
  Plane plane;
  std::vector<bool> inliers;  // |distance| <= threshold to the refit plane
};

/// Best-of-n three-point plane hypotheses (SplitMix64 sampling, first best
/// wins ties), then a least-squares refit on the inliers.
/// Throws ValidationError too-few-points / degenerate.
PlaneFit ransac_plane(std::span<const Point3> points, const RansacParams& params);

/// Radius-graph connected components. Clusters of at least `min_points`
/// are numbered 1..N by their lowest point index; the rest get 0.
std::vector<std::uint32_t> euclidean_clusters(std::span<const Point3> points, double radius,
                                              std::size_t min_points);

/// Pinhole camera with a rigid world-to-camera transform (row-major 4x4).
struct CameraModel {
  std::uint32_t width = 0, height = 0;
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  std::array<double, 16> extrinsic{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  /// Throws ValidationError("camera") unless fx, fy > 0 and the rotation
  /// block is orthonormal with determinant +1 (tolerance 1e-6).
  void validate() const;
};

CameraModel camera_from_json(const nlohmann::json& j);
nlohmann::json camera_to_json(const CameraModel& camera);
CameraModel read_camera(const std::filesystem::path& path);

struct Projection {
  double u = 0.0, v = 0.0, depth = 0.0;
  bool in_frame = false;
};

std::vector<Projection> project(std::span<const Point3> points, const CameraModel& camera);

/// World coordinates of pixel (u, v) at camera depth `depth`.
std::array<double, 3> back_project(double u, double v, double depth, const CameraModel& camera);

}  // namespace partfuse
