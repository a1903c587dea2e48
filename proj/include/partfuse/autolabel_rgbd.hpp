#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "partfuse/imaging.hpp"
#include "partfuse/labels.hpp"
#include "partfuse/pointcloud.hpp"
#include "partfuse/taxonomy.hpp"

namespace partfuse {

/// Colour rule assigning a part to object points (or pixels) whose HSV
/// falls in `range`. Higher priority is tested first.
struct PartColorRule {
  PartId part_id = 0;
  HsvRange range;
  int priority = 0;
};

/// Rules sorted by descending priority; equal priorities keep input order.
std::vector<PartColorRule> ordered_rules(std::vector<PartColorRule> rules);

/// Part for a colour: first matching rule, else `catch_all` (may be 0).
PartId classify_color(std::uint8_t r, std::uint8_t g, std::uint8_t b, const std::vector<PartColorRule>& ordered,
                      PartId catch_all) noexcept;

/// Throws ValidationError("unknown-part") when a rule or the catch-all
/// names a part missing from the taxonomy.
void check_rules(const std::vector<PartColorRule>& rules, PartId catch_all, const ClassTaxonomy& taxonomy);

struct LabeledPointCloud {
  PointCloud cloud;
  std::vector<bool> object_flag;
  std::vector<InstanceId> instance_id;  // 0 = background
  std::vector<PartId> part_id;          // 0 = none

  std::size_t size() const noexcept { return cloud.size(); }
  std::size_t instance_count() const noexcept;
  /// Throws ValidationError("labeled-cloud") on broken per-point invariants.
  void check() const;
};

struct RgbdLabelConfig {
  PmfParams pmf;
  RansacParams ransac;
  double cluster_radius = 0.01;
  std::size_t cluster_min_points = 30;
  ClassId object_class_id = 0;      // one object class per capture
  ClassId background_class_id = 0;  // plane/background points; usually `table`
  std::vector<PartColorRule> part_rules;
  PartId catch_all_part_id = 0;
  std::size_t knn_k = 5;
  double max_pixel_radius = 3.0;

  void validate(const ClassTaxonomy& taxonomy) const;
};

/// Reads config JSON; missing fields keep defaults. Class ids may be given
/// as numbers or as class names ("object_class": "transfusion_bag").
RgbdLabelConfig rgbd_config_from_json(const nlohmann::json& j, const ClassTaxonomy& taxonomy);
nlohmann::json rgbd_config_to_json(const RgbdLabelConfig& config);

/// Ground filter, then a plane fit on its candidates decides the background
/// (|distance| <= ransac.distance_threshold), then Euclidean clustering of
/// the rest. Clusters with at least cluster_min_points points
/// become instances 1..N.
LabeledPointCloud segment_objects(const PointCloud& cloud, const RgbdLabelConfig& config);

/// Colour-threshold parts for object points.
LabeledPointCloud label_parts(LabeledPointCloud labeled, const std::vector<PartColorRule>& rules,
                              PartId catch_all_part_id = 0, const ClassTaxonomy* taxonomy = nullptr);

struct ProjectionStats {
  std::size_t in_frame_points = 0;
  std::size_t labelled_pixels = 0;
};

/// Pixel labels by k-NN voting over projected points (2-D kd-tree on
/// (u, v)). Pixels whose nearest projected point is farther than
/// max_pixel_radius stay void. The instance is voted first and the
/// semantic class follows from it; parts are voted independently and
/// cleared on background pixels. Vote ties go to the label of the nearest
/// tied voter.
LabelTriple project_labels(const LabeledPointCloud& labeled, const CameraModel& camera, const RgbdLabelConfig& config,
                           ProjectionStats* stats = nullptr);

struct RgbdSample {
  Image image;
  LabelTriple labels;
  LabeledPointCloud cloud;
  ProjectionStats stats;
};

RgbdSample generate_rgbd_sample(const Image& rgb, const PointCloud& cloud, const CameraModel& camera,
                                const ClassTaxonomy& taxonomy, const RgbdLabelConfig& config);

}  // namespace partfuse
