#include "partfuse/autolabel_rgbd.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "partfuse/error.hpp"
#include "partfuse/kdtree.hpp"
#include "json_config.hpp"

namespace partfuse {

std::vector<PartColorRule> ordered_rules(std::vector<PartColorRule> rules) {
  std::stable_sort(rules.begin(), rules.end(),
                   [](const PartColorRule& a, const PartColorRule& b) { return a.priority > b.priority; });
  return rules;
}

PartId classify_color(std::uint8_t r, std::uint8_t g, std::uint8_t b, const std::vector<PartColorRule>& ordered,
                      PartId catch_all) noexcept {
  const auto hsv = rgb_to_hsv(r, g, b);
  for (const auto& rule : ordered) {
    if (rule.range.contains(hsv.h, hsv.s, hsv.v)) return rule.part_id;
  }
  return catch_all;
}

void check_rules(const std::vector<PartColorRule>& rules, PartId catch_all, const ClassTaxonomy& taxonomy) {
  for (const auto& rule : rules) {
    if (taxonomy.find_part(rule.part_id) == nullptr) {
      throw ValidationError("unknown-part", "colour rule references unknown part id " + std::to_string(rule.part_id));
    }
    rule.range.validate();
  }
  if (catch_all != 0 && taxonomy.find_part(catch_all) == nullptr) {
    throw ValidationError("unknown-part", "catch-all part id " + std::to_string(catch_all) + " is unknown");
  }
}

std::size_t LabeledPointCloud::instance_count() const noexcept {
  std::set<InstanceId> ids(instance_id.begin(), instance_id.end());
  ids.erase(0);
  return ids.size();
}

void LabeledPointCloud::check() const {
  const auto n = cloud.size();
  if (object_flag.size() != n || instance_id.size() != n || part_id.size() != n) {
    throw ValidationError("labeled-cloud", "per-point label arrays differ in length from the cloud");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((instance_id[i] != 0) != object_flag[i]) {
      throw ValidationError("labeled-cloud", "instance id must be set exactly on object points");
    }
    if (part_id[i] != 0 && !object_flag[i]) throw ValidationError("labeled-cloud", "part on a background point");
  }
}

void RgbdLabelConfig::validate(const ClassTaxonomy& taxonomy) const {
  pmf.validate();
  if (knn_k < 1) throw ValidationError("rgbd-config", "knn_k must be >= 1");
  if (!(max_pixel_radius >= 0.0)) throw ValidationError("rgbd-config", "max_pixel_radius must be >= 0");
  if (!(cluster_radius > 0.0)) throw ValidationError("rgbd-config", "cluster radius must be > 0");
  if (!(ransac.distance_threshold > 0.0)) throw ValidationError("rgbd-config", "RANSAC threshold must be > 0");
  if (!taxonomy.is_thing(object_class_id)) {
    throw ValidationError("rgbd-config", "object class " + std::to_string(object_class_id) + " is not a thing class");
  }
  if (background_class_id != 0 && taxonomy.find_semantic(background_class_id) == nullptr) {
    throw ValidationError("rgbd-config", "unknown background class " + std::to_string(background_class_id));
  }
  if (background_class_id != 0 && taxonomy.is_thing(background_class_id)) {
    throw ValidationError("rgbd-config", "background class must be a stuff class");
  }
  check_rules(part_rules, catch_all_part_id, taxonomy);
}

RgbdLabelConfig rgbd_config_from_json(const nlohmann::json& j, const ClassTaxonomy& taxonomy) {
  RgbdLabelConfig c;
  if (auto id = taxonomy.semantic_id_by_name("table")) c.background_class_id = *id;
  try {
    if (j.contains("pmf")) c.pmf = detail::pmf_from_json(j.at("pmf"), c.pmf);
    if (j.contains("ransac")) {
      const auto& r = j.at("ransac");
      c.ransac.iterations = r.value("iterations", c.ransac.iterations);
      c.ransac.distance_threshold = r.value("distance_threshold", c.ransac.distance_threshold);
      c.ransac.seed = r.value("seed", c.ransac.seed);
    }
    if (j.contains("cluster")) {
      const auto& r = j.at("cluster");
      c.cluster_radius = r.value("radius", c.cluster_radius);
      c.cluster_min_points = r.value("min_points", c.cluster_min_points);
    }
    if (j.contains("object_class")) c.object_class_id = detail::semantic_ref(j.at("object_class"), taxonomy);
    if (j.contains("background_class")) c.background_class_id = detail::semantic_ref(j.at("background_class"), taxonomy);
    if (j.contains("part_rules")) c.part_rules = detail::rules_from_json(j.at("part_rules"), taxonomy);
    if (j.contains("catch_all_part")) c.catch_all_part_id = detail::part_ref(j.at("catch_all_part"), taxonomy);
    c.knn_k = j.value("knn_k", c.knn_k);
    c.max_pixel_radius = j.value("max_pixel_radius", c.max_pixel_radius);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("rgbd-config", std::string("RGB-D label config: ") + e.what());
  }
  return c;
}

nlohmann::json rgbd_config_to_json(const RgbdLabelConfig& c) {
  return {{"pmf", detail::pmf_to_json(c.pmf)},
          {"ransac",
           {{"iterations", c.ransac.iterations},
            {"distance_threshold", c.ransac.distance_threshold},
            {"seed", c.ransac.seed}}},
          {"cluster", {{"radius", c.cluster_radius}, {"min_points", c.cluster_min_points}}},
          {"object_class", c.object_class_id},
          {"background_class", c.background_class_id},
          {"part_rules", detail::rules_to_json(c.part_rules)},
          {"catch_all_part", c.catch_all_part_id},
          {"knn_k", c.knn_k},
          {"max_pixel_radius", c.max_pixel_radius}};
}

LabeledPointCloud segment_objects(const PointCloud& cloud, const RgbdLabelConfig& config) {
  if (cloud.empty()) throw ValidationError("empty-cloud", "cannot segment an empty point cloud");
  const auto n = cloud.size();
  std::vector<bool> background = progressive_morphological_filter(cloud, config.pmf);

  // The plane refit on the ground candidates decides: it catches
  // background the raster filter missed and returns object bases that sit
  // just above the table.
  std::vector<Point3> ground_points;
  for (std::size_t i = 0; i < n; ++i) {
    if (background[i]) ground_points.push_back(cloud.points[i]);
  }
  std::optional<PlaneFit> fit;
  if (ground_points.size() >= 3) {
    try {
      fit = ransac_plane(ground_points, config.ransac);
    } catch (const ValidationError&) {
      // Collinear candidates: keep the raster decision.
    }
  }
  if (fit) {
    for (std::size_t i = 0; i < n; ++i) {
      background[i] = std::abs(fit->plane.signed_distance(cloud.points[i])) <= config.ransac.distance_threshold;
    }
  }

  std::vector<std::uint32_t> remaining;
  std::vector<Point3> remaining_points;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!background[i]) {
      remaining.push_back(i);
      remaining_points.push_back(cloud.points[i]);
    }
  }
  const auto clusters = euclidean_clusters(remaining_points, config.cluster_radius, config.cluster_min_points);

  LabeledPointCloud out;
  out.cloud = cloud;
  out.object_flag.assign(n, false);
  out.instance_id.assign(n, 0);
  out.part_id.assign(n, 0);
  for (std::size_t k = 0; k < remaining.size(); ++k) {
    if (clusters[k] == 0) continue;
    if (clusters[k] > 65535) throw ValidationError("too-many-instances", "more than 65535 clusters");
    out.object_flag[remaining[k]] = true;
    out.instance_id[remaining[k]] = static_cast<InstanceId>(clusters[k]);
  }
  return out;
}

LabeledPointCloud label_parts(LabeledPointCloud labeled, const std::vector<PartColorRule>& rules,
                              PartId catch_all_part_id, const ClassTaxonomy* taxonomy) {
  if (taxonomy != nullptr) check_rules(rules, catch_all_part_id, *taxonomy);
  const auto ordered = ordered_rules(rules);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled.object_flag[i]) {
      labeled.part_id[i] = 0;
      continue;
    }
    const auto& p = labeled.cloud.points[i];
    labeled.part_id[i] = classify_color(p.r, p.g, p.b, ordered, catch_all_part_id);
  }
  return labeled;
}

namespace {

struct ProjectedLabel {
  double u, v, depth;
  InstanceId instance;
  PartId part;

  auto key() const { return std::tie(u, v, depth, instance, part); }
};

/// Majority label among `labels` (ordered nearest first); ties go to the
/// tied label that appears first.
std::uint16_t vote(const std::vector<std::uint16_t>& labels) {
  std::map<std::uint16_t, std::size_t> counts;
  std::size_t best = 0;
  for (auto l : labels) best = std::max(best, ++counts[l]);
  for (auto l : labels) {
    if (counts[l] == best) return l;
  }
  return 0;
}

}  // namespace

LabelTriple project_labels(const LabeledPointCloud& labeled, const CameraModel& camera, const RgbdLabelConfig& config,
                           ProjectionStats* stats) {
  camera.validate();
  labeled.check();
  const auto proj = project(labeled.cloud.points, camera);

  // Canonical point order makes equal-distance ties independent of the
  // input order.
  std::vector<ProjectedLabel> pts;
  for (std::size_t i = 0; i < proj.size(); ++i) {
    if (!proj[i].in_frame) continue;
    pts.push_back({proj[i].u, proj[i].v, proj[i].depth, labeled.instance_id[i], labeled.part_id[i]});
  }
  std::sort(pts.begin(), pts.end(), [](const ProjectedLabel& a, const ProjectedLabel& b) { return a.key() < b.key(); });

  LabelTriple out(camera.width, camera.height);
  if (stats != nullptr) *stats = ProjectionStats{pts.size(), 0};
  if (pts.empty()) return out;

  std::vector<KdTree<2>::Point> coords(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) coords[i] = {pts[i].u, pts[i].v};
  const KdTree<2> tree(std::move(coords));
  const double r2 = config.max_pixel_radius * config.max_pixel_radius;

  std::vector<std::uint16_t> inst_votes, part_votes;
  std::size_t labelled = 0;
  for (std::uint32_t y = 0; y < camera.height; ++y) {
    for (std::uint32_t x = 0; x < camera.width; ++x) {
      const auto nbrs = tree.knn({static_cast<double>(x), static_cast<double>(y)}, config.knn_k);
      if (nbrs.empty() || nbrs.front().dist2 > r2) continue;
      inst_votes.clear();
      part_votes.clear();
      for (const auto& nb : nbrs) {
        inst_votes.push_back(pts[nb.index].instance);
        part_votes.push_back(pts[nb.index].part);
      }
      const InstanceId inst = vote(inst_votes);
      out.instance.at(x, y) = inst;
      out.semantic.at(x, y) = inst != 0 ? config.object_class_id : config.background_class_id;
      out.part.at(x, y) = inst != 0 ? vote(part_votes) : PartId{0};
      ++labelled;
    }
  }
  if (stats != nullptr) stats->labelled_pixels = labelled;
  return out;
}

RgbdSample generate_rgbd_sample(const Image& rgb, const PointCloud& cloud, const CameraModel& camera,
                                const ClassTaxonomy& taxonomy, const RgbdLabelConfig& config) {
  config.validate(taxonomy);
  camera.validate();
  if (rgb.width != camera.width || rgb.height != camera.height) {
    throw ValidationError("dimension-mismatch", "image size differs from the camera model");
  }
  RgbdSample sample;
  sample.image = rgb;
  sample.cloud = label_parts(segment_objects(cloud, config), config.part_rules, config.catch_all_part_id, &taxonomy);
  sample.cloud.check();
  sample.labels = project_labels(sample.cloud, camera, config, &sample.stats);
  return sample;
}

}  // namespace partfuse
