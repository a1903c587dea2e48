#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

#include "partfuse/autolabel_monitor.hpp"
#include "partfuse/autolabel_rgbd.hpp"
#include "partfuse/cli.hpp"
#include "partfuse/fusion.hpp"
#include "partfuse/imaging.hpp"
#include "partfuse/labels.hpp"
#include "partfuse/logits.hpp"
#include "partfuse/metrics.hpp"
#include "partfuse/overlay.hpp"
#include "partfuse/pointcloud.hpp"
#include "partfuse/rng.hpp"
#include "partfuse/taxonomy.hpp"

namespace fixtures {

using namespace partfuse;
namespace fs = std::filesystem;

inline constexpr ClassId kBag = 1, kBottle = 2, kMedicalBag = 3, kTable = 4;
inline constexpr PartId kSeal = 1, kCenter = 2, kOther = 3;

inline nlohmann::json hospital_taxonomy_json() {
  return {{"semantic_classes",
           {{{"id", 1}, {"name", "transfusion_bag"}, {"is_thing", true}},
            {{"id", 2}, {"name", "bottle"}, {"is_thing", true}},
            {{"id", 3}, {"name", "medical_bag"}, {"is_thing", true}},
            {{"id", 4}, {"name", "table"}, {"is_thing", false}}}},
          {"part_classes",
           {{{"id", 1}, {"name", "transfusion_bag_seal"}, {"parent_semantic_id", 1}},
            {{"id", 2}, {"name", "transfusion_bag_center"}, {"parent_semantic_id", 1}},
            {{"id", 3}, {"name", "transfusion_bag_other"}, {"parent_semantic_id", 1}}}}};
}

inline ClassTaxonomy hospital_taxonomy() { return validate_taxonomy(hospital_taxonomy_json()); }

/// Same classes, no parts.
inline ClassTaxonomy partless_taxonomy() {
  auto j = hospital_taxonomy_json();
  j["part_classes"] = nlohmann::json::array();
  return validate_taxonomy(j);
}

/// `n` semantic classes (first `things` are things), each with exactly one part.
inline ClassTaxonomy one_part_taxonomy(int n, int things) {
  nlohmann::json j;
  for (int i = 1; i <= n; ++i) {
    j["semantic_classes"].push_back({{"id", i}, {"name", "c" + std::to_string(i)}, {"is_thing", i <= things}});
    j["part_classes"].push_back({{"id", 10 + i}, {"name", "p" + std::to_string(i)}, {"parent_semantic_id", i}});
  }
  return validate_taxonomy(j);
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("partfuse_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline double gaussian(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// ------------------------------------------------------------------ logits

inline ChannelPlanes random_planes(SplitMix64& rng, std::uint32_t w, std::uint32_t h, std::vector<std::uint16_t> ids,
                                   double scale = 4.0) {
  ChannelPlanes p;
  p.width = w;
  p.height = h;
  p.channel_ids = std::move(ids);
  p.values.resize(p.channels() * p.plane_size());
  for (auto& v : p.values) v = (rng.uniform() * 2.0 - 1.0) * scale;
  return p;
}

inline LogitStack random_stack(SplitMix64& rng, std::uint32_t w, std::uint32_t h, const ClassTaxonomy& tax,
                               std::size_t proposals) {
  LogitStack s;
  s.width = w;
  s.height = h;
  std::vector<std::uint16_t> sem_ids, part_ids;
  for (const auto& c : tax.semantic_classes()) sem_ids.push_back(c.id);
  for (const auto& p : tax.part_classes()) part_ids.push_back(p.id);
  s.semantic = random_planes(rng, w, h, sem_ids);
  s.part = random_planes(rng, w, h, part_ids);
  std::vector<ClassId> things;
  for (const auto& c : tax.semantic_classes()) {
    if (c.is_thing) things.push_back(c.id);
  }
  for (std::size_t k = 0; k < proposals && !things.empty(); ++k) {
    InstanceProposal pr;
    pr.class_id = things[rng.below(things.size())];
    pr.confidence = rng.uniform();
    pr.mask_logits.resize(s.pixel_count());
    // A rectangle of positive logits on a negative field.
    const auto x0 = rng.below(w), y0 = rng.below(h);
    const auto x1 = x0 + rng.below(w - x0), y1 = y0 + rng.below(h - y0);
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        const bool inside = x >= x0 && x <= x1 && y >= y0 && y <= y1;
        pr.mask_logits[static_cast<std::size_t>(y) * w + x] = inside ? 1.0 + 3.0 * rng.uniform() : -2.0;
      }
    }
    s.proposals.push_back(std::move(pr));
  }
  return s;
}

/// 8x8 stack: the left half has semantic argmax `bottle` (with a bottle
/// proposal) and part argmax `transfusion_bag_seal`; the right half is a
/// consistent transfusion bag with part `transfusion_bag_other`.
struct ConflictFixture {
  LogitStack stack;
  std::vector<std::size_t> conflict_pixels;  // flat indices
};

inline ConflictFixture conflicting_fixture() {
  const auto tax = hospital_taxonomy();
  const std::uint32_t w = 8, h = 8;
  ConflictFixture f;
  auto& s = f.stack;
  s.width = w;
  s.height = h;
  s.semantic.width = s.part.width = w;
  s.semantic.height = s.part.height = h;
  s.semantic.channel_ids = {kBag, kBottle, kMedicalBag, kTable};
  s.part.channel_ids = {kSeal, kCenter, kOther};
  s.semantic.values.assign(4 * 64, -3.0);
  s.part.values.assign(3 * 64, -3.0);
  InstanceProposal bottle{kBottle, 0.9, std::vector<double>(64, -5.0)};
  InstanceProposal bag{kBag, 0.8, std::vector<double>(64, -5.0)};
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (x < 4) {
        // Bottle semantics; the part head fires the bag's seal.
        s.semantic.plane(1)[i] = 4.0;
        s.part.plane(0)[i] = 4.0;
        bottle.mask_logits[i] = 4.0;
        f.conflict_pixels.push_back(i);
      } else {
        // A consistent bag with its "other" part.
        s.semantic.plane(0)[i] = 4.0;
        s.part.plane(2)[i] = 4.0;
        bag.mask_logits[i] = 4.0;
      }
    }
  }
  s.proposals = {bottle, bag};
  return f;
}

// ------------------------------------------------------------------ label triples

/// Random valid triple: blocky regions of classes from the taxonomy, thing
/// instances per region, parts on classes that have them (plus some void).
inline LabelTriple random_triple(SplitMix64& rng, std::uint32_t w, std::uint32_t h, const ClassTaxonomy& tax) {
  LabelTriple t(w, h);
  const auto& classes = tax.semantic_classes();
  // Rectangles painted over each other; instance id per rectangle.
  const int rects = 2 + static_cast<int>(rng.below(5));
  std::map<ClassId, InstanceId> next_instance;
  for (int r = 0; r < rects; ++r) {
    const auto& c = classes[rng.below(classes.size())];
    const auto x0 = rng.below(w), y0 = rng.below(h);
    const auto x1 = std::min<std::uint64_t>(w - 1, x0 + 2 + rng.below(w / 2 + 1));
    const auto y1 = std::min<std::uint64_t>(h - 1, y0 + 2 + rng.below(h / 2 + 1));
    const InstanceId inst = c.is_thing ? ++next_instance[c.id] : 0;
    const auto parts = tax.parts_of(c.id);
    for (auto y = y0; y <= y1; ++y) {
      for (auto x = x0; x <= x1; ++x) {
        t.semantic.at(x, y) = c.id;
        t.instance.at(x, y) = inst;
        t.part.at(x, y) = parts.empty() ? PartId{0} : parts[(x / 3 + y / 4 + rng.below(2)) % parts.size()];
      }
    }
  }
  // Sprinkle void.
  for (std::size_t i = 0; i < t.pixel_count(); ++i) {
    if (rng.below(20) == 0) {
      t.semantic.ids[i] = 0;
      t.instance.ids[i] = 0;
      t.part.ids[i] = 0;
    }
  }
  return t;
}

/// Perturbed copy of `gt`: shifted rectangles, relabelled instance ids, part
/// noise, extra segments.
inline LabelTriple perturb_triple(SplitMix64& rng, const LabelTriple& gt, const ClassTaxonomy& tax) {
  LabelTriple p = gt;
  const auto w = gt.width(), h = gt.height();
  const int dx = static_cast<int>(rng.below(3)) - 1, dy = static_cast<int>(rng.below(3)) - 1;
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const int sx = std::clamp(static_cast<int>(x) + dx, 0, static_cast<int>(w) - 1);
      const int sy = std::clamp(static_cast<int>(y) + dy, 0, static_cast<int>(h) - 1);
      p.semantic.at(x, y) = gt.semantic.at(sx, sy);
      p.instance.at(x, y) = gt.instance.at(sx, sy);
      p.part.at(x, y) = gt.part.at(sx, sy);
    }
  }
  auto extra = random_triple(rng, w, h, tax);
  const auto x0 = rng.below(w), y0 = rng.below(h);
  for (std::uint32_t y = y0; y < std::min<std::uint64_t>(h, y0 + 6); ++y) {
    for (std::uint32_t x = x0; x < std::min<std::uint64_t>(w, x0 + 6); ++x) {
      if (extra.semantic.at(x, y) == 0) continue;
      p.semantic.at(x, y) = extra.semantic.at(x, y);
      p.instance.at(x, y) = tax.is_thing(extra.semantic.at(x, y)) ? 100 + extra.instance.at(x, y) : 0;
      p.part.at(x, y) = extra.part.at(x, y);
    }
  }
  for (std::size_t i = 0; i < p.pixel_count(); ++i) {
    const auto parts = tax.parts_of(p.semantic.ids[i]);
    if (!parts.empty() && rng.below(6) == 0) p.part.ids[i] = parts[rng.below(parts.size())];
  }
  return p;
}

// ------------------------------------------------------------------ PQ oracle

/// Per-pixel set arithmetic over every (pred, gt) segment pair with no
/// shortcuts; reproduces the documented void and matching rules.
struct OracleReport {
  std::map<ClassId, double> pq, part_pq;  // classes present in gt only
  double mean_pq = 0.0, mean_part_pq = 0.0;
  bool any = false;
};

inline OracleReport oracle_pq(const LabelTriple& pred, const LabelTriple& gt, const ClassTaxonomy& tax) {
  using Key = std::pair<ClassId, InstanceId>;
  const auto n = gt.pixel_count();
  auto key_of = [&](const LabelTriple& t, std::size_t i) -> Key {
    const ClassId c = t.semantic.ids[i];
    return {c, tax.is_thing(c) ? t.instance.ids[i] : InstanceId{0}};
  };
  std::set<Key> pred_keys, gt_keys;
  for (std::size_t i = 0; i < n; ++i) {
    if (pred.semantic.ids[i] != 0) pred_keys.insert(key_of(pred, i));
    if (gt.semantic.ids[i] != 0) gt_keys.insert(key_of(gt, i));
  }
  // Discard preds lying mostly on gt void.
  std::set<Key> kept;
  for (const auto& k : pred_keys) {
    std::size_t size = 0, on_void = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pred.semantic.ids[i] == 0 || key_of(pred, i) != k) continue;
      ++size;
      on_void += gt.semantic.ids[i] == 0;
    }
    if (2 * on_void <= size) kept.insert(k);
  }

  OracleReport out;
  for (const auto& c : tax.semantic_classes()) {
    double iou_sum = 0, part_sum = 0;
    std::size_t tp = 0, n_pred = 0, n_gt = 0;
    for (const auto& pk : kept) n_pred += pk.first == c.id;
    for (const auto& gk : gt_keys) n_gt += gk.first == c.id;
    for (const auto& pk : kept) {
      if (pk.first != c.id) continue;
      for (const auto& gk : gt_keys) {
        if (gk.first != c.id) continue;
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const bool in_p = pred.semantic.ids[i] != 0 && key_of(pred, i) == pk;
          const bool in_g = gt.semantic.ids[i] != 0 && key_of(gt, i) == gk;
          const bool gt_void = gt.semantic.ids[i] == 0;
          if (gt_void) continue;
          inter += in_p && in_g;
          uni += in_p || in_g;
        }
        const double iou = uni ? static_cast<double>(inter) / uni : 0.0;
        if (!(iou > 0.5)) continue;
        ++tp;
        iou_sum += iou;
        const auto parts = tax.parts_of(c.id);
        if (parts.empty()) {
          part_sum += iou;
          continue;
        }
        double sum = 0;
        int counted = 0;
        for (auto part : parts) {
          std::size_t pi = 0, pu = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const bool in_p = pred.semantic.ids[i] != 0 && key_of(pred, i) == pk;
            const bool in_g = gt.semantic.ids[i] != 0 && key_of(gt, i) == gk;
            if (!(in_p || in_g) || gt.semantic.ids[i] == 0) continue;
            const bool a = pred.part.ids[i] == part, b = gt.part.ids[i] == part;
            pi += a && b;
            pu += a || b;
          }
          if (pu == 0) continue;
          sum += static_cast<double>(pi) / pu;
          ++counted;
        }
        part_sum += counted ? sum / counted : iou;
      }
    }
    if (n_gt == 0) continue;
    const double fp = static_cast<double>(n_pred - tp), fn = static_cast<double>(n_gt - tp);
    const double denom = tp + 0.5 * fp + 0.5 * fn;
    out.pq[c.id] = iou_sum / denom;
    out.part_pq[c.id] = part_sum / denom;
  }
  for (const auto& [id, v] : out.pq) out.mean_pq += v;
  for (const auto& [id, v] : out.part_pq) out.mean_part_pq += v;
  if (!out.pq.empty()) {
    out.mean_pq /= out.pq.size();
    out.mean_part_pq /= out.part_pq.size();
    out.any = true;
  }
  return out;
}

/// 100x1 strip labelled by ranges [from, to) of (class, instance, part).
struct Span {
  std::uint32_t from, to;
  ClassId cls;
  InstanceId inst;
  PartId part = 0;
};

inline LabelTriple strip(std::initializer_list<Span> spans, std::uint32_t w = 100) {
  LabelTriple t(w, 1);
  for (const auto& s : spans) {
    for (auto i = s.from; i < s.to; ++i) {
      t.semantic.ids[i] = s.cls;
      t.instance.ids[i] = s.inst;
      t.part.ids[i] = s.part;
    }
  }
  return t;
}

// ------------------------------------------------------------------ Variant A scene

struct RgbdScene {
  PointCloud cloud;
  std::vector<InstanceId> truth;  // 0 = plane, 1/2 = box
  CameraModel camera;
  Image rgb;
};

/// 0.6 m square table at z = 0 (8 mm grid) with two 0.1 m cubes; cube
/// faces sampled every 5 mm from 1 cm above the table. Red caps on the top
/// faces. Camera 0.8 m above, looking down.
inline RgbdScene make_rgbd_scene(std::uint64_t seed, double noise = 0.001) {
  RgbdScene s;
  SplitMix64 rng(seed);
  const double half = 0.3, box = 0.1;
  const std::array<std::array<double, 2>, 2> origins{{{-0.2, -0.05}, {0.08, 0.02}}};
  auto inside_box = [&](double x, double y) {
    for (const auto& o : origins) {
      if (x >= o[0] - 0.004 && x <= o[0] + box + 0.004 && y >= o[1] - 0.004 && y <= o[1] + box + 0.004) return true;
    }
    return false;
  };
  auto add = [&](double x, double y, double z, std::uint8_t r, std::uint8_t g, std::uint8_t b, InstanceId id) {
    s.cloud.points.push_back({x + noise * gaussian(rng), y + noise * gaussian(rng), z + noise * gaussian(rng), r, g, b});
    s.truth.push_back(id);
  };
  for (int i = 0; i <= 75; ++i) {
    for (int j = 0; j <= 75; ++j) {
      const double x = -half + 0.008 * i, y = -half + 0.008 * j;
      if (!inside_box(x, y)) add(x, y, 0.0, 120, 90, 60, 0);
    }
  }
  const int steps = 20;
  for (std::size_t b = 0; b < origins.size(); ++b) {
    const auto id = static_cast<InstanceId>(b + 1);
    const double ox = origins[b][0], oy = origins[b][1];
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        const double x = ox + box * i / steps, y = oy + box * j / steps;
        const bool cap = i < steps / 2;
        add(x, y, box, cap ? 210 : 230, cap ? 30 : 230, cap ? 30 : 235, id);
      }
    }
    for (int i = 0; i <= steps; ++i) {
      for (int k = 2; k < steps; ++k) {
        const double t = box * i / steps, z = box * k / steps;
        add(ox + t, oy, z, 230, 230, 235, id);
        add(ox + t, oy + box, z, 230, 230, 235, id);
        add(ox, oy + t, z, 230, 230, 235, id);
        add(ox + box, oy + t, z, 230, 230, 235, id);
      }
    }
  }
  s.camera.width = 80;
  s.camera.height = 80;
  s.camera.fx = s.camera.fy = 100.0;
  s.camera.cx = s.camera.cy = 40.0;
  s.camera.extrinsic = {1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1, 0.8, 0, 0, 0, 1};
  s.rgb = Image(80, 80, 3, 90);
  return s;
}

inline RgbdLabelConfig rgbd_config() {
  RgbdLabelConfig c;
  c.object_class_id = kBag;
  c.background_class_id = kTable;
  c.part_rules = {{kSeal, HsvRange{340.0, 20.0, 0.5, 1.0, 0.3, 1.0}, 1}};
  c.catch_all_part_id = kOther;
  return c;
}

// ------------------------------------------------------------------ Variant B scene

struct Disk {
  double cx, cy, r;
};

struct MonitorScene {
  Image blue, black;
  BitMask truth;       // object pixels
  BitMask truth_seal;  // top halves
  std::vector<Disk> disks;
};

/// Disks with a red top half and a white bottom half on a blue and on a
/// black background (no anti-aliasing).
inline MonitorScene make_monitor_scene(std::uint32_t w, std::uint32_t h, std::vector<Disk> disks) {
  MonitorScene s;
  s.blue = Image(w, h, 3);
  s.black = Image(w, h, 3, 0);
  s.truth = BitMask(w, h);
  s.truth_seal = BitMask(w, h);
  s.disks = disks;
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      std::uint8_t* pb = s.blue.pixel(i);
      pb[0] = 0, pb[1] = 0, pb[2] = 255;
      for (const auto& d : disks) {
        const double dx = x - d.cx, dy = y - d.cy;
        if (dx * dx + dy * dy > d.r * d.r) continue;
        const bool top = y < d.cy;
        const std::array<std::uint8_t, 3> c = top ? std::array<std::uint8_t, 3>{220, 30, 30}
                                                  : std::array<std::uint8_t, 3>{235, 235, 235};
        std::copy(c.begin(), c.end(), pb);
        std::copy(c.begin(), c.end(), s.black.pixel(i));
        s.truth.set(i);
        s.truth_seal.set(i, top);
      }
    }
  }
  return s;
}

inline MonitorLabelConfig monitor_config() {
  MonitorLabelConfig c;
  c.object_class_id = kBag;
  c.background_class_id = kTable;
  c.part_rules = {{kSeal, HsvRange{340.0, 20.0, 0.5, 1.0, 0.3, 1.0}, 1}};
  c.catch_all_part_id = kOther;
  return c;
}

inline Image noise_image(std::uint64_t seed, std::uint32_t w, std::uint32_t h) {
  SplitMix64 rng(seed);
  Image img(w, h, 3);
  for (auto& v : img.samples) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// ------------------------------------------------------------------ on-disk datasets

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

/// taxonomy.json and config.json for the CLI, in `dir`.
inline void write_cli_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "taxonomy.json", hospital_taxonomy_json().dump(2));
  auto mc = monitor_config_to_json(monitor_config());
  mc["min_component_area"] = 20;
  const nlohmann::json config = {{"rgbd", rgbd_config_to_json(rgbd_config())},
                                 {"monitor", mc},
                                 {"fusion", {{"min_instance_area", 4}}}};
  write_text_file(dir / "config.json", config.dump(2));
}

inline void write_rgbd_dataset(const fs::path& dir, int scenes) {
  for (int k = 0; k < scenes; ++k) {
    const auto scene = make_rgbd_scene(100 + k);
    const auto d = dir / ("scene_" + std::to_string(k));
    fs::create_directories(d);
    write_pnm(scene.rgb, d / "rgb.ppm");
    write_ply(scene.cloud, d / "cloud.ply");
    write_text_file(d / "camera.json", camera_to_json(scene.camera).dump(2));
  }
}

inline void write_monitor_dataset(const fs::path& dir, int scenes, int backgrounds) {
  for (int k = 0; k < scenes; ++k) {
    const auto scene = make_monitor_scene(64, 48, {{20.0 + 4 * k, 24, 12}, {46, 20, 9}});
    const auto d = dir / "scenes" / ("scene_" + std::to_string(k));
    fs::create_directories(d);
    write_pnm(scene.blue, d / "blue.ppm");
    write_pnm(scene.black, d / "black.ppm");
    write_pnm(noise_image(50 + k, 64, 48), d / "target_0.ppm");
    write_pnm(noise_image(60 + k, 64, 48), d / "target_1.ppm");
  }
  fs::create_directories(dir / "backgrounds");
  for (int b = 0; b < backgrounds; ++b) write_pnm(noise_image(200 + b, 64, 48), dir / "backgrounds" / ("bg" + std::to_string(b) + ".ppm"));
}

inline void write_stack_dataset(const fs::path& dir, int count, std::uint64_t seed) {
  fs::create_directories(dir);
  SplitMix64 rng(seed);
  const auto tax = hospital_taxonomy();
  for (int k = 0; k < count; ++k) save_stack(random_stack(rng, 16, 16, tax, 3), dir / ("img" + std::to_string(k)));
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative path -> bytes for every file under `dir`.
inline std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

/// Runs the CLI in-process.
inline int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "partfuse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace fixtures
