#include <doctest.h>

#include "../common/fixtures.hpp"
#include "partfuse/error.hpp"

using namespace fixtures;

namespace {

double point_accuracy(const LabeledPointCloud& labeled, const std::vector<InstanceId>& truth) {
  // Instance ids are matched to truth by majority.
  std::map<InstanceId, std::map<InstanceId, std::size_t>> votes;
  for (std::size_t i = 0; i < truth.size(); ++i) ++votes[labeled.instance_id[i]][truth[i]];
  std::map<InstanceId, InstanceId> to_truth{{0, 0}};
  for (const auto& [pred, row] : votes) {
    if (pred == 0) continue;
    to_truth[pred] = std::max_element(row.begin(), row.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += to_truth[labeled.instance_id[i]] == truth[i];
  return static_cast<double>(ok) / truth.size();
}

}  // namespace

TEST_CASE("colour rules") {
  const std::vector<PartColorRule> rules{{kSeal, HsvRange{340, 20, 0.5, 1, 0.3, 1}, 0},
                                         {kCenter, HsvRange{0, 360, 0.5, 1, 0.3, 1}, 5}};
  const auto ordered = ordered_rules(rules);
  CHECK(ordered[0].part_id == kCenter);
  CHECK(classify_color(220, 30, 30, ordered, kOther) == kCenter);
  CHECK(classify_color(220, 30, 30, ordered_rules({rules[0]}), kOther) == kSeal);
  CHECK(classify_color(200, 200, 200, ordered, kOther) == kOther);
  CHECK(classify_color(200, 200, 200, ordered, 0) == 0);
  CHECK_THROWS_AS(check_rules({{99, HsvRange{}, 0}}, 0, hospital_taxonomy()), ValidationError);
  CHECK_THROWS_AS(check_rules({}, 42, hospital_taxonomy()), ValidationError);
}

TEST_CASE("rgbd: segmentation of the two-box scene") {
  const auto scene = make_rgbd_scene(7);
  const auto labeled = segment_objects(scene.cloud, rgbd_config());
  labeled.check();
  CHECK(labeled.instance_count() == 2);
  CHECK(point_accuracy(labeled, scene.truth) >= 0.99);
  const auto again = segment_objects(scene.cloud, rgbd_config());
  CHECK(again.instance_id == labeled.instance_id);
}

TEST_CASE("rgbd: parts from colour") {
  const auto scene = make_rgbd_scene(7);
  const auto labeled = label_parts(segment_objects(scene.cloud, rgbd_config()), rgbd_config().part_rules, kOther,
                                   nullptr);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled.object_flag[i]) {
      CHECK(labeled.part_id[i] == 0);
      continue;
    }
    const auto& p = scene.cloud.points[i];
    CHECK(labeled.part_id[i] == (p.r == 210 ? kSeal : kOther));
  }
}

TEST_CASE("rgbd: projected sample") {
  const auto tax = hospital_taxonomy();
  const auto scene = make_rgbd_scene(11);
  const auto sample = generate_rgbd_sample(scene.rgb, scene.cloud, scene.camera, tax, rgbd_config());
  CHECK_NOTHROW(validate_triple(sample.labels, tax));
  CHECK(sample.image == scene.rgb);
  std::set<InstanceId> inst(sample.labels.instance.ids.begin(), sample.labels.instance.ids.end());
  inst.erase(0);
  CHECK(inst.size() == 2);
  // The centre of the first box's top face.
  const auto pr = project(std::vector<Point3>{{-0.15, 0.0, 0.1}}, scene.camera)[0];
  const auto x = static_cast<std::uint32_t>(pr.u), y = static_cast<std::uint32_t>(pr.v);
  CHECK(sample.labels.semantic.at(x, y) == kBag);
  CHECK(sample.labels.part.at(x, y) != 0);
  CHECK(sample.labels.semantic.at(2, 2) == kTable);
  CHECK(sample.labels.part.at(2, 2) == 0);
  CHECK(sample.stats.labelled_pixels > 0);
}

TEST_CASE("rgbd: config validation and json") {
  const auto tax = hospital_taxonomy();
  auto c = rgbd_config();
  CHECK_NOTHROW(c.validate(tax));
  c.object_class_id = kTable;
  CHECK_THROWS_AS(c.validate(tax), ValidationError);
  const auto back = rgbd_config_from_json(rgbd_config_to_json(rgbd_config()), tax);
  CHECK(rgbd_config_to_json(back) == rgbd_config_to_json(rgbd_config()));
  const auto named = rgbd_config_from_json({{"object_class", "bottle"}}, tax);
  CHECK(named.object_class_id == kBottle);
}

TEST_CASE("monitor: mask and parts of a disk") {
  const auto scene = make_monitor_scene(80, 60, {{40, 30, 20}});
  const auto cfg = monitor_config();
  const auto mask = extract_reference_mask(scene.blue, scene.black, cfg);
  CHECK(mask_iou(mask, scene.truth) >= 0.99);
  const auto ref = extract_part_masks(scene.blue, scene.black, mask, cfg);
  CHECK_NOTHROW(ref.check());
  REQUIRE(ref.parts.size() == 2);
  CHECK(ref.parts[0].part_id == kSeal);
  CHECK(mask_or(ref.parts[0].mask, ref.parts[1].mask) == mask);
  CHECK(mask_and(ref.parts[0].mask, ref.parts[1].mask).count() == 0);
  CHECK(mask_iou(ref.parts[0].mask, scene.truth_seal) >= 0.95);
}

TEST_CASE("monitor: components become instances") {
  const auto scene = make_monitor_scene(80, 60, {{20, 30, 12}, {58, 30, 12}});
  const auto cfg = monitor_config();
  const auto ref = extract_part_masks(scene.blue, scene.black, extract_reference_mask(scene.blue, scene.black, cfg), cfg);
  std::set<InstanceId> ids(ref.instances.ids.begin(), ref.instances.ids.end());
  CHECK(ids == std::set<InstanceId>{0, 1, 2});
  const auto t = reference_triple(ref);
  CHECK_NOTHROW(validate_triple(t, hospital_taxonomy()));
  CHECK(t.semantic.at(0, 0) == kTable);
  CHECK(t.instance.at(20, 30) == 1);
  CHECK(t.instance.at(58, 30) == 2);
}

TEST_CASE("monitor: errors") {
  const auto cfg = monitor_config();
  const auto empty = make_monitor_scene(40, 30, {});
  CHECK_THROWS_AS(extract_reference_mask(empty.blue, empty.black, cfg), ValidationError);
  const auto a = make_monitor_scene(40, 30, {{20, 15, 10}});
  const auto b = make_monitor_scene(41, 30, {{20, 15, 10}});
  CHECK_THROWS_AS(extract_reference_mask(a.blue, b.black, cfg), ValidationError);
  auto bad = cfg;
  bad.closing_window = 4;
  CHECK_THROWS_AS(bad.validate(hospital_taxonomy()), ValidationError);
}

TEST_CASE("monitor: transfer and composite") {
  const auto tax = hospital_taxonomy();
  const auto scene = make_monitor_scene(64, 48, {{32, 24, 14}});
  const auto cfg = monitor_config();
  const auto ref = extract_part_masks(scene.blue, scene.black, extract_reference_mask(scene.blue, scene.black, cfg), cfg);
  const auto target = noise_image(3, 64, 48);
  const auto transferred = transfer_labels(ref, target, tax);
  CHECK(transferred.image == target);
  CHECK(transferred.labels == reference_triple(ref));

  const auto bg = noise_image(4, 64, 48);
  const auto comp = composite_synthetic(scene.black, ref, bg);
  CHECK(comp.labels == reference_triple(ref));
  for (std::size_t i = 0; i < comp.image.pixel_count(); ++i) {
    const auto* src = ref.object_mask.test(i) ? scene.black.pixel(i) : bg.pixel(i);
    CHECK(std::equal(src, src + 3, comp.image.pixel(i)));
  }
}

TEST_CASE("background choice is a pure function of seed and index") {
  CHECK(choose_background(5, 9, 7) == choose_background(5, 9, 7));
  std::set<std::size_t> seen;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto c = choose_background(1, k, 4);
    CHECK(c < 4);
    seen.insert(c);
  }
  CHECK(seen.size() == 4);
  CHECK_THROWS_AS(choose_background(1, 0, 0), ValidationError);
}

TEST_CASE("flips") {
  SplitMix64 rng(21);
  const auto tax = hospital_taxonomy();
  for (auto [w, h] : {std::pair{5u, 3u}, std::pair{4u, 4u}, std::pair{1u, 7u}}) {
    const auto img = noise_image(rng.below(1000), w, h);
    const auto t = random_triple(rng, w, h, tax);
    CHECK(apply_flip(apply_flip(img, Flip::vflip), Flip::vflip) == img);
    CHECK(apply_flip(apply_flip(img, Flip::hflip), Flip::hflip) == img);
    CHECK(apply_flip(img, Flip::rot180) == apply_flip(apply_flip(img, Flip::hflip), Flip::vflip));
    CHECK(apply_flip(img, Flip::identity) == img);
    CHECK(apply_flip(apply_flip(t, Flip::vflip), Flip::vflip) == t);
    CHECK(apply_flip(t, Flip::rot180) == apply_flip(apply_flip(t, Flip::vflip), Flip::hflip));
  }
  Image tiny(2, 2, 1);
  tiny.samples = {1, 2, 3, 4};
  CHECK(apply_flip(tiny, Flip::vflip).samples == std::vector<std::uint8_t>{3, 4, 1, 2});
  CHECK(apply_flip(tiny, Flip::hflip).samples == std::vector<std::uint8_t>{2, 1, 4, 3});
  CHECK(apply_flip(tiny, Flip::rot180).samples == std::vector<std::uint8_t>{4, 3, 2, 1});

  // Labels follow their pixels.
  const auto img = noise_image(8, 6, 4);
  const auto t = random_triple(rng, 6, 4, tax);
  const auto variants = augment_flips(img, t);
  REQUIRE(variants.size() == 4);
  CHECK(std::string(flip_suffix(variants[1].first)) == "_rot180");
  for (const auto& [flip, sample] : variants) {
    for (std::uint32_t y = 0; y < 4; ++y) {
      for (std::uint32_t x = 0; x < 6; ++x) {
        const std::uint32_t sx = (flip == Flip::hflip || flip == Flip::rot180) ? 5 - x : x;
        const std::uint32_t sy = (flip == Flip::vflip || flip == Flip::rot180) ? 3 - y : y;
        CHECK(sample.labels.semantic.at(x, y) == t.semantic.at(sx, sy));
        CHECK(sample.labels.part.at(x, y) == t.part.at(sx, sy));
        CHECK(sample.image.pixel(y * 6 + x)[1] == img.pixel(sy * 6 + sx)[1]);
      }
    }
  }
  CHECK_THROWS_AS(augment_flips(noise_image(1, 5, 4), t), ValidationError);
}

TEST_CASE("overlay boxes and rendering") {
  const auto tax = hospital_taxonomy();
  const auto scene = make_monitor_scene(64, 48, {{20, 24, 10}, {48, 20, 8}});
  const auto cfg = monitor_config();
  const auto ref = extract_part_masks(scene.blue, scene.black, extract_reference_mask(scene.blue, scene.black, cfg), cfg);
  const auto t = reference_triple(ref);
  const auto boxes = instance_boxes(t);
  REQUIRE(boxes.size() == 2);
  CHECK(boxes[0].instance_id == 1);
  CHECK(boxes[0].class_id == kBag);
  for (const auto& b : boxes) {
    std::uint32_t x0 = 1000, y0 = 1000, x1 = 0, y1 = 0;
    for (std::uint32_t y = 0; y < 48; ++y) {
      for (std::uint32_t x = 0; x < 64; ++x) {
        if (t.instance.at(x, y) != b.instance_id) continue;
        x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
      }
    }
    CHECK(b.x_min == x0);
    CHECK(b.y_min == y0);
    CHECK(b.x_max == x1);
    CHECK(b.y_max == y1);
  }
  const auto spec = default_overlay_spec(tax);
  CHECK_NOTHROW(spec.validate());
  const auto out = render_overlay(scene.black, t, spec);
  CHECK(out.channels == 3);
  CHECK(out.width == 64);
  const auto bag = spec.class_colors.at(kBag);
  const auto* corner = out.pixel(boxes[0].y_min * 64 + boxes[0].x_min);
  CHECK(std::equal(bag.begin(), bag.end(), corner));

  auto plain = spec;
  plain.alpha = 0;
  plain.draw_boxes = false;
  Image grey(64, 48, 1, 77);
  const auto g = render_overlay(grey, LabelTriple(64, 48), plain);
  CHECK(g.samples == std::vector<std::uint8_t>(64 * 48 * 3, 77));
  auto bad = spec;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
