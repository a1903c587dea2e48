#include "partfuse/autolabel_monitor.hpp"

#include <algorithm>

#include "json_config.hpp"
#include "partfuse/error.hpp"
#include "partfuse/rng.hpp"

namespace partfuse {

namespace {

void require_same_dims(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ValidationError("dimension-mismatch", "images differ in dimensions");
  }
  if (a.channels != 3 || b.channels != 3) throw ValidationError("channels", "monitor captures must be RGB");
}

/// Close then quantize, as applied to both captures.
Image preprocess(const Image& image, const MonitorLabelConfig& config) {
  return quantize_colors(morphological_close(image, config.closing_window), config.quantize_levels);
}

}  // namespace

void MonitorLabelConfig::validate(const ClassTaxonomy& taxonomy) const {
  if (closing_window == 0 || closing_window % 2 == 0) {
    throw ValidationError("monitor-config", "closing_window must be odd");
  }
  if (quantize_levels < 1 || quantize_levels > 256) throw ValidationError("monitor-config", "quantize_levels in [1,256]");
  if (min_component_area == 0) throw ValidationError("monitor-config", "min_component_area must be positive");
  blue_range.validate();
  black_range.validate();
  if (!taxonomy.is_thing(object_class_id)) {
    throw ValidationError("monitor-config", "object class " + std::to_string(object_class_id) + " is not a thing class");
  }
  if (background_class_id != 0 &&
      (taxonomy.find_semantic(background_class_id) == nullptr || taxonomy.is_thing(background_class_id))) {
    throw ValidationError("monitor-config", "background class must be a known stuff class");
  }
  check_rules(part_rules, catch_all_part_id, taxonomy);
}

MonitorLabelConfig monitor_config_from_json(const nlohmann::json& j, const ClassTaxonomy& taxonomy) {
  MonitorLabelConfig c;
  if (auto id = taxonomy.semantic_id_by_name("table")) c.background_class_id = *id;
  try {
    c.closing_window = j.value("closing_window", c.closing_window);
    c.quantize_levels = j.value("quantize_levels", c.quantize_levels);
    if (j.contains("blue_range")) c.blue_range = detail::hsv_from_json(j.at("blue_range"));
    if (j.contains("black_range")) c.black_range = detail::hsv_from_json(j.at("black_range"));
    if (j.contains("part_rules")) c.part_rules = detail::rules_from_json(j.at("part_rules"), taxonomy);
    if (j.contains("catch_all_part")) c.catch_all_part_id = detail::part_ref(j.at("catch_all_part"), taxonomy);
    if (j.contains("object_class")) c.object_class_id = detail::semantic_ref(j.at("object_class"), taxonomy);
    if (j.contains("background_class")) c.background_class_id = detail::semantic_ref(j.at("background_class"), taxonomy);
    c.min_component_area = j.value("min_component_area", c.min_component_area);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("monitor-config", std::string("monitor label config: ") + e.what());
  }
  return c;
}

nlohmann::json monitor_config_to_json(const MonitorLabelConfig& c) {
  return {{"closing_window", c.closing_window},
          {"quantize_levels", c.quantize_levels},
          {"blue_range", detail::hsv_to_json(c.blue_range)},
          {"black_range", detail::hsv_to_json(c.black_range)},
          {"part_rules", detail::rules_to_json(c.part_rules)},
          {"catch_all_part", c.catch_all_part_id},
          {"object_class", c.object_class_id},
          {"background_class", c.background_class_id},
          {"min_component_area", c.min_component_area}};
}

void ReferenceLabel::check() const {
  BitMask seen(object_mask.width, object_mask.height);
  for (const auto& part : parts) {
    if (part.mask.width != object_mask.width || part.mask.height != object_mask.height) {
      throw ValidationError("reference-label", "part mask size differs from the object mask");
    }
    for (std::size_t i = 0; i < part.mask.size(); ++i) {
      if (!part.mask.test(i)) continue;
      if (!object_mask.test(i)) throw ValidationError("reference-label", "part mask leaves the object mask");
      if (seen.test(i)) throw ValidationError("reference-label", "part masks overlap");
      seen.set(i);
    }
  }
}

BitMask extract_reference_mask(const Image& img_blue, const Image& img_black, const MonitorLabelConfig& config) {
  require_same_dims(img_blue, img_black);

  // Blue capture: anything that is not monitor blue is object, holes closed.
  const auto blue = preprocess(img_blue, config);
  const BitMask blue_mask = fill_holes(mask_not(threshold_hsv(blue, config.blue_range)));

  // Black capture restricted to that mask: anything that is not black survives.
  Image masked = img_black;
  for (std::size_t i = 0; i < masked.pixel_count(); ++i) {
    if (!blue_mask.test(i)) std::fill_n(masked.pixel(i), 3, std::uint8_t{0});
  }
  const auto black = preprocess(masked, config);
  const BitMask survivors = mask_and(mask_not(threshold_hsv(black, config.black_range)), blue_mask);

  BitMask object = remove_small_components(fill_holes(survivors), config.min_component_area);
  if (object.count() == 0) throw ValidationError("empty-mask", "no object found against the monitor backgrounds");
  return object;
}

ReferenceLabel extract_part_masks(const Image& img_blue, const Image& img_black, const BitMask& object_mask,
                                  const MonitorLabelConfig& config) {
  require_same_dims(img_blue, img_black);
  if (object_mask.width != img_black.width || object_mask.height != img_black.height) {
    throw ValidationError("dimension-mismatch", "object mask differs from the captures in size");
  }
  ReferenceLabel ref;
  ref.object_mask = object_mask;
  ref.object_class_id = config.object_class_id;
  ref.background_class_id = config.background_class_id;

  std::vector<PartId> part_order;
  for (const auto& rule : config.part_rules) {
    if (std::find(part_order.begin(), part_order.end(), rule.part_id) == part_order.end()) {
      part_order.push_back(rule.part_id);
    }
  }
  if (config.catch_all_part_id != 0 &&
      std::find(part_order.begin(), part_order.end(), config.catch_all_part_id) == part_order.end()) {
    part_order.push_back(config.catch_all_part_id);
  }
  for (auto id : part_order) ref.parts.push_back({id, BitMask(object_mask.width, object_mask.height)});

  Image masked = img_black;
  for (std::size_t i = 0; i < masked.pixel_count(); ++i) {
    if (!object_mask.test(i)) std::fill_n(masked.pixel(i), 3, std::uint8_t{0});
  }
  const auto black = preprocess(masked, config);
  const auto ordered = ordered_rules(config.part_rules);
  for (std::size_t i = 0; i < object_mask.size(); ++i) {
    if (!object_mask.test(i)) continue;
    const auto* p = black.pixel(i);
    const PartId part = classify_color(p[0], p[1], p[2], ordered, config.catch_all_part_id);
    if (part == 0) continue;
    for (auto& pm : ref.parts) {
      if (pm.part_id == part) pm.mask.set(i);
    }
  }

  const auto cc = connected_components(object_mask, 8);
  if (cc.count() > 65535) throw ValidationError("too-many-instances", "more than 65535 components");
  ref.instances = LabelGrid(object_mask.width, object_mask.height);
  for (std::size_t i = 0; i < cc.labels.size(); ++i) ref.instances.ids[i] = static_cast<InstanceId>(cc.labels[i]);
  ref.check();
  return ref;
}

LabelTriple reference_triple(const ReferenceLabel& reference) {
  const auto w = reference.object_mask.width, h = reference.object_mask.height;
  LabelTriple t(w, h);
  for (std::size_t i = 0; i < reference.object_mask.size(); ++i) {
    if (reference.object_mask.test(i)) {
      t.semantic.ids[i] = reference.object_class_id;
      t.instance.ids[i] = reference.instances.ids[i];
    } else {
      t.semantic.ids[i] = reference.background_class_id;
    }
  }
  for (const auto& pm : reference.parts) {
    for (std::size_t i = 0; i < pm.mask.size(); ++i) {
      if (pm.mask.test(i)) t.part.ids[i] = pm.part_id;
    }
  }
  return t;
}

LabeledImage transfer_labels(const ReferenceLabel& reference, const Image& target, const ClassTaxonomy& taxonomy) {
  if (target.width != reference.object_mask.width || target.height != reference.object_mask.height) {
    throw ValidationError("dimension-mismatch", "target differs from the reference in size");
  }
  if (!taxonomy.is_thing(reference.object_class_id)) {
    throw ValidationError("reference-label", "reference object class is not a thing class");
  }
  return {target, reference_triple(reference)};
}

LabeledImage composite_synthetic(const Image& object_image, const ReferenceLabel& reference, const Image& background) {
  require_same_dims(object_image, background);
  if (object_image.width != reference.object_mask.width || object_image.height != reference.object_mask.height) {
    throw ValidationError("dimension-mismatch", "object image differs from the reference in size");
  }
  LabeledImage out{background, reference_triple(reference)};
  for (std::size_t i = 0; i < out.image.pixel_count(); ++i) {
    if (reference.object_mask.test(i)) std::copy_n(object_image.pixel(i), 3, out.image.pixel(i));
  }
  return out;
}

std::size_t choose_background(std::uint64_t seed, std::uint64_t index, std::size_t count) {
  if (count == 0) throw ValidationError("no-backgrounds", "no background images available");
  auto rng = SplitMix64::for_index(seed, index);
  return static_cast<std::size_t>(rng.below(count));
}

const char* flip_suffix(Flip flip) noexcept {
  switch (flip) {
    case Flip::identity:
      return "_id";
    case Flip::rot180:
      return "_rot180";
    case Flip::vflip:
      return "_vflip";
    case Flip::hflip:
      return "_hflip";
  }
  return "";
}

namespace {

/// Source pixel index for destination (x, y).
std::size_t flip_source(std::uint32_t x, std::uint32_t y, std::uint32_t w, std::uint32_t h, Flip flip) {
  switch (flip) {
    case Flip::identity:
      break;
    case Flip::rot180:
      x = w - 1 - x;
      y = h - 1 - y;
      break;
    case Flip::vflip:
      y = h - 1 - y;
      break;
    case Flip::hflip:
      x = w - 1 - x;
      break;
  }
  return static_cast<std::size_t>(y) * w + x;
}

}  // namespace

Image apply_flip(const Image& image, Flip flip) {
  Image out = image;
  for (std::uint32_t y = 0; y < image.height; ++y) {
    for (std::uint32_t x = 0; x < image.width; ++x) {
      const auto dst = static_cast<std::size_t>(y) * image.width + x;
      std::copy_n(image.pixel(flip_source(x, y, image.width, image.height, flip)), image.channels, out.pixel(dst));
    }
  }
  return out;
}

LabelGrid apply_flip(const LabelGrid& grid, Flip flip) {
  LabelGrid out = grid;
  for (std::uint32_t y = 0; y < grid.height; ++y) {
    for (std::uint32_t x = 0; x < grid.width; ++x) {
      out.at(x, y) = grid.ids[flip_source(x, y, grid.width, grid.height, flip)];
    }
  }
  return out;
}

LabelTriple apply_flip(const LabelTriple& triple, Flip flip) {
  LabelTriple out;
  out.semantic = apply_flip(triple.semantic, flip);
  out.instance = apply_flip(triple.instance, flip);
  out.part = apply_flip(triple.part, flip);
  return out;
}

std::vector<std::pair<Flip, LabeledImage>> augment_flips(const Image& image, const LabelTriple& triple) {
  if (!triple.same_dims() || image.width != triple.width() || image.height != triple.height()) {
    throw ValidationError("dimension-mismatch", "image and labels differ in size");
  }
  std::vector<std::pair<Flip, LabeledImage>> out;
  for (Flip f : {Flip::identity, Flip::rot180, Flip::vflip, Flip::hflip}) {
    out.push_back({f, {apply_flip(image, f), apply_flip(triple, f)}});
  }
  return out;
}

}  // namespace partfuse
