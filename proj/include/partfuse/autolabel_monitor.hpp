#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "partfuse/autolabel_rgbd.hpp"
#include "partfuse/imaging.hpp"
#include "partfuse/labels.hpp"
#include "partfuse/taxonomy.hpp"

namespace partfuse {

struct MonitorLabelConfig {
  std::uint32_t closing_window = 5;
  std::uint32_t quantize_levels = 8;
  HsvRange blue_range{200.0, 260.0, 0.5, 1.0, 0.3, 1.0};
  HsvRange black_range{0.0, 360.0, 0.0, 1.0, 0.0, 0.2};
  std::vector<PartColorRule> part_rules;
  PartId catch_all_part_id = 0;
  ClassId object_class_id = 0;
  ClassId background_class_id = 0;
  std::size_t min_component_area = 100;

  void validate(const ClassTaxonomy& taxonomy) const;
};

MonitorLabelConfig monitor_config_from_json(const nlohmann::json& j, const ClassTaxonomy& taxonomy);
nlohmann::json monitor_config_to_json(const MonitorLabelConfig& config);

struct PartMask {
  PartId part_id = 0;
  BitMask mask;
};

/// Reference segmentation of one static scene.
struct ReferenceLabel {
  BitMask object_mask;
  std::vector<PartMask> parts;  // one per configured part id, rule order then catch-all
  LabelGrid instances;          // 8-connected components of the object mask
  ClassId object_class_id = 0;
  ClassId background_class_id = 0;

  /// Throws ValidationError("reference-label") unless every part mask lies
  /// inside the object mask and part masks are pairwise disjoint.
  void check() const;
};

/// Object mask from a blue-background and a black-background capture of
/// the same scene. Throws ValidationError dimension-mismatch / empty-mask.
BitMask extract_reference_mask(const Image& img_blue, const Image& img_black, const MonitorLabelConfig& config);

/// Part masks inside the object mask by colour rules on the preprocessed
/// black capture; instances from connected components.
ReferenceLabel extract_part_masks(const Image& img_blue, const Image& img_black, const BitMask& object_mask,
                                  const MonitorLabelConfig& config);

/// Label triple described by a reference segmentation.
LabelTriple reference_triple(const ReferenceLabel& reference);

struct LabeledImage {
  Image image;
  LabelTriple labels;
};

/// Target captured from the same pose: image passes through, labels come
/// from the reference.
LabeledImage transfer_labels(const ReferenceLabel& reference, const Image& target, const ClassTaxonomy& taxonomy);

/// Object pixels over a background image, labelled like transfer_labels().
LabeledImage composite_synthetic(const Image& object_image, const ReferenceLabel& reference, const Image& background);

/// Background index for synthetic sample `index` of a run seeded with `seed`.
std::size_t choose_background(std::uint64_t seed, std::uint64_t index, std::size_t count);

enum class Flip { identity, rot180, vflip, hflip };

const char* flip_suffix(Flip flip) noexcept;  // "_id", "_rot180", "_vflip", "_hflip"

Image apply_flip(const Image& image, Flip flip);
LabelGrid apply_flip(const LabelGrid& grid, Flip flip);
LabelTriple apply_flip(const LabelTriple& triple, Flip flip);

/// The four variants in the order identity, rot180, vflip, hflip.
/// vflip mirrors rows (upside down); hflip mirrors columns.
std::vector<std::pair<Flip, LabeledImage>> augment_flips(const Image& image, const LabelTriple& triple);

}  // namespace partfuse
