#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "partfuse/imaging.hpp"
#include "partfuse/labels.hpp"
#include "partfuse/taxonomy.hpp"

namespace partfuse {

using Rgb = std::array<std::uint8_t, 3>;

struct OverlaySpec {
  std::map<ClassId, Rgb> class_colors;
  bool draw_boxes = true;
  double alpha = 0.5;

  /// Throws ValidationError("overlay-spec") for alpha outside [0,1] or a
  /// colour shared by two classes.
  void validate() const;
};

/// Colour per semantic class spread around the hue circle by the golden angle.
OverlaySpec default_overlay_spec(const ClassTaxonomy& taxonomy);

struct InstanceBox {
  InstanceId instance_id = 0;
  ClassId class_id = 0;
  std::uint32_t x_min = 0, y_min = 0, x_max = 0, y_max = 0;  // inclusive
};

/// Axis-aligned extents of every instance id, ascending by id. The class is
/// the semantic label of the instance's first pixel in scan order.
std::vector<InstanceBox> instance_boxes(const LabelTriple& triple);

/// Class colours alpha-blended over the image, part boundaries as 1-px
/// white contours and a box per instance in its class colour. A grey input
/// is expanded to RGB. Throws ValidationError("dimension-mismatch").
Image render_overlay(const Image& image, const LabelTriple& triple, const OverlaySpec& spec);

}  // namespace partfuse
