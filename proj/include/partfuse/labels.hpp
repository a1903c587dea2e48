#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "partfuse/taxonomy.hpp"

namespace partfuse {

/// H x W grid of 16-bit ids, row-major.
struct LabelGrid {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint16_t> ids;

  LabelGrid() = default;
  LabelGrid(std::uint32_t w, std::uint32_t h, std::uint16_t fill = 0)
      : width(w), height(h), ids(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const noexcept { return ids.size(); }
  std::uint16_t& at(std::uint32_t x, std::uint32_t y) { return ids[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(std::uint32_t x, std::uint32_t y) const {
    return ids[static_cast<std::size_t>(y) * width + x];
  }

  friend bool operator==(const LabelGrid&, const LabelGrid&) = default;
};

/// The three labels per pixel: semantic class, instance, part. 0 is void
/// (semantic/part) or "no instance".
struct LabelTriple {
  LabelGrid semantic;
  LabelGrid instance;
  LabelGrid part;

  LabelTriple() = default;
  LabelTriple(std::uint32_t w, std::uint32_t h) : semantic(w, h), instance(w, h), part(w, h) {}

  std::uint32_t width() const noexcept { return semantic.width; }
  std::uint32_t height() const noexcept { return semantic.height; }
  std::size_t pixel_count() const noexcept { return semantic.size(); }
  bool same_dims() const noexcept;

  friend bool operator==(const LabelTriple&, const LabelTriple&) = default;
};

/// One panoptic segment: a (class, instance) pair and its pixels (flat
/// indices, ascending). instance_id is 0 for stuff.
struct PanopticSegment {
  ClassId class_id = 0;
  InstanceId instance_id = 0;
  std::vector<std::uint32_t> pixels;

  std::size_t pixel_count() const noexcept { return pixels.size(); }
};

/// 16-bit binary PGM (maxval 65535, big-endian samples).
LabelGrid read_label_pgm(const std::filesystem::path& path);
void write_label_pgm(const LabelGrid& grid, const std::filesystem::path& path);

/// `<stem>.sem.pgm`, `<stem>.inst.pgm`, `<stem>.part.pgm`.
LabelTriple read_label_triple(const std::filesystem::path& stem);
void write_label_triple(const LabelTriple& triple, const std::filesystem::path& stem);
std::filesystem::path triple_component_path(const std::filesystem::path& stem, const char* component);

/// Checks a loaded triple against the taxonomy: equal dims, known ids,
/// instances only on thing classes, one semantic class per instance id.
/// Part ids are checked for existence only. Throws ValidationError.
void validate_triple(const LabelTriple& triple, const ClassTaxonomy& taxonomy);

/// Segments ordered by (class_id, instance_id). Stuff classes form a single
/// segment per class regardless of connectivity or stray instance ids.
std::vector<PanopticSegment> derive_segments(const LabelTriple& triple, const ClassTaxonomy& taxonomy);

}  // namespace partfuse
