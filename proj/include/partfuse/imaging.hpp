#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace partfuse {

/// 8-bit raster, 1 or 3 interleaved channels, row-major.
struct Image {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 3;
  std::vector<std::uint8_t> samples;

  Image() = default;
  Image(std::uint32_t w, std::uint32_t h, std::uint32_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), samples(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* pixel(std::size_t i) { return samples.data() + i * channels; }
  const std::uint8_t* pixel(std::size_t i) const { return samples.data() + i * channels; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// One flag per pixel (stored as bytes 0/1).
struct BitMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bits;

  BitMask() = default;
  BitMask(std::uint32_t w, std::uint32_t h, bool fill = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  std::size_t size() const noexcept { return bits.size(); }
  bool test(std::size_t i) const { return bits[i] != 0; }
  bool at(std::uint32_t x, std::uint32_t y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(std::size_t i, bool v = true) { bits[i] = v ? 1 : 0; }
  std::size_t count() const noexcept;

  friend bool operator==(const BitMask&, const BitMask&) = default;
};

BitMask mask_and(const BitMask& a, const BitMask& b);
BitMask mask_or(const BitMask& a, const BitMask& b);
BitMask mask_not(const BitMask& a);
double mask_iou(const BitMask& a, const BitMask& b);

/// Hue in degrees; h_min > h_max denotes a range wrapping through 0.
/// Bounds are inclusive.
struct HsvRange {
  double h_min = 0.0, h_max = 360.0;
  double s_min = 0.0, s_max = 1.0;
  double v_min = 0.0, v_max = 1.0;

  void validate() const;
  bool contains(double h, double s, double v) const noexcept;
};

struct Hsv {
  double h = 0.0;  // [0, 360), 0 when achromatic
  double s = 0.0;
  double v = 0.0;
};

/// P5 (1 channel) or P6 (3 channels), maxval 255.
Image read_pnm(const std::filesystem::path& path);
void write_pnm(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pnm(const Image& image);
Image decode_pnm(const std::vector<std::uint8_t>& bytes);

/// Masks as P5 with samples {0, 255}; reading treats non-zero as set.
void write_mask_pgm(const BitMask& mask, const std::filesystem::path& path);
BitMask read_mask_pgm(const std::filesystem::path& path);

/// Greyscale closing (dilation then erosion) per channel with a square
/// window clipped at the border. Throws ValidationError("even-window").
Image morphological_close(const Image& image, std::uint32_t window);
BitMask morphological_close(const BitMask& mask, std::uint32_t window);

/// Uniform per-channel buckets: floor(v*levels/256) mapped to the bucket
/// midpoint round((b + 0.5)*256/levels - 0.5).
Image quantize_colors(const Image& image, std::uint32_t levels = 8);
std::uint8_t quantize_value(std::uint8_t value, std::uint32_t levels);

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// Throws ValidationError("channels") for single-channel input.
BitMask threshold_hsv(const Image& image, const HsvRange& range);

struct Components {
  std::vector<std::uint32_t> labels;  // 0 = background, else 1..N in scan order
  std::vector<std::size_t> sizes;     // sizes[k-1] is the size of component k
  std::size_t count() const noexcept { return sizes.size(); }
};

Components connected_components(const BitMask& mask, int connectivity = 8);

/// Sets every pixel not 4-reachable from the border through background.
BitMask fill_holes(const BitMask& mask);

/// Drops 8-connected components smaller than `min_area`.
BitMask remove_small_components(const BitMask& mask, std::size_t min_area);

/// Moore-neighbour trace of the outer boundary of the component containing
/// the first set pixel in scan order, clockwise (in image coordinates) from
/// that pixel. Empty for an empty mask.
std::vector<std::pair<std::uint32_t, std::uint32_t>> trace_outer_contour(const BitMask& mask);

/// Pixels whose label differs from a 4-neighbour or that touch the image
/// border, restricted to non-zero labels.
BitMask label_boundaries(const std::vector<std::uint16_t>& labels, std::uint32_t width, std::uint32_t height);

}  // namespace partfuse
