#include "partfuse/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "io_util.hpp"
#include "partfuse/error.hpp"

namespace partfuse {

std::size_t BitMask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace {

void require_same(const BitMask& a, const BitMask& b) {
  if (a.width != b.width || a.height != b.height) throw ValidationError("dimension-mismatch", "mask sizes differ");
}

void require_odd(std::uint32_t window) {
  if (window == 0 || window % 2 == 0) {
    throw ValidationError("even-window", "closing window must be odd and >= 1, got " + std::to_string(window));
  }
}

/// Separable running max/min over a square window clipped at the border,
/// on one plane of a strided buffer.
template <typename T, typename Pick>
void filter_plane(std::vector<T>& data, std::uint32_t width, std::uint32_t height, std::uint32_t stride,
                  std::uint32_t offset, std::uint32_t radius, Pick pick) {
  std::vector<T> tmp(static_cast<std::size_t>(width) * height);
  auto src = [&](std::size_t x, std::size_t y) -> T& { return data[(y * width + x) * stride + offset]; };
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t x0 = x >= radius ? x - radius : 0, x1 = std::min<std::size_t>(width - 1, x + radius);
      T v = src(x0, y);
      for (auto k = x0 + 1; k <= x1; ++k) v = pick(v, src(k, y));
      tmp[y * width + x] = v;
    }
  }
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t y0 = y >= radius ? y - radius : 0, y1 = std::min<std::size_t>(height - 1, y + radius);
    for (std::size_t x = 0; x < width; ++x) {
      T v = tmp[y0 * width + x];
      for (auto k = y0 + 1; k <= y1; ++k) v = pick(v, tmp[k * width + x]);
      src(x, y) = v;
    }
  }
}

template <typename T>
void close_plane(std::vector<T>& data, std::uint32_t width, std::uint32_t height, std::uint32_t stride,
                 std::uint32_t offset, std::uint32_t window) {
  if (window == 1 || width == 0 || height == 0) return;
  const std::uint32_t radius = window / 2;
  filter_plane(data, width, height, stride, offset, radius, [](T a, T b) { return std::max(a, b); });
  filter_plane(data, width, height, stride, offset, radius, [](T a, T b) { return std::min(a, b); });
}

}  // namespace

BitMask mask_and(const BitMask& a, const BitMask& b) {
  require_same(a, b);
  BitMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.bits[i] = a.bits[i] && b.bits[i];
  return out;
}

BitMask mask_or(const BitMask& a, const BitMask& b) {
  require_same(a, b);
  BitMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.bits[i] = a.bits[i] || b.bits[i];
  return out;
}

BitMask mask_not(const BitMask& a) {
  BitMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.bits[i] = !a.bits[i];
  return out;
}

double mask_iou(const BitMask& a, const BitMask& b) {
  require_same(a, b);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.bits[i] && b.bits[i];
    uni += a.bits[i] || b.bits[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void HsvRange::validate() const {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(h_min >= 0.0 && h_min < 360.0 && h_max >= 0.0 && h_max <= 360.0)) {
    throw ValidationError("hsv-range", "hue bounds must lie in [0, 360]");
  }
  if (!in01(s_min) || !in01(s_max) || !in01(v_min) || !in01(v_max) || s_min > s_max || v_min > v_max) {
    throw ValidationError("hsv-range", "saturation/value bounds must be ordered within [0, 1]");
  }
}

bool HsvRange::contains(double h, double s, double v) const noexcept {
  if (s < s_min || s > s_max || v < v_min || v > v_max) return false;
  if (h_min <= h_max) return h >= h_min && h <= h_max;
  return h >= h_min || h <= h_max;
}

std::vector<std::uint8_t> encode_pnm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ValidationError("channels", "PNM images need 1 or 3 channels");
  }
  const auto header = detail::pnm_header(image.channels == 1 ? '5' : '6', image.width, image.height, 255);
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.samples.begin(), image.samples.end());
  return bytes;
}

Image decode_pnm(const std::vector<std::uint8_t>& bytes) {
  const auto h = detail::parse_pnm_header(bytes);
  if (h.maxval != 255) throw ValidationError("bad-maxval", "maxval must be 255, got " + std::to_string(h.maxval));
  Image image(h.width, h.height, h.kind == '5' ? 1 : 3);
  if (bytes.size() - h.data_offset < image.samples.size()) throw ValidationError("truncated", "PNM payload truncated");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), image.samples.size(), image.samples.begin());
  return image;
}

Image read_pnm(const std::filesystem::path& path) {
  try {
    return decode_pnm(detail::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(e.code(), path.string() + ": " + e.what());
  }
}

void write_pnm(const Image& image, const std::filesystem::path& path) {
  detail::write_file(path, encode_pnm(image));
}

void write_mask_pgm(const BitMask& mask, const std::filesystem::path& path) {
  Image img(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.samples[i] = mask.bits[i] ? 255 : 0;
  write_pnm(img, path);
}

BitMask read_mask_pgm(const std::filesystem::path& path) {
  const auto img = read_pnm(path);
  if (img.channels != 1) throw ValidationError("channels", path.string() + ": mask must be P5");
  BitMask mask(img.width, img.height);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.bits[i] = img.samples[i] != 0;
  return mask;
}

Image morphological_close(const Image& image, std::uint32_t window) {
  require_odd(window);
  Image out = image;
  for (std::uint32_t c = 0; c < image.channels; ++c) {
    close_plane(out.samples, out.width, out.height, out.channels, c, window);
  }
  return out;
}

BitMask morphological_close(const BitMask& mask, std::uint32_t window) {
  require_odd(window);
  BitMask out = mask;
  close_plane(out.bits, out.width, out.height, 1, 0, window);
  return out;
}

std::uint8_t quantize_value(std::uint8_t value, std::uint32_t levels) {
  const std::uint32_t bucket = static_cast<std::uint32_t>(value) * levels / 256;
  const double rep = std::round((bucket + 0.5) * 256.0 / levels - 0.5);
  return static_cast<std::uint8_t>(std::clamp(rep, 0.0, 255.0));
}

Image quantize_colors(const Image& image, std::uint32_t levels) {
  if (levels < 1 || levels > 256) throw ValidationError("levels", "quantization levels must lie in [1, 256]");
  std::array<std::uint8_t, 256> table{};
  for (std::uint32_t v = 0; v < 256; ++v) table[v] = quantize_value(static_cast<std::uint8_t>(v), levels);
  Image out = image;
  for (auto& s : out.samples) s = table[s];
  return out;
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) noexcept {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta == 0.0) return out;
  double h;
  if (mx == r) {
    h = 60.0 * (g - b) / delta;
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  out.h = h >= 360.0 ? h - 360.0 : h;
  return out;
}

BitMask threshold_hsv(const Image& image, const HsvRange& range) {
  if (image.channels != 3) throw ValidationError("channels", "HSV thresholding needs a 3-channel image");
  range.validate();
  BitMask mask(image.width, image.height);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const auto* p = image.pixel(i);
    const auto hsv = rgb_to_hsv(p[0], p[1], p[2]);
    mask.bits[i] = range.contains(hsv.h, hsv.s, hsv.v);
  }
  return mask;
}

Components connected_components(const BitMask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) throw ValidationError("connectivity", "connectivity must be 4 or 8");
  Components out;
  out.labels.assign(mask.size(), 0);
  const int w = static_cast<int>(mask.width), h = static_cast<int>(mask.height);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.test(start) || out.labels[start] != 0) continue;
    const auto label = static_cast<std::uint32_t>(out.sizes.size() + 1);
    std::size_t size = 0;
    out.labels[start] = label;
    queue.push_back(start);
    while (!queue.empty()) {
      const auto cur = queue.front();
      queue.pop_front();
      ++size;
      const int x = static_cast<int>(cur % mask.width), y = static_cast<int>(cur / mask.width);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) continue;
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const auto ni = static_cast<std::size_t>(ny) * mask.width + static_cast<std::size_t>(nx);
          if (mask.test(ni) && out.labels[ni] == 0) {
            out.labels[ni] = label;
            queue.push_back(ni);
          }
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

BitMask fill_holes(const BitMask& mask) {
  const std::uint32_t w = mask.width, h = mask.height;
  std::vector<std::uint8_t> outside(mask.size(), 0);
  std::deque<std::size_t> queue;
  auto seed = [&](std::uint32_t x, std::uint32_t y) {
    const auto i = static_cast<std::size_t>(y) * w + x;
    if (!mask.test(i) && !outside[i]) {
      outside[i] = 1;
      queue.push_back(i);
    }
  };
  for (std::uint32_t x = 0; x < w; ++x) {
    seed(x, 0);
    if (h > 1) seed(x, h - 1);
  }
  for (std::uint32_t y = 0; y < h; ++y) {
    seed(0, y);
    if (w > 1) seed(w - 1, y);
  }
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    const auto x = static_cast<std::uint32_t>(cur % w), y = static_cast<std::uint32_t>(cur / w);
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  BitMask out(w, h);
  for (std::size_t i = 0; i < mask.size(); ++i) out.bits[i] = !outside[i];
  return out;
}

BitMask remove_small_components(const BitMask& mask, std::size_t min_area) {
  const auto cc = connected_components(mask, 8);
  BitMask out(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out.bits[i] = cc.labels[i] != 0 && cc.sizes[cc.labels[i] - 1] >= min_area;
  }
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> trace_outer_contour(const BitMask& mask) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> contour;
  std::size_t start = 0;
  while (start < mask.size() && !mask.test(start)) ++start;
  if (start == mask.size()) return contour;

  // Clockwise neighbourhood in image coordinates (y down), starting west.
  static constexpr int dx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr int dy[8] = {0, -1, -1, -1, 0, 1, 1, 1};
  const int w = static_cast<int>(mask.width), h = static_cast<int>(mask.height);
  auto set = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && mask.test(static_cast<std::size_t>(y) * mask.width + x);
  };

  const int sx = static_cast<int>(start % mask.width), sy = static_cast<int>(start / mask.width);
  // Searches clockwise from `from`; returns the direction moved, or -1 when isolated.
  auto advance = [&](int& x, int& y, int& from) {
    for (int k = 0; k < 8; ++k) {
      const int d = (from + k) % 8;
      if (set(x + dx[d], y + dy[d])) {
        x += dx[d];
        y += dy[d];
        // Resume at the last background pixel examined, seen from the new position.
        from = d % 2 == 0 ? (d + 6) % 8 : (d + 5) % 8;
        return d;
      }
    }
    return -1;
  };

  contour.emplace_back(sx, sy);
  int x = sx, y = sy, from = 0;  // everything west of and above the start pixel is background
  const int first_move = advance(x, y, from);
  if (first_move < 0) return contour;
  const std::size_t limit = 8 * mask.size() + 8;
  for (std::size_t steps = 0; steps < limit; ++steps) {
    if (x == sx && y == sy) {
      // Jacob's criterion: stop once the start pixel is left the same way again.
      int px = x, py = y, pfrom = from;
      if (advance(px, py, pfrom) == first_move) break;
    } else {
      contour.emplace_back(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
    }
    advance(x, y, from);
  }
  return contour;
}

BitMask label_boundaries(const std::vector<std::uint16_t>& labels, std::uint32_t width, std::uint32_t height) {
  BitMask out(width, height);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      const auto i = static_cast<std::size_t>(y) * width + x;
      const auto l = labels[i];
      if (l == 0) continue;
      const bool edge = x == 0 || y == 0 || x + 1 == width || y + 1 == height || labels[i - 1] != l ||
                        labels[i + 1] != l || labels[i - width] != l || labels[i + width] != l;
      out.bits[i] = edge;
    }
  }
  return out;
}

}  // namespace partfuse
