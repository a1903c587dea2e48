#include "partfuse/overlay.hpp"

#include <cmath>
#include <set>

#include "partfuse/error.hpp"

namespace partfuse {

namespace {

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const double m = v - c;
  auto to8 = [m](double t) { return static_cast<std::uint8_t>(std::lround((t + m) * 255.0)); };
  return {to8(r), to8(g), to8(b)};
}

void put(Image& img, std::uint32_t x, std::uint32_t y, const Rgb& c) {
  auto* p = img.pixel(static_cast<std::size_t>(y) * img.width + x);
  p[0] = c[0], p[1] = c[1], p[2] = c[2];
}

}  // namespace

void OverlaySpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("overlay-spec", "alpha must lie in [0,1]");
  std::set<Rgb> seen;
  for (const auto& [id, c] : class_colors) {
    if (!seen.insert(c).second) {
      throw ValidationError("overlay-spec", "class " + std::to_string(id) + " reuses another class colour");
    }
  }
}

OverlaySpec default_overlay_spec(const ClassTaxonomy& taxonomy) {
  OverlaySpec spec;
  std::size_t k = 0;
  for (const auto& c : taxonomy.semantic_classes()) {
    const double hue = std::fmod(static_cast<double>(k) * 137.50776405003785, 360.0);
    const double value = 0.95 - 0.25 * static_cast<double>((k / 8) % 3);
    spec.class_colors[c.id] = hsv_to_rgb(hue, 0.8, value);
    ++k;
  }
  return spec;
}

std::vector<InstanceBox> instance_boxes(const LabelTriple& triple) {
  std::map<InstanceId, InstanceBox> boxes;
  for (std::uint32_t y = 0; y < triple.height(); ++y) {
    for (std::uint32_t x = 0; x < triple.width(); ++x) {
      const InstanceId id = triple.instance.at(x, y);
      if (id == 0) continue;
      auto [it, fresh] = boxes.try_emplace(id, InstanceBox{id, triple.semantic.at(x, y), x, y, x, y});
      if (fresh) continue;
      auto& b = it->second;
      b.x_min = std::min(b.x_min, x);
      b.x_max = std::max(b.x_max, x);
      b.y_max = y;
    }
  }
  std::vector<InstanceBox> out;
  for (const auto& [id, b] : boxes) out.push_back(b);
  return out;
}

Image render_overlay(const Image& image, const LabelTriple& triple, const OverlaySpec& spec) {
  spec.validate();
  if (!triple.same_dims() || image.width != triple.width() || image.height != triple.height()) {
    throw ValidationError("dimension-mismatch", "image and labels differ in size");
  }
  if (image.channels != 1 && image.channels != 3) throw ValidationError("channels", "image must be grey or RGB");

  Image out(image.width, image.height, 3);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const auto* src = image.pixel(i);
    auto* dst = out.pixel(i);
    for (int c = 0; c < 3; ++c) dst[c] = image.channels == 1 ? src[0] : src[c];
  }

  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const auto it = spec.class_colors.find(triple.semantic.ids[i]);
    if (it == spec.class_colors.end()) continue;
    auto* p = out.pixel(i);
    for (int c = 0; c < 3; ++c) {
      const double blended = (1.0 - spec.alpha) * p[c] + spec.alpha * it->second[c];
      p[c] = static_cast<std::uint8_t>(std::lround(blended));
    }
  }

  const auto edges = label_boundaries(triple.part.ids, triple.width(), triple.height());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges.test(i)) std::fill_n(out.pixel(i), 3, std::uint8_t{255});
  }

  if (spec.draw_boxes) {
    for (const auto& b : instance_boxes(triple)) {
      const auto it = spec.class_colors.find(b.class_id);
      const Rgb color = it != spec.class_colors.end() ? it->second : Rgb{255, 255, 255};
      for (auto x = b.x_min; x <= b.x_max; ++x) {
        put(out, x, b.y_min, color);
        put(out, x, b.y_max, color);
      }
      for (auto y = b.y_min; y <= b.y_max; ++y) {
        put(out, b.x_min, y, color);
        put(out, b.x_max, y, color);
      }
    }
  }
  return out;
}

}  // namespace partfuse
