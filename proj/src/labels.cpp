#include "partfuse/labels.hpp"

#include <map>
#include <unordered_map>

#include "io_util.hpp"
#include "partfuse/error.hpp"

namespace partfuse {

bool LabelTriple::same_dims() const noexcept {
  auto same = [this](const LabelGrid& g) {
    return g.width == semantic.width && g.height == semantic.height && g.size() == semantic.size();
  };
  return same(instance) && same(part);
}

LabelGrid read_label_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::PnmHeader h;
  try {
    h = detail::parse_pnm_header(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(e.code(), path.string() + ": " + e.what());
  }
  if (h.kind != '5') throw ValidationError("bad-magic", path.string() + ": label map must be P5");
  if (h.maxval != 65535) {
    throw ValidationError("bad-maxval", path.string() + ": label map maxval must be 65535, got " +
                                            std::to_string(h.maxval));
  }
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < 2 * n) throw ValidationError("truncated", path.string() + ": truncated");

  LabelGrid grid(h.width, h.height);
  const std::uint8_t* p = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < n; ++i) {
    grid.ids[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return grid;
}

void write_label_pgm(const LabelGrid& grid, const std::filesystem::path& path) {
  const auto header = detail::pnm_header('5', grid.width, grid.height, 65535);
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + 2 * grid.size());
  for (auto id : grid.ids) {
    bytes.push_back(static_cast<std::uint8_t>(id >> 8));
    bytes.push_back(static_cast<std::uint8_t>(id & 0xff));
  }
  detail::write_file(path, bytes);
}

std::filesystem::path triple_component_path(const std::filesystem::path& stem, const char* component) {
  auto p = stem;
  p += std::string(".") + component + ".pgm";
  return p;
}

LabelTriple read_label_triple(const std::filesystem::path& stem) {
  LabelTriple t;
  t.semantic = read_label_pgm(triple_component_path(stem, "sem"));
  t.instance = read_label_pgm(triple_component_path(stem, "inst"));
  t.part = read_label_pgm(triple_component_path(stem, "part"));
  if (!t.same_dims()) {
    throw ValidationError("dimension-mismatch", stem.string() + ": label maps differ in dimensions");
  }
  return t;
}

void write_label_triple(const LabelTriple& triple, const std::filesystem::path& stem) {
  if (!triple.same_dims()) throw ValidationError("dimension-mismatch", "label maps differ in dimensions");
  write_label_pgm(triple.semantic, triple_component_path(stem, "sem"));
  write_label_pgm(triple.instance, triple_component_path(stem, "inst"));
  write_label_pgm(triple.part, triple_component_path(stem, "part"));
}

void validate_triple(const LabelTriple& triple, const ClassTaxonomy& taxonomy) {
  if (!triple.same_dims()) throw ValidationError("dimension-mismatch", "label maps differ in dimensions");
  std::unordered_map<InstanceId, ClassId> owner;
  for (std::size_t i = 0; i < triple.pixel_count(); ++i) {
    const ClassId c = triple.semantic.ids[i];
    const InstanceId inst = triple.instance.ids[i];
    const PartId p = triple.part.ids[i];
    if (c != kVoid && taxonomy.find_semantic(c) == nullptr) {
      throw ValidationError("unknown-class", "unknown semantic id " + std::to_string(c));
    }
    if (p != kVoid && taxonomy.find_part(p) == nullptr) {
      throw ValidationError("unknown-part", "unknown part id " + std::to_string(p));
    }
    if (inst == 0) continue;
    if (!taxonomy.is_thing(c)) {
      throw ValidationError("instance-on-stuff",
                            "instance " + std::to_string(inst) + " on non-thing class " + std::to_string(c));
    }
    auto [it, inserted] = owner.emplace(inst, c);
    if (!inserted && it->second != c) {
      throw ValidationError("instance-class-conflict",
                            "instance " + std::to_string(inst) + " spans several semantic classes");
    }
  }
}

std::vector<PanopticSegment> derive_segments(const LabelTriple& triple, const ClassTaxonomy& taxonomy) {
  std::map<std::pair<ClassId, InstanceId>, std::vector<std::uint32_t>> groups;
  for (std::size_t i = 0; i < triple.pixel_count(); ++i) {
    const ClassId c = triple.semantic.ids[i];
    if (c == kVoid) continue;
    const InstanceId inst = taxonomy.is_thing(c) ? triple.instance.ids[i] : 0;
    groups[{c, inst}].push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<PanopticSegment> out;
  out.reserve(groups.size());
  for (auto& [key, pixels] : groups) {
    out.push_back(PanopticSegment{key.first, key.second, std::move(pixels)});
  }
  return out;
}

}  // namespace partfuse
