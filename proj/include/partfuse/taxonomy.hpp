#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace partfuse {

using ClassId = std::uint16_t;
using PartId = std::uint16_t;
using InstanceId = std::uint16_t;

inline constexpr std::uint16_t kVoid = 0;

struct SemanticClass {
  ClassId id = 0;
  std::string name;
  bool is_thing = false;
};

struct PartClass {
  PartId id = 0;
  std::string name;
  ClassId parent_semantic_id = 0;
};

/// Semantic and part vocabularies. Ids live in two disjoint spaces, both
/// reserving 0 for void. Immutable once built; construct through
/// validate_taxonomy().
class ClassTaxonomy {
 public:
  const std::vector<SemanticClass>& semantic_classes() const noexcept { return semantic_; }
  const std::vector<PartClass>& part_classes() const noexcept { return parts_; }

  const SemanticClass* find_semantic(ClassId id) const noexcept;
  const PartClass* find_part(PartId id) const noexcept;
  std::optional<ClassId> semantic_id_by_name(std::string_view name) const noexcept;

  bool is_thing(ClassId id) const noexcept;
  bool has_parts(ClassId id) const noexcept { return !parts_of(id).empty(); }

  /// Part ids whose parent is `id`, in file order. Empty for unknown ids.
  std::span<const PartId> parts_of(ClassId id) const noexcept;

  /// Parent semantic id of a part, or 0 for void/unknown parts.
  ClassId parent_of(PartId id) const noexcept;

 private:
  friend ClassTaxonomy validate_taxonomy(const nlohmann::json& raw);

  std::vector<SemanticClass> semantic_;
  std::vector<PartClass> parts_;
  std::vector<std::vector<PartId>> parts_by_semantic_;  // parallel to semantic_
};

/// Checks and builds a taxonomy from its JSON description.
/// Throws ValidationError with codes: empty-semantic, zero-id, duplicate-id,
/// unknown-parent, malformed.
ClassTaxonomy validate_taxonomy(const nlohmann::json& raw);

/// Reads and validates a taxonomy file. A missing or unparsable file is
/// reported as ValidationError (the taxonomy is configuration).
ClassTaxonomy load_taxonomy(const std::filesystem::path& path);

nlohmann::json taxonomy_to_json(const ClassTaxonomy& taxonomy);

}  // namespace partfuse
