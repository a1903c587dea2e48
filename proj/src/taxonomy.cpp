#include "partfuse/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "partfuse/error.hpp"

namespace partfuse {

namespace {

std::uint16_t checked_id(const nlohmann::json& entry, const char* key, const char* what) {
  if (!entry.is_object() || !entry.contains(key) || !entry.at(key).is_number_integer()) {
    throw ValidationError("malformed", std::string(what) + " entry needs integer '" + key + "'");
  }
  const auto value = entry.at(key).get<std::int64_t>();
  if (value == 0) {
    throw ValidationError("zero-id", std::string(what) + " id 0 is reserved for void");
  }
  if (value < 0 || value > 65535) {
    throw ValidationError("malformed", std::string(what) + " id out of 16-bit range: " +
                                           std::to_string(value));
  }
  return static_cast<std::uint16_t>(value);
}

std::string checked_name(const nlohmann::json& entry, const char* what) {
  if (!entry.contains("name") || !entry.at("name").is_string()) {
    throw ValidationError("malformed", std::string(what) + " entry needs string 'name'");
  }
  return entry.at("name").get<std::string>();
}

}  // namespace

const SemanticClass* ClassTaxonomy::find_semantic(ClassId id) const noexcept {
  auto it = std::find_if(semantic_.begin(), semantic_.end(),
                         [id](const SemanticClass& c) { return c.id == id; });
  return it == semantic_.end() ? nullptr : &*it;
}

const PartClass* ClassTaxonomy::find_part(PartId id) const noexcept {
  auto it = std::find_if(parts_.begin(), parts_.end(),
                         [id](const PartClass& p) { return p.id == id; });
  return it == parts_.end() ? nullptr : &*it;
}

std::optional<ClassId> ClassTaxonomy::semantic_id_by_name(std::string_view name) const noexcept {
  for (const auto& c : semantic_) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

bool ClassTaxonomy::is_thing(ClassId id) const noexcept {
  const auto* c = find_semantic(id);
  return c != nullptr && c->is_thing;
}

std::span<const PartId> ClassTaxonomy::parts_of(ClassId id) const noexcept {
  for (std::size_t i = 0; i < semantic_.size(); ++i) {
    if (semantic_[i].id == id) return parts_by_semantic_[i];
  }
  return {};
}

ClassId ClassTaxonomy::parent_of(PartId id) const noexcept {
  const auto* p = find_part(id);
  return p == nullptr ? kVoid : p->parent_semantic_id;
}

ClassTaxonomy validate_taxonomy(const nlohmann::json& raw) {
  if (!raw.is_object()) throw ValidationError("malformed", "taxonomy must be a JSON object");
  if (!raw.contains("semantic_classes") || !raw.at("semantic_classes").is_array()) {
    throw ValidationError("malformed", "taxonomy needs array 'semantic_classes'");
  }
  const auto& sem = raw.at("semantic_classes");
  if (sem.empty()) throw ValidationError("empty-semantic", "taxonomy has no semantic classes");

  ClassTaxonomy tax;
  std::set<std::uint16_t> seen;
  for (const auto& entry : sem) {
    SemanticClass c;
    c.id = checked_id(entry, "id", "semantic class");
    c.name = checked_name(entry, "semantic class");
    if (!entry.contains("is_thing") || !entry.at("is_thing").is_boolean()) {
      throw ValidationError("malformed", "semantic class entry needs boolean 'is_thing'");
    }
    c.is_thing = entry.at("is_thing").get<bool>();
    if (!seen.insert(c.id).second) {
      throw ValidationError("duplicate-id", "duplicate semantic id " + std::to_string(c.id));
    }
    tax.semantic_.push_back(std::move(c));
  }

  seen.clear();
  tax.parts_by_semantic_.resize(tax.semantic_.size());
  if (raw.contains("part_classes")) {
    const auto& parts = raw.at("part_classes");
    if (!parts.is_array()) throw ValidationError("malformed", "'part_classes' must be an array");
    for (const auto& entry : parts) {
      PartClass p;
      p.id = checked_id(entry, "id", "part class");
      p.name = checked_name(entry, "part class");
      if (!entry.contains("parent_semantic_id") || !entry.at("parent_semantic_id").is_number_integer()) {
        throw ValidationError("malformed", "part class entry needs integer 'parent_semantic_id'");
      }
      const auto parent = entry.at("parent_semantic_id").get<std::int64_t>();
      if (!seen.insert(p.id).second) {
        throw ValidationError("duplicate-id", "duplicate part id " + std::to_string(p.id));
      }
      auto owner = std::find_if(tax.semantic_.begin(), tax.semantic_.end(),
                                [parent](const SemanticClass& c) { return c.id == parent; });
      if (owner == tax.semantic_.end()) {
        throw ValidationError("unknown-parent", "part '" + p.name + "' references unknown semantic id " +
                                                    std::to_string(parent));
      }
      p.parent_semantic_id = owner->id;
      tax.parts_by_semantic_[static_cast<std::size_t>(owner - tax.semantic_.begin())].push_back(p.id);
      tax.parts_.push_back(std::move(p));
    }
  }
  return tax;
}

ClassTaxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing-taxonomy", "cannot open taxonomy " + path.string());
  nlohmann::json raw;
  try {
    in >> raw;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed", "taxonomy " + path.string() + ": " + e.what());
  }
  return validate_taxonomy(raw);
}

nlohmann::json taxonomy_to_json(const ClassTaxonomy& taxonomy) {
  nlohmann::json out;
  out["semantic_classes"] = nlohmann::json::array();
  for (const auto& c : taxonomy.semantic_classes()) {
    out["semantic_classes"].push_back({{"id", c.id}, {"name", c.name}, {"is_thing", c.is_thing}});
  }
  out["part_classes"] = nlohmann::json::array();
  for (const auto& p : taxonomy.part_classes()) {
    out["part_classes"].push_back(
        {{"id", p.id}, {"name", p.name}, {"parent_semantic_id", p.parent_semantic_id}});
  }
  return out;
}

}  // namespace partfuse
