#include "json_config.hpp"

#include "partfuse/error.hpp"

namespace partfuse::detail {

PmfParams pmf_from_json(const nlohmann::json& j, PmfParams p) {
  p.cell_size = j.value("cell_size", p.cell_size);
  p.initial_window = j.value("initial_window", p.initial_window);
  p.max_window = j.value("max_window", p.max_window);
  p.slope = j.value("slope", p.slope);
  p.initial_height_threshold = j.value("initial_height_threshold", p.initial_height_threshold);
  p.max_height_threshold = j.value("max_height_threshold", p.max_height_threshold);
  return p;
}

nlohmann::json pmf_to_json(const PmfParams& p) {
  return {{"cell_size", p.cell_size},
          {"initial_window", p.initial_window},
          {"max_window", p.max_window},
          {"slope", p.slope},
          {"initial_height_threshold", p.initial_height_threshold},
          {"max_height_threshold", p.max_height_threshold}};
}

HsvRange hsv_from_json(const nlohmann::json& j) {
  HsvRange r;
  r.h_min = j.value("h_min", r.h_min);
  r.h_max = j.value("h_max", r.h_max);
  r.s_min = j.value("s_min", r.s_min);
  r.s_max = j.value("s_max", r.s_max);
  r.v_min = j.value("v_min", r.v_min);
  r.v_max = j.value("v_max", r.v_max);
  r.validate();
  return r;
}

nlohmann::json hsv_to_json(const HsvRange& r) {
  return {{"h_min", r.h_min}, {"h_max", r.h_max}, {"s_min", r.s_min},
          {"s_max", r.s_max}, {"v_min", r.v_min}, {"v_max", r.v_max}};
}

ClassId semantic_ref(const nlohmann::json& j, const ClassTaxonomy& taxonomy) {
  if (j.is_string()) {
    if (auto id = taxonomy.semantic_id_by_name(j.get<std::string>())) return *id;
    throw ValidationError("unknown-class", "unknown semantic class '" + j.get<std::string>() + "'");
  }
  const auto id = j.get<ClassId>();
  if (id != 0 && taxonomy.find_semantic(id) == nullptr) {
    throw ValidationError("unknown-class", "unknown semantic class id " + std::to_string(id));
  }
  return id;
}

PartId part_ref(const nlohmann::json& j, const ClassTaxonomy& taxonomy) {
  if (j.is_string()) {
    for (const auto& p : taxonomy.part_classes()) {
      if (p.name == j.get<std::string>()) return p.id;
    }
    throw ValidationError("unknown-part", "unknown part class '" + j.get<std::string>() + "'");
  }
  const auto id = j.get<PartId>();
  if (id != 0 && taxonomy.find_part(id) == nullptr) {
    throw ValidationError("unknown-part", "unknown part id " + std::to_string(id));
  }
  return id;
}

std::vector<PartColorRule> rules_from_json(const nlohmann::json& j, const ClassTaxonomy& taxonomy) {
  std::vector<PartColorRule> rules;
  for (const auto& entry : j) {
    PartColorRule rule;
    rule.part_id = part_ref(entry.at("part"), taxonomy);
    rule.priority = entry.value("priority", 0);
    rule.range = hsv_from_json(entry);
    rules.push_back(rule);
  }
  return rules;
}

nlohmann::json rules_to_json(const std::vector<PartColorRule>& rules) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rules) {
    auto entry = hsv_to_json(r.range);
    entry["part"] = r.part_id;
    entry["priority"] = r.priority;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace partfuse::detail
