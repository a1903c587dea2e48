#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "partfuse/autolabel_rgbd.hpp"
#include "partfuse/imaging.hpp"
#include "partfuse/pointcloud.hpp"
#include "partfuse/taxonomy.hpp"

namespace partfuse::detail {

PmfParams pmf_from_json(const nlohmann::json& j, PmfParams defaults);
nlohmann::json pmf_to_json(const PmfParams& p);

HsvRange hsv_from_json(const nlohmann::json& j);
nlohmann::json hsv_to_json(const HsvRange& r);

/// Class reference by numeric id or by name.
ClassId semantic_ref(const nlohmann::json& j, const ClassTaxonomy& taxonomy);
PartId part_ref(const nlohmann::json& j, const ClassTaxonomy& taxonomy);

/// [{part, priority, h_min, h_max, s_min, s_max, v_min, v_max}]
std::vector<PartColorRule> rules_from_json(const nlohmann::json& j, const ClassTaxonomy& taxonomy);
nlohmann::json rules_to_json(const std::vector<PartColorRule>& rules);

}  // namespace partfuse::detail
