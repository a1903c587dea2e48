#include "partfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "partfuse/error.hpp"

namespace partfuse {

void FusionParams::validate() const {
  if (!(confidence_min >= 0.0 && confidence_min <= 1.0)) {
    throw ValidationError("fusion-params", "confidence_min must lie in [0, 1]");
  }
  if (!(overlap_discard_ratio > 0.0 && overlap_discard_ratio <= 1.0)) {
    throw ValidationError("fusion-params", "overlap_discard_ratio must lie in (0, 1]");
  }
  if (!std::isfinite(mask_logit_threshold)) {
    throw ValidationError("fusion-params", "mask_logit_threshold must be finite");
  }
}

FusionStrategy parse_strategy(std::string_view name) {
  if (name == "partpanoptic") return FusionStrategy::part_panoptic;
  if (name == "none") return FusionStrategy::none;
  if (name == "consensus") return FusionStrategy::consensus;
  if (name == "topdown") return FusionStrategy::top_down;
  throw ValidationError("unknown-strategy", "unknown fusion strategy '" + std::string(name) + "'");
}

std::string_view strategy_name(FusionStrategy strategy) {
  switch (strategy) {
    case FusionStrategy::part_panoptic:
      return "partpanoptic";
    case FusionStrategy::none:
      return "none";
    case FusionStrategy::consensus:
      return "consensus";
    case FusionStrategy::top_down:
      return "topdown";
  }
  return "?";
}

double sigmoid(double x) noexcept {
  // Evaluated on the side that cannot overflow.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_rescaled(double x) noexcept { return std::tanh(0.5 * x); }

double agreement_part_sem(double a, double b) noexcept {
  return (sigmoid_rescaled(a) + sigmoid_rescaled(b)) * (a + b);
}

double agreement_sem_inst(double a, double b) noexcept { return (sigmoid(a) + sigmoid(b)) * (a + b); }

bool labels_conflict(ClassId semantic, PartId part, const ClassTaxonomy& taxonomy) noexcept {
  if (semantic == kVoid || part == kVoid) return false;
  return taxonomy.parent_of(part) != semantic;
}

ChannelPlanes semantic_wise_fuse(const LogitStack& stack, const ClassTaxonomy& taxonomy) {
  ChannelPlanes out = stack.semantic;
  const std::size_t n = stack.pixel_count();
  std::vector<double> part_max(n);
  for (std::size_t ch = 0; ch < out.channels(); ++ch) {
    const auto parts = taxonomy.parts_of(out.channel_ids[ch]);
    if (parts.empty()) continue;
    std::fill(part_max.begin(), part_max.end(), -std::numeric_limits<double>::infinity());
    for (PartId p : parts) {
      const auto plane = stack.part.plane(stack.part.channel_of(p));
      for (std::size_t i = 0; i < n; ++i) part_max[i] = std::max(part_max[i], plane[i]);
    }
    auto fused = out.plane(ch);
    const auto sem = stack.semantic.plane(ch);
    for (std::size_t i = 0; i < n; ++i) fused[i] = agreement_part_sem(part_max[i], sem[i]);
  }
  return out;
}

namespace {

/// Per-pixel argmax over channels; ties go to the lowest id.
LabelGrid argmax_lowest_id(const ChannelPlanes& planes) {
  LabelGrid out(planes.width, planes.height);
  std::vector<std::size_t> order(planes.channels());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return planes.channel_ids[a] < planes.channel_ids[b]; });
  const std::size_t n = planes.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::uint16_t best_id = kVoid;
    for (std::size_t ch : order) {
      const double v = planes.values[ch * n + i];
      if (best_id == kVoid || v > best) {
        best = v;
        best_id = planes.channel_ids[ch];
      }
    }
    out.ids[i] = best_id;
  }
  return out;
}

struct AcceptedInstance {
  ClassId class_id;
  std::vector<std::uint32_t> pixels;  // surviving footprint
  std::vector<double> fused;          // parallel to pixels
};

}  // namespace

PartFusion part_wise_fuse(const LogitStack& stack, const ClassTaxonomy& taxonomy) {
  if (taxonomy.part_classes().empty() || stack.part.channels() == 0) {
    throw ValidationError("no-parts", "part-wise fusion needs at least one part class");
  }
  PartFusion out{stack.part, {}};
  const std::size_t n = stack.pixel_count();
  for (std::size_t ch = 0; ch < out.enhanced_part.channels(); ++ch) {
    const ClassId parent = taxonomy.parent_of(out.enhanced_part.channel_ids[ch]);
    const auto sem = stack.semantic.plane(stack.semantic.channel_of(parent));
    const auto part = stack.part.plane(ch);
    auto fused = out.enhanced_part.plane(ch);
    for (std::size_t i = 0; i < n; ++i) fused[i] = agreement_part_sem(part[i], sem[i]);
  }
  out.part_map = argmax_lowest_id(out.enhanced_part);
  return out;
}

PanopticMaps panoptic_fuse(const ChannelPlanes& semantic_logits, const std::vector<InstanceProposal>& proposals,
                           const ClassTaxonomy& taxonomy, const FusionParams& params) {
  params.validate();
  const std::size_t n = semantic_logits.plane_size();

  // Best stuff class per pixel.
  std::vector<std::size_t> stuff_channels;
  for (const auto& c : taxonomy.semantic_classes()) {
    if (!c.is_thing) stuff_channels.push_back(semantic_logits.channel_of(c.id));
  }
  std::sort(stuff_channels.begin(), stuff_channels.end(), [&](std::size_t a, std::size_t b) {
    return semantic_logits.channel_ids[a] < semantic_logits.channel_ids[b];
  });
  std::vector<ClassId> stuff_class(n, kVoid);
  std::vector<double> stuff_value(n, -std::numeric_limits<double>::infinity());
  for (std::size_t ch : stuff_channels) {
    const auto plane = semantic_logits.plane(ch);
    for (std::size_t i = 0; i < n; ++i) {
      if (stuff_class[i] == kVoid || plane[i] > stuff_value[i]) {
        stuff_value[i] = plane[i];
        stuff_class[i] = semantic_logits.channel_ids[ch];
      }
    }
  }

  // Confidence filter, then descending confidence (stable on proposal index).
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < proposals.size(); ++k) {
    if (proposals[k].confidence >= params.confidence_min) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proposals[a].confidence > proposals[b].confidence; });

  // Greedy overlap suppression on binary footprints.
  std::vector<bool> claimed(n, false);
  std::vector<AcceptedInstance> accepted;
  std::vector<std::uint32_t> footprint;
  for (std::size_t k : order) {
    const auto& prop = proposals[k];
    footprint.clear();
    std::size_t overlap = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (prop.mask_logits[i] > params.mask_logit_threshold) {
        footprint.push_back(static_cast<std::uint32_t>(i));
        if (claimed[i]) ++overlap;
      }
    }
    if (footprint.empty()) continue;
    if (static_cast<double>(overlap) >= params.overlap_discard_ratio * static_cast<double>(footprint.size())) {
      continue;
    }
    AcceptedInstance inst{prop.class_id, {}, {}};
    const auto sem = semantic_logits.plane(semantic_logits.channel_of(prop.class_id));
    for (auto i : footprint) {
      if (claimed[i]) continue;
      claimed[i] = true;
      inst.pixels.push_back(i);
      inst.fused.push_back(agreement_sem_inst(prop.mask_logits[i], sem[i]));
    }
    accepted.push_back(std::move(inst));
  }

  // Footprints are now disjoint, so each pixel has at most one instance candidate.
  PanopticMaps out{LabelGrid(semantic_logits.width, semantic_logits.height),
                   LabelGrid(semantic_logits.width, semantic_logits.height)};
  out.semantic.ids.assign(stuff_class.begin(), stuff_class.end());

  auto instance_wins = [&](std::uint32_t i, double fused, ClassId cls) {
    if (stuff_class[i] == kVoid) return true;
    if (fused != stuff_value[i]) return fused > stuff_value[i];
    return cls < stuff_class[i];
  };

  std::vector<std::size_t> won(accepted.size(), 0);
  for (std::size_t a = 0; a < accepted.size(); ++a) {
    const auto& inst = accepted[a];
    for (std::size_t j = 0; j < inst.pixels.size(); ++j) {
      if (instance_wins(inst.pixels[j], inst.fused[j], inst.class_id)) ++won[a];
    }
  }

  // Small instances fall back to the stuff argmax; survivors renumbered 1..N.
  InstanceId next_id = 1;
  for (std::size_t a = 0; a < accepted.size(); ++a) {
    if (won[a] == 0 || won[a] < params.min_instance_area) continue;
    const auto& inst = accepted[a];
    const InstanceId id = next_id++;
    for (std::size_t j = 0; j < inst.pixels.size(); ++j) {
      const auto i = inst.pixels[j];
      if (instance_wins(i, inst.fused[j], inst.class_id)) {
        out.semantic.ids[i] = inst.class_id;
        out.instance.ids[i] = id;
      }
    }
  }
  return out;
}

LabelTriple fuse_part_panoptic(const LogitStack& stack, const ClassTaxonomy& taxonomy, const FusionParams& params) {
  validate_stack(stack, taxonomy);
  const auto enhanced = semantic_wise_fuse(stack, taxonomy);
  auto maps = panoptic_fuse(enhanced, stack.proposals, taxonomy, params);
  LabelTriple out;
  out.semantic = std::move(maps.semantic);
  out.instance = std::move(maps.instance);
  if (taxonomy.part_classes().empty()) {
    out.part = LabelGrid(stack.width, stack.height);
  } else {
    out.part = part_wise_fuse(stack, taxonomy).part_map;
  }
  return out;
}

LabelTriple fuse_baseline(const LogitStack& stack, const ClassTaxonomy& taxonomy, const FusionParams& params,
                          FusionStrategy strategy) {
  if (strategy == FusionStrategy::part_panoptic) return fuse_part_panoptic(stack, taxonomy, params);
  validate_stack(stack, taxonomy);

  auto maps = panoptic_fuse(stack.semantic, stack.proposals, taxonomy, params);
  LabelTriple out;
  out.semantic = std::move(maps.semantic);
  out.instance = std::move(maps.instance);
  out.part = stack.part.channels() == 0 ? LabelGrid(stack.width, stack.height) : argmax_lowest_id(stack.part);

  if (strategy == FusionStrategy::none) return out;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (!labels_conflict(out.semantic.ids[i], out.part.ids[i], taxonomy)) continue;
    out.part.ids[i] = kVoid;
    if (strategy == FusionStrategy::consensus) {
      out.semantic.ids[i] = kVoid;
      out.instance.ids[i] = 0;
    }
  }
  return out;
}

LabelTriple fuse(const LogitStack& stack, const ClassTaxonomy& taxonomy, const FusionParams& params,
                 FusionStrategy strategy) {
  return strategy == FusionStrategy::part_panoptic ? fuse_part_panoptic(stack, taxonomy, params)
                                                   : fuse_baseline(stack, taxonomy, params, strategy);
}

}  // namespace partfuse
