#pragma once

#include <string_view>
#include <vector>

#include "partfuse/labels.hpp"
#include "partfuse/logits.hpp"
#include "partfuse/taxonomy.hpp"

namespace partfuse {

/// Panoptic-stage knobs. Defaults reconstruct the usual greedy panoptic
/// merge: keep proposals with confidence >= 0.5, drop a proposal when half of
/// its footprint is already claimed, drop instances smaller than 64 px.
struct FusionParams {
  double confidence_min = 0.5;
  double overlap_discard_ratio = 0.5;
  std::size_t min_instance_area = 64;
  double mask_logit_threshold = 0.0;

  /// Throws ValidationError("fusion-params") when a field is out of range.
  void validate() const;
};

enum class FusionStrategy {
  part_panoptic,  // agreement-function fusion of part, semantic and instance logits
  none,           // raw heads, conflicts kept
  consensus,      // conflicting pixels voided in all three channels
  top_down,       // conflicting pixels lose only their part label
};

/// Accepts "partpanoptic", "none", "consensus", "topdown".
FusionStrategy parse_strategy(std::string_view name);
std::string_view strategy_name(FusionStrategy strategy);

double sigmoid(double x) noexcept;

/// 2*sigmoid(x) - 1, the logistic sigmoid stretched to (-1, 1).
double sigmoid_rescaled(double x) noexcept;

/// Part/semantic agreement: (s'(a) + s'(b)) * (a + b) with s' the rescaled
/// sigmoid. Large when both logits are confidently positive, zero when they
/// cancel.
double agreement_part_sem(double a, double b) noexcept;

/// Semantic/instance agreement: (sigmoid(a) + sigmoid(b)) * (a + b).
double agreement_sem_inst(double a, double b) noexcept;

/// Semantic logits enhanced with part evidence. Channel layout follows
/// stack.semantic. Classes without parts pass through unchanged.
ChannelPlanes semantic_wise_fuse(const LogitStack& stack, const ClassTaxonomy& taxonomy);

struct PartFusion {
  ChannelPlanes enhanced_part;  // channel layout follows stack.part
  LabelGrid part_map;
};

/// Part logits enhanced with their parent's semantic logit, and the
/// per-pixel argmax (ties to the lowest part id). Throws
/// ValidationError("no-parts") when the taxonomy has no part classes.
PartFusion part_wise_fuse(const LogitStack& stack, const ClassTaxonomy& taxonomy);

struct PanopticMaps {
  LabelGrid semantic;
  LabelGrid instance;
};

/// Greedy panoptic merge of semantic logits (enhanced or raw) with instance
/// proposals. Instances are numbered 1..N in descending confidence order.
PanopticMaps panoptic_fuse(const ChannelPlanes& semantic_logits, const std::vector<InstanceProposal>& proposals,
                           const ClassTaxonomy& taxonomy, const FusionParams& params);

/// The full part-panoptic pipeline. With a part-less taxonomy the part map is
/// all void.
LabelTriple fuse_part_panoptic(const LogitStack& stack, const ClassTaxonomy& taxonomy, const FusionParams& params);

/// Ablation strategies (none / consensus / top_down). part_panoptic is
/// forwarded to fuse_part_panoptic().
LabelTriple fuse_baseline(const LogitStack& stack, const ClassTaxonomy& taxonomy, const FusionParams& params,
                          FusionStrategy strategy);

/// Dispatches on strategy.
LabelTriple fuse(const LogitStack& stack, const ClassTaxonomy& taxonomy, const FusionParams& params,
                 FusionStrategy strategy);

/// True when the pixel's part belongs to a different semantic class than the
/// pixel's semantic label. Void on either side never conflicts.
bool labels_conflict(ClassId semantic, PartId part, const ClassTaxonomy& taxonomy) noexcept;

}  // namespace partfuse
