#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partfuse/labels.hpp"
#include "partfuse/taxonomy.hpp"

namespace partfuse {

struct TruePositive {
  std::size_t pred_segment = 0;  // index into MatchResult::pred_segments
  std::size_t gt_segment = 0;    // index into MatchResult::gt_segments
  double iou = 0.0;
  double part_iou = 0.0;  // equals iou for classes without parts
};

struct ClassMatch {
  std::vector<TruePositive> tp;
  std::vector<std::size_t> fp;  // pred segment indices
  std::vector<std::size_t> fn;  // gt segment indices
  bool in_gt = false;
  bool in_pred = false;  // counts only pred segments that were not discarded as void
};

/// Segment matching of one image, keyed by semantic class id. Every
/// taxonomy class has an entry.
struct MatchResult {
  std::vector<PanopticSegment> pred_segments;
  std::vector<PanopticSegment> gt_segments;
  std::vector<std::size_t> discarded_pred;  // mostly on gt-void pixels
  std::map<ClassId, ClassMatch> classes;
};

/// Pairs same-class segments with IoU > 0.5. Gt-void pixels are left out of
/// every intersection and union; pred segments lying more than half on
/// gt-void are dropped before matching. Throws
/// ValidationError("dimension-mismatch").
MatchResult match_segments(const LabelTriple& pred, const LabelTriple& gt, const ClassTaxonomy& taxonomy);

/// Mean part IoU over the pixels of a matched segment pair (gt-void pixels
/// excluded). Part classes absent from both maps on those pixels are
/// skipped; if all are absent the segment IoU is returned. Throws
/// ValidationError("no-parts") for part-less classes.
double part_iou(const LabelTriple& pred, const LabelTriple& gt, const PanopticSegment& pred_segment,
                const PanopticSegment& gt_segment, double segment_iou, const ClassTaxonomy& taxonomy);

struct PqResult {
  std::map<ClassId, double> per_class;  // classes with at least one TP, FP or FN
  double mean = 0.0;
};

/// Panoptic quality per class: sum of TP IoU over |TP| + |FP|/2 + |FN|/2.
/// Classes absent from both prediction and ground truth are skipped.
PqResult pq(const MatchResult& match);

struct ClassTally {
  double iou_sum = 0.0;
  double part_iou_sum = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  bool in_gt = false;

  ClassTally& operator+=(const ClassTally& other);
};

struct ClassScore {
  ClassId class_id = 0;
  std::string name;
  ClassTally tally;
  std::optional<double> pq;       // empty when the class is absent from gt
  std::optional<double> part_pq;  // empty when the class is absent from gt
};

struct MetricReport {
  std::vector<ClassScore> classes;  // taxonomy order
  std::optional<double> pq;         // mean over classes present in gt
  std::optional<double> part_pq;
};

MetricReport report_from_tallies(const std::map<ClassId, ClassTally>& tallies, const ClassTaxonomy& taxonomy);
std::map<ClassId, ClassTally> tally(const MatchResult& match);

/// PQ and PartPQ of one image pair.
MetricReport part_pq(const LabelTriple& pred, const LabelTriple& gt, const ClassTaxonomy& taxonomy);

/// Dataset-level report: counts and IoU sums pooled before the quotient.
/// Throws ValidationError("empty-dataset").
MetricReport aggregate_dataset(std::span<const MatchResult> matches, const ClassTaxonomy& taxonomy);

/// TSV with header `class	pq	part_pq	tp	fp	fn` plus a `total` row; "-" for
/// absent classes. Values printed with 6 decimals.
std::string report_tsv(const MetricReport& report);

struct NamedReport {
  std::string name;
  MetricReport report;
};

/// Table with one row per strategy and one column per class plus `total`,
/// showing PartPQ. `percent` scales by 100 with one decimal; otherwise
/// ratios with three decimals.
std::string report_table(std::span<const NamedReport> rows, const ClassTaxonomy& taxonomy, bool percent);

}  // namespace partfuse
