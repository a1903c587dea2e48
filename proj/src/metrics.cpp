#include "partfuse/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "partfuse/error.hpp"

namespace partfuse {

namespace {

constexpr std::size_t kNoSegment = static_cast<std::size_t>(-1);

std::vector<std::size_t> segment_index_map(const std::vector<PanopticSegment>& segments, std::size_t n) {
  std::vector<std::size_t> owner(n, kNoSegment);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (auto i : segments[s].pixels) owner[i] = s;
  }
  return owner;
}

void require_same_dims(const LabelTriple& pred, const LabelTriple& gt) {
  if (!pred.same_dims() || !gt.same_dims() || pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ValidationError("dimension-mismatch", "prediction and ground truth differ in dimensions");
  }
}

double quotient(double numerator, const ClassTally& t) {
  const double denom = static_cast<double>(t.tp) + 0.5 * static_cast<double>(t.fp) + 0.5 * static_cast<double>(t.fn);
  return denom > 0.0 ? numerator / denom : 0.0;
}

std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

double part_iou(const LabelTriple& pred, const LabelTriple& gt, const PanopticSegment& pred_segment,
                const PanopticSegment& gt_segment, double segment_iou, const ClassTaxonomy& taxonomy) {
  const auto parts = taxonomy.parts_of(gt_segment.class_id);
  if (parts.empty()) throw ValidationError("no-parts", "class has no parts; use the segment IoU");

  std::vector<std::uint32_t> region;
  region.reserve(pred_segment.pixels.size() + gt_segment.pixels.size());
  std::set_union(pred_segment.pixels.begin(), pred_segment.pixels.end(), gt_segment.pixels.begin(),
                 gt_segment.pixels.end(), std::back_inserter(region));

  double sum = 0.0;
  std::size_t counted = 0;
  for (PartId p : parts) {
    std::size_t inter = 0, uni = 0;
    for (auto i : region) {
      if (gt.semantic.ids[i] == kVoid) continue;
      const bool in_pred = pred.part.ids[i] == p;
      const bool in_gt = gt.part.ids[i] == p;
      inter += in_pred && in_gt;
      uni += in_pred || in_gt;
    }
    if (uni == 0) continue;
    sum += static_cast<double>(inter) / static_cast<double>(uni);
    ++counted;
  }
  return counted == 0 ? segment_iou : sum / static_cast<double>(counted);
}

MatchResult match_segments(const LabelTriple& pred, const LabelTriple& gt, const ClassTaxonomy& taxonomy) {
  require_same_dims(pred, gt);
  const std::size_t n = gt.pixel_count();

  MatchResult result;
  result.pred_segments = derive_segments(pred, taxonomy);
  result.gt_segments = derive_segments(gt, taxonomy);
  for (const auto& c : taxonomy.semantic_classes()) result.classes[c.id];

  const auto gt_owner = segment_index_map(result.gt_segments, n);
  const auto pred_owner = segment_index_map(result.pred_segments, n);

  std::vector<std::size_t> void_area(result.pred_segments.size(), 0);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> intersections;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ps = pred_owner[i];
    if (ps == kNoSegment) continue;
    if (gt.semantic.ids[i] == kVoid) {
      ++void_area[ps];
    } else if (gt_owner[i] != kNoSegment &&
               result.gt_segments[gt_owner[i]].class_id == result.pred_segments[ps].class_id) {
      ++intersections[{ps, gt_owner[i]}];
    }
  }

  std::vector<bool> discarded(result.pred_segments.size(), false);
  for (std::size_t s = 0; s < result.pred_segments.size(); ++s) {
    if (2 * void_area[s] > result.pred_segments[s].pixel_count()) {
      discarded[s] = true;
      result.discarded_pred.push_back(s);
    }
  }

  std::vector<bool> pred_matched(result.pred_segments.size(), false);
  std::vector<bool> gt_matched(result.gt_segments.size(), false);
  for (const auto& [key, inter] : intersections) {
    const auto [ps, gs] = key;
    if (discarded[ps]) continue;
    const auto& p = result.pred_segments[ps];
    const auto& g = result.gt_segments[gs];
    const double uni =
        static_cast<double>(p.pixel_count() - void_area[ps] + g.pixel_count() - inter);
    const double iou = static_cast<double>(inter) / uni;
    if (iou <= 0.5) continue;
    pred_matched[ps] = gt_matched[gs] = true;
    TruePositive tp{ps, gs, iou, iou};
    if (taxonomy.has_parts(g.class_id)) tp.part_iou = part_iou(pred, gt, p, g, iou, taxonomy);
    result.classes[g.class_id].tp.push_back(tp);
  }

  for (std::size_t s = 0; s < result.pred_segments.size(); ++s) {
    if (discarded[s]) continue;
    auto& cls = result.classes[result.pred_segments[s].class_id];
    cls.in_pred = true;
    if (!pred_matched[s]) cls.fp.push_back(s);
  }
  for (std::size_t s = 0; s < result.gt_segments.size(); ++s) {
    auto& cls = result.classes[result.gt_segments[s].class_id];
    cls.in_gt = true;
    if (!gt_matched[s]) cls.fn.push_back(s);
  }
  return result;
}

ClassTally& ClassTally::operator+=(const ClassTally& other) {
  iou_sum += other.iou_sum;
  part_iou_sum += other.part_iou_sum;
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  in_gt = in_gt || other.in_gt;
  return *this;
}

std::map<ClassId, ClassTally> tally(const MatchResult& match) {
  std::map<ClassId, ClassTally> out;
  for (const auto& [id, cls] : match.classes) {
    ClassTally t;
    for (const auto& tp : cls.tp) {
      t.iou_sum += tp.iou;
      t.part_iou_sum += tp.part_iou;
    }
    t.tp = cls.tp.size();
    t.fp = cls.fp.size();
    t.fn = cls.fn.size();
    t.in_gt = cls.in_gt;
    out[id] = t;
  }
  return out;
}

PqResult pq(const MatchResult& match) {
  PqResult result;
  double sum = 0.0;
  for (const auto& [id, t] : tally(match)) {
    if (t.tp + t.fp + t.fn == 0) continue;
    const double v = quotient(t.iou_sum, t);
    result.per_class[id] = v;
    sum += v;
  }
  if (!result.per_class.empty()) result.mean = sum / static_cast<double>(result.per_class.size());
  return result;
}

MetricReport report_from_tallies(const std::map<ClassId, ClassTally>& tallies, const ClassTaxonomy& taxonomy) {
  MetricReport report;
  double pq_sum = 0.0, part_sum = 0.0;
  std::size_t present = 0;
  for (const auto& c : taxonomy.semantic_classes()) {
    ClassScore score{c.id, c.name, {}, std::nullopt, std::nullopt};
    if (auto it = tallies.find(c.id); it != tallies.end()) score.tally = it->second;
    if (score.tally.in_gt) {
      score.pq = quotient(score.tally.iou_sum, score.tally);
      score.part_pq = quotient(score.tally.part_iou_sum, score.tally);
      pq_sum += *score.pq;
      part_sum += *score.part_pq;
      ++present;
    }
    report.classes.push_back(std::move(score));
  }
  if (present > 0) {
    report.pq = pq_sum / static_cast<double>(present);
    report.part_pq = part_sum / static_cast<double>(present);
  }
  return report;
}

MetricReport part_pq(const LabelTriple& pred, const LabelTriple& gt, const ClassTaxonomy& taxonomy) {
  return report_from_tallies(tally(match_segments(pred, gt, taxonomy)), taxonomy);
}

MetricReport aggregate_dataset(std::span<const MatchResult> matches, const ClassTaxonomy& taxonomy) {
  if (matches.empty()) throw ValidationError("empty-dataset", "no images to aggregate");
  std::map<ClassId, ClassTally> pooled;
  for (const auto& m : matches) {
    for (const auto& [id, t] : tally(m)) pooled[id] += t;
  }
  return report_from_tallies(pooled, taxonomy);
}

std::string report_tsv(const MetricReport& report) {
  std::ostringstream out;
  out << "class\tpq\tpart_pq\ttp\tfp\tfn\n";
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& c : report.classes) {
    out << c.name << '\t' << (c.pq ? fmt_fixed(*c.pq, 6) : "-") << '\t'
        << (c.part_pq ? fmt_fixed(*c.part_pq, 6) : "-") << '\t' << c.tally.tp << '\t' << c.tally.fp << '\t'
        << c.tally.fn << '\n';
    tp += c.tally.tp;
    fp += c.tally.fp;
    fn += c.tally.fn;
  }
  out << "total\t" << (report.pq ? fmt_fixed(*report.pq, 6) : "-") << '\t'
      << (report.part_pq ? fmt_fixed(*report.part_pq, 6) : "-") << '\t' << tp << '\t' << fp << '\t' << fn << '\n';
  return out.str();
}

std::string report_table(std::span<const NamedReport> rows, const ClassTaxonomy& taxonomy, bool percent) {
  auto cell = [percent](const std::optional<double>& v) {
    if (!v) return std::string("-");
    return percent ? fmt_fixed(*v * 100.0, 1) : fmt_fixed(*v, 3);
  };

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"PartPQ"};
  for (const auto& c : taxonomy.semantic_classes()) header.push_back(c.name);
  header.emplace_back("total");
  grid.push_back(std::move(header));
  for (const auto& row : rows) {
    std::vector<std::string> line{row.name};
    for (const auto& c : row.report.classes) line.push_back(cell(c.part_pq));
    line.push_back(cell(row.report.part_pq));
    grid.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto& line : grid) {
    for (std::size_t k = 0; k < line.size() && k < widths.size(); ++k) widths[k] = std::max(widths[k], line[k].size());
  }
  std::ostringstream out;
  for (const auto& line : grid) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (k == 0) {
        out << line[k] << std::string(widths[k] - line[k].size(), ' ');
      } else {
        out << "  " << std::string(widths[k] - line[k].size(), ' ') << line[k];
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace partfuse
