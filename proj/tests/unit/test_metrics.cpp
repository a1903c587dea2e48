#include <doctest.h>

#include <numeric>

#include "../common/fixtures.hpp"
#include "partfuse/error.hpp"
#include "partfuse/metrics.hpp"

using namespace fixtures;
using doctest::Approx;

TEST_CASE("match: identical triples") {
  const auto tax = hospital_taxonomy();
  SplitMix64 rng(2);
  const auto t = random_triple(rng, 16, 16, tax);
  const auto m = match_segments(t, t, tax);
  for (const auto& [id, c] : m.classes) {
    CHECK(c.fp.empty());
    CHECK(c.fn.empty());
    for (const auto& tp : c.tp) CHECK(tp.iou == 1.0);
  }
  const auto r = part_pq(t, t, tax);
  REQUIRE(r.pq);
  CHECK(*r.pq == 1.0);
  CHECK(*r.part_pq == 1.0);
}

TEST_CASE("match: 50 of 60 plus 10 outside is a TP at 5/7") {
  const auto tax = hospital_taxonomy();
  const auto gt = strip({{0, 60, kBottle, 1}, {60, 100, kTable, 0}});
  const auto pred = strip({{10, 70, kBottle, 1}, {70, 100, kTable, 0}, {0, 10, kTable, 0}});
  const auto m = match_segments(pred, gt, tax);
  const auto& bottle = m.classes.at(kBottle);
  REQUIRE(bottle.tp.size() == 1);
  CHECK(bottle.tp[0].iou == Approx(50.0 / 70.0).epsilon(1e-12));
  CHECK(pq(m).per_class.at(kBottle) == Approx(0.7143).epsilon(1e-4));
}

TEST_CASE("match: IoU exactly 0.5 is not a match") {
  const auto tax = hospital_taxonomy();
  const auto gt = strip({{0, 60, kBottle, 1}, {60, 100, kTable, 0}});
  const auto pred = strip({{0, 30, kBottle, 1}, {30, 100, kTable, 0}});
  const auto& bottle = match_segments(pred, gt, tax).classes.at(kBottle);
  CHECK(bottle.tp.empty());
  CHECK(bottle.fp.size() == 1);
  CHECK(bottle.fn.size() == 1);
}

TEST_CASE("pq: one TP at 0.8 plus one FN") {
  const auto tax = hospital_taxonomy();
  const auto gt = strip({{0, 80, kBottle, 1}, {80, 90, kTable, 0}, {90, 100, kBottle, 2}});
  const auto pred = strip({{0, 64, kBottle, 1}, {64, 100, kTable, 0}});
  const auto m = match_segments(pred, gt, tax);
  CHECK(m.classes.at(kBottle).tp.at(0).iou == Approx(0.8).epsilon(1e-12));
  CHECK(pq(m).per_class.at(kBottle) == Approx(0.8 / 1.5).epsilon(1e-12));
  CHECK(pq(m).per_class.at(kBottle) == Approx(0.5333).epsilon(1e-4));
}

TEST_CASE("gt void is ignored, void-dominated predictions are dropped") {
  const auto tax = hospital_taxonomy();
  const auto gt = strip({{0, 40, kBottle, 1}, {60, 100, kTable, 0}});
  // Bottle: 40 px on gt bottle + 20 on gt void -> IoU 1.
  // Medical bag entirely on void -> discarded, not an FP.
  const auto pred = strip({{0, 60, kBottle, 1}, {60, 100, kTable, 0}, {40, 50, kMedicalBag, 3}});
  const auto m = match_segments(pred, gt, tax);
  CHECK(m.classes.at(kBottle).tp.at(0).iou == Approx(1.0));
  CHECK(m.classes.at(kMedicalBag).fp.empty());
  CHECK(m.discarded_pred.size() == 1);
}

TEST_CASE("part_iou fixtures") {
  const auto tax = hospital_taxonomy();
  const auto gt = strip({{0, 20, kBag, 1, kSeal}, {20, 50, kBag, 1, kCenter}, {50, 70, kBag, 1, 0}, {70, 100, kTable, 0}});
  SUBCASE("identical parts") {
    const auto m = match_segments(gt, gt, tax);
    CHECK(m.classes.at(kBag).tp.at(0).part_iou == 1.0);
  }
  SUBCASE("one perfect, one half -> 0.75") {
    const auto pred =
        strip({{0, 20, kBag, 1, kSeal}, {20, 30, kBag, 1, 0}, {30, 60, kBag, 1, kCenter}, {60, 70, kBag, 1, 0},
               {70, 100, kTable, 0}});
    const auto m = match_segments(pred, gt, tax);
    const auto& tp = m.classes.at(kBag).tp.at(0);
    CHECK(tp.iou == 1.0);
    CHECK(tp.part_iou == Approx(0.75).epsilon(1e-12));
    const auto r = part_pq(pred, gt, tax);
    CHECK(*r.classes[0].part_pq == Approx(0.75).epsilon(1e-12));
    CHECK(*r.classes[0].pq == 1.0);
  }
  SUBCASE("absent part skipped") {
    // Only center present in gt; pred center IoU 0.6.
    const auto g = strip({{0, 50, kBag, 1, kCenter}, {50, 100, kTable, 0}});
    const auto p = strip({{0, 30, kBag, 1, kCenter}, {30, 50, kBag, 1, 0}, {50, 100, kTable, 0}});
    const auto m = match_segments(p, g, tax);
    CHECK(m.classes.at(kBag).tp.at(0).part_iou == Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("no parts anywhere on the segment -> segment IoU") {
    const auto g = strip({{0, 50, kBag, 1}, {50, 100, kTable, 0}});
    const auto p = strip({{0, 45, kBag, 1}, {45, 100, kTable, 0}});
    const auto& tp = match_segments(p, g, tax).classes.at(kBag).tp.at(0);
    CHECK(tp.part_iou == tp.iou);
  }
}

TEST_CASE("part_pq formula from tallies") {
  const auto tax = hospital_taxonomy();
  std::map<ClassId, ClassTally> t;
  t[kBag] = ClassTally{0.8, 0.75, 1, 0, 0, true};
  const auto r = report_from_tallies(t, tax);
  CHECK(*r.classes[0].pq == Approx(0.8));
  CHECK(*r.classes[0].part_pq == Approx(0.75));
  CHECK_FALSE(r.classes[3].pq.has_value());
  CHECK(*r.part_pq == Approx(0.75));
}

TEST_CASE("part_pq equals pq without parts") {
  const auto tax = partless_taxonomy();
  SplitMix64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const auto gt = random_triple(rng, 16, 16, tax);
    const auto pred = perturb_triple(rng, gt, tax);
    const auto r = part_pq(pred, gt, tax);
    REQUIRE(r.pq);
    CHECK(*r.pq == *r.part_pq);
    for (const auto& c : r.classes) CHECK(c.pq == c.part_pq);
  }
}

TEST_CASE("absent gt class reported as '-' and excluded") {
  const auto tax = hospital_taxonomy();
  const auto gt = strip({{0, 100, kBottle, 1}});
  const auto r = part_pq(gt, gt, tax);
  CHECK_FALSE(r.classes[3].pq.has_value());
  CHECK(*r.pq == 1.0);
  const auto tsv = report_tsv(r);
  CHECK(tsv.find("table\t-\t-\t0\t0\t0\n") != std::string::npos);
  CHECK(tsv.rfind("class\tpq\tpart_pq\ttp\tfp\tfn\n", 0) == 0);
  CHECK(tsv.find("bottle\t1.000000\t1.000000\t1\t0\t0\n") != std::string::npos);
  CHECK(tsv.find("total\t1.000000\t1.000000\t1\t0\t0\n") != std::string::npos);

  const std::vector<NamedReport> rows{{"MP", r}};
  const auto table = report_table(rows, tax, true);
  CHECK(table.find("100.0") != std::string::npos);
  CHECK(table.find(" -") != std::string::npos);
  CHECK(report_table(rows, tax, false).find("1.000") != std::string::npos);
}

TEST_CASE("dataset aggregation pools counts") {
  const auto tax = hospital_taxonomy();
  // Image 1: bottle TP at IoU 0.8 and one FP; image 2: bottle TP at 0.7.
  const auto gt1 = strip({{0, 80, kBottle, 1}, {80, 100, kTable, 0}});
  const auto pred1 = strip({{0, 64, kBottle, 1}, {64, 80, kTable, 0}, {80, 100, kBottle, 2}});
  const auto gt2 = strip({{0, 70, kBottle, 1}, {70, 100, kTable, 0}});
  const auto pred2 = strip({{0, 49, kBottle, 1}, {49, 100, kTable, 0}});
  std::vector<MatchResult> ms{match_segments(pred1, gt1, tax), match_segments(pred2, gt2, tax)};
  const auto r = aggregate_dataset(ms, tax);
  CHECK(r.classes[1].tally.tp == 2);
  CHECK(r.classes[1].tally.fp == 1);
  CHECK(*r.classes[1].pq == Approx(1.5 / 2.5).epsilon(1e-12));

  const auto once = aggregate_dataset(std::span(ms.data(), 1), tax);
  const auto single = part_pq(pred1, gt1, tax);
  CHECK(*once.pq == *single.pq);
  std::vector<MatchResult> dup{ms[0], ms[0]};
  CHECK(*aggregate_dataset(dup, tax).pq == Approx(*once.pq).epsilon(1e-15));
  CHECK_THROWS_AS(aggregate_dataset(std::span<const MatchResult>(), tax), ValidationError);
}

TEST_CASE("metrics agree with the brute-force oracle") {
  const auto tax = hospital_taxonomy();
  SplitMix64 rng(99);
  for (int k = 0; k < 40; ++k) {
    const auto gt = random_triple(rng, 16, 16, tax);
    const auto pred = perturb_triple(rng, gt, tax);
    const auto r = part_pq(pred, gt, tax);
    const auto o = oracle_pq(pred, gt, tax);
    REQUIRE(r.pq.has_value() == o.any);
    if (!o.any) continue;
    CHECK(std::abs(*r.pq - o.mean_pq) < 1e-9);
    CHECK(std::abs(*r.part_pq - o.mean_part_pq) < 1e-9);
    for (const auto& c : r.classes) {
      CHECK(c.pq.has_value() == (o.pq.count(c.class_id) == 1));
      if (c.pq) {
        CHECK(std::abs(*c.pq - o.pq.at(c.class_id)) < 1e-9);
        CHECK(std::abs(*c.part_pq - o.part_pq.at(c.class_id)) < 1e-9);
      }
    }
  }
}

TEST_CASE("matching is one-to-one and instance ids are arbitrary") {
  const auto tax = hospital_taxonomy();
  SplitMix64 rng(7);
  for (int k = 0; k < 30; ++k) {
    const auto gt = random_triple(rng, 16, 16, tax);
    const auto pred = perturb_triple(rng, gt, tax);
    const auto m = match_segments(pred, gt, tax);
    std::set<std::size_t> used_pred, used_gt;
    for (const auto& [id, c] : m.classes) {
      for (const auto& tp : c.tp) {
        CHECK(tp.iou > 0.5);
        CHECK(used_pred.insert(tp.pred_segment).second);
        CHECK(used_gt.insert(tp.gt_segment).second);
      }
    }
    auto relabelled = pred;
    for (auto& v : relabelled.instance.ids) {
      if (v != 0) v = static_cast<InstanceId>(1000 - v);
    }
    const auto a = part_pq(pred, gt, tax), b = part_pq(relabelled, gt, tax);
    CHECK(a.pq == b.pq);
    CHECK(a.part_pq == b.part_pq);
  }
}

TEST_CASE("dimension mismatch") {
  const auto tax = hospital_taxonomy();
  CHECK_THROWS_AS(match_segments(LabelTriple(3, 3), LabelTriple(3, 4), tax), ValidationError);
}
