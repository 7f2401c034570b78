#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "cellvote/error.hpp"
#include "cellvote/metrics.hpp"
#include "cellvote/report.hpp"
#include "oracles.hpp"
#include "reference_corpus.hpp"

using namespace cellvote;
using namespace cellvote::metrics;
using namespace cellvote::testing;

namespace {

ConfusionMatrix table1() { return ConfusionMatrix(3, {2676, 58, 351, 48, 614, 243, 69, 28, 153}); }

// Table 2: correct (566,128,32) of (617,181,50). Off-diagonal placement is
// irrelevant to per-class accuracy; errors are parked in the next column.
ConfusionMatrix table2() {
  ConfusionMatrix m(3);
  m.add(0, 0, 566);
  m.add(1, 1, 128);
  m.add(2, 2, 32);
  m.add(0, 1, 617 - 566 - 4);
  m.add_na(0, 4);
  m.add(1, 2, 181 - 128 - 10);
  m.add_na(1, 10);
  m.add(2, 0, 50 - 32 - 10);
  m.add_na(2, 10);
  return m;
}

ConfusionMatrix permuted(const ConfusionMatrix& m, const std::vector<std::size_t>& perm) {
  ConfusionMatrix out(m.n_classes());
  for (std::size_t t = 0; t < m.n_classes(); ++t)
    for (std::size_t p = 0; p < m.n_classes(); ++p) out.add(perm[t], perm[p], m.at(t, p));
  return out;
}

}  // namespace

TEST_CASE("vote matrix from the reference corpus") {
  const auto corpus = testing::load_reference_corpus();
  const ConfusionMatrix m = build_vote_matrix(corpus.votes, index_truth(corpus.truth));
  CHECK(m == table1());
  CHECK(m.row_total(0) == 3085);
  CHECK(m.row_total(1) == 905);
  CHECK(m.row_total(2) == 250);
  CHECK(m.total() == 5 * 848);
  // Per-vote row totals / k give the per-item class totals.
  CHECK(m.row_total(0) / 5 == 617);
  CHECK(m.row_total(1) / 5 == 181);
  CHECK(m.row_total(2) / 5 == 50);
}

TEST_CASE("empty vote set gives a zero matrix") {
  const ConfusionMatrix m = build_vote_matrix({}, {});
  CHECK(m.total() == 0);
  CHECK(m == ConfusionMatrix(3));
}

TEST_CASE("unknown items are rejected") {
  const std::vector<Vote> votes = {Vote{"w", "ghost", CellClass::Circular, 0}};
  CHECK_THROWS_AS(build_vote_matrix(votes, {}), Error);
  try {
    build_vote_matrix(votes, {});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownItem);
  }
  const std::vector<ConsensusResult> results = {ConsensusResult{"ghost", std::nullopt, {}, false}};
  CHECK_THROWS_AS(build_consensus_matrix(results, {}), Error);
}

TEST_CASE("consensus matrix from the reference corpus") {
  const auto corpus = testing::load_reference_corpus();
  const auto agg = report::aggregate_votes(corpus.votes);
  const ConfusionMatrix m = build_consensus_matrix(agg.results, index_truth(corpus.truth));
  CHECK(m.row_total(0) + m.na(0) == 617);
  CHECK(m.row_total(1) + m.na(1) == 181);
  CHECK(m.row_total(2) + m.na(2) == 50);
  CHECK(m.at(0, 0) == 566);
  CHECK(m.at(1, 1) == 128);
  CHECK(m.at(2, 2) == 32);
  CHECK(m.na_total() == 24);
}

TEST_CASE("all-unanimous correct corpus gives a diagonal consensus matrix") {
  std::vector<ConsensusResult> results;
  TruthIndex truth;
  for (int i = 0; i < 9; ++i) {
    const CellClass c = kAllClasses[i % 3];
    const std::string id = "i" + std::to_string(i);
    truth[id] = c;
    results.push_back(ConsensusResult{id, ConsensusLabel{c, 5}, AgreementPattern{{5}}, false});
  }
  const ConfusionMatrix m = build_consensus_matrix(results, truth);
  CHECK(m.correct() == 9);
  CHECK(m.total() == 9);
  CHECK(m.na_total() == 0);
}

TEST_CASE("per_class_accuracy") {
  const auto t1 = per_class_accuracy(table1(), NaPolicy::Exclude);
  CHECK(std::abs(*t1[0] - 0.8674) < 1e-4);
  CHECK(std::abs(*t1[1] - 0.6785) < 1e-4);  // printed 67.58% is a digit transposition of 614/905
  CHECK(std::abs(*t1[2] - 0.6120) < 1e-4);

  const auto t2 = per_class_accuracy(table2(), NaPolicy::CountAsError);
  CHECK(std::abs(*t2[0] - 0.9173) < 1e-4);
  CHECK(std::abs(*t2[1] - 0.7072) < 1e-4);
  CHECK(std::abs(*t2[2] - 0.6400) < 1e-4);

  const auto diag = per_class_accuracy(ConfusionMatrix(3, {4, 0, 0, 0, 5, 0, 0, 0, 6}), NaPolicy::Exclude);
  for (const auto& a : diag) CHECK(*a == 1.0);

  const auto empty_row = per_class_accuracy(ConfusionMatrix(3, {4, 0, 0, 0, 0, 0, 0, 0, 6}), NaPolicy::Exclude);
  CHECK_FALSE(empty_row[1].has_value());
}

TEST_CASE("sds_score") {
  CHECK(std::abs(*sds_score(table1()) - 0.8759) < 1e-4);
  CHECK(*sds_score(table1()) == doctest::Approx(3714.0 / 4240.0));
  CHECK(*sds_score(ConfusionMatrix(3, {10, 0, 0, 0, 4, 3, 0, 2, 5})) == 1.0);
  CHECK(*sds_score(merge_matrix(table1())) == doctest::Approx(3714.0 / 4240.0));
  CHECK_FALSE(sds_score(ConfusionMatrix(3)).has_value());
}

TEST_CASE("f_measure") {
  CHECK(*f_measure(ConfusionMatrix(3, {4, 0, 0, 0, 5, 0, 0, 0, 6}), Averaging::Macro) == 1.0);
  // Independent Python oracle over Table 1 per-class precision/recall.
  CHECK(*f_measure(table1(), Averaging::Macro) == doctest::Approx(0.6608478589173732));
  CHECK(*f_measure(table1(), Averaging::Weighted) == doctest::Approx(0.8438888864370255));
  // ((10,0),(5,5)): F_pos = 2*10/(20+5) = 0.8, F_neg = 2*5/(10+5) = 2/3.
  const ConfusionMatrix small(2, {10, 0, 5, 5});
  CHECK(*f_measure(small, Averaging::Macro) == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0));
  CHECK_FALSE(f_measure(ConfusionMatrix(3), Averaging::Macro).has_value());
}

TEST_CASE("cba") {
  CHECK(*cba(ConfusionMatrix(3, {4, 0, 0, 0, 5, 0, 0, 0, 6})) == 1.0);
  // Direct formula with the matrix's own row totals (3085, 905, 250).
  CHECK(*cba(table1()) == doctest::Approx(0.5835651101230589));
  CHECK(*cba(ConfusionMatrix(1, {12})) == 1.0);
  // A class absent from both truth and predictions is skipped.
  CHECK(*cba(ConfusionMatrix(3, {4, 0, 0, 0, 0, 0, 0, 0, 6})) == 1.0);
}

TEST_CASE("mcc") {
  CHECK(*mcc(ConfusionMatrix(3, {4, 0, 0, 0, 5, 0, 0, 0, 6})) == doctest::Approx(1.0));
  CHECK(*mcc(ConfusionMatrix(3, {7, 7, 7, 7, 7, 7, 7, 7, 7})) == doctest::Approx(0.0));
  CHECK(*mcc(table1()) == doctest::Approx(0.6205584481744922));
  CHECK(*mcc(ConfusionMatrix(3, {5, 0, 0, 3, 0, 0, 2, 0, 0})) == 0.0);  // one predicted class
}

TEST_CASE("merge_matrix") {
  CHECK(merge_matrix(table1()) == ConfusionMatrix(2, {2676, 409, 117, 1038}));
  CHECK(merge_matrix(ConfusionMatrix(3)) == ConfusionMatrix(2));
  CHECK(merge_matrix(ConfusionMatrix(3, {4, 0, 0, 0, 5, 0, 0, 0, 6})) == ConfusionMatrix(2, {4, 0, 0, 11}));
  ConfusionMatrix with_na = table2();
  const ConfusionMatrix merged = merge_matrix(with_na);
  CHECK(merged.na(0) == 4);
  CHECK(merged.na(1) == 20);
  CHECK_THROWS_AS(merge_matrix(ConfusionMatrix(2)), Error);
}

TEST_CASE("full_report on Table 1 and on empty input") {
  const DualReport r = full_report(table1(), NaPolicy::Exclude);
  CHECK(std::abs(*r.three_class.sds - 0.8759) < 1e-4);
  CHECK(std::abs(*r.two_class.sds - 0.8759) < 1e-4);
  CHECK(r.two_class.mcc == doctest::Approx(0.7193629860660024));

  const DualReport empty = full_report(ConfusionMatrix(3), NaPolicy::Exclude);
  CHECK_FALSE(empty.three_class.sds);
  CHECK_FALSE(empty.three_class.f_macro);
  CHECK_FALSE(empty.three_class.cba);
  CHECK_FALSE(empty.three_class.mcc);
  CHECK_FALSE(empty.three_class.overall_accuracy);
  CHECK(empty.three_class.na_rate == 0.0);
  CHECK_FALSE(empty.two_class.sds);
}

TEST_CASE("property: metrics agree with sample-level oracles on random matrices") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 2;
    const ConfusionMatrix m = random_matrix(rng, n);
    CHECK(std::abs(*f_measure(m, Averaging::Macro) - oracle_macro_f(m)) < 1e-10);
    CHECK(std::abs(*cba(m) - oracle_cba(m)) < 1e-10);
    CHECK(std::abs(*mcc(m) - oracle_mcc(m)) < 1e-10);
    CHECK(std::abs(*sds_score(m) - oracle_sds(m)) < 1e-10);
  }
}

TEST_CASE("property: ranges and bounds") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const ConfusionMatrix m = random_matrix(rng, 3);
    const double f = *f_measure(m, Averaging::Macro);
    const double c = *cba(m);
    const double s = *sds_score(m);
    const double r = *mcc(m);
    CHECK((f >= 0 && f <= 1));
    CHECK((c >= 0 && c <= 1));
    CHECK((s >= 0 && s <= 1));
    CHECK((r >= -1 - 1e-12 && r <= 1 + 1e-12));
    double max_recall = 0;
    for (const auto& a : per_class_accuracy(m, NaPolicy::Exclude))
      if (a) max_recall = std::max(max_recall, *a);
    CHECK(c <= max_recall + 1e-12);
  }
}

TEST_CASE("property: merging preserves the total and never loses correct cells") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const ConfusionMatrix m = random_matrix(rng, 3);
    const ConfusionMatrix merged = merge_matrix(m);
    CHECK(merged.total() == m.total());
    CHECK(merged.correct() >= m.correct());
    CHECK(merged.correct() == m.correct() + m.at(1, 2) + m.at(2, 1));
  }
}

TEST_CASE("property: sds equals overall accuracy on two-class matrices") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const ConfusionMatrix m = random_matrix(rng, 2);
    CHECK(*sds_score(m) == doctest::Approx(*overall_accuracy(m, NaPolicy::Exclude)).epsilon(1e-12));
  }
}

TEST_CASE("property: class relabeling leaves metrics unchanged") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const ConfusionMatrix m = random_matrix(rng, 3);
    std::vector<std::size_t> perm = {0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    const ConfusionMatrix p = permuted(m, perm);
    CHECK(*f_measure(p, Averaging::Macro) == doctest::Approx(*f_measure(m, Averaging::Macro)));
    CHECK(*f_measure(p, Averaging::Weighted) == doctest::Approx(*f_measure(m, Averaging::Weighted)));
    CHECK(*cba(p) == doctest::Approx(*cba(m)));
    CHECK(*mcc(p) == doctest::Approx(*mcc(m)));
    CHECK(*overall_accuracy(p, NaPolicy::Exclude) == doctest::Approx(*overall_accuracy(m, NaPolicy::Exclude)));
    // SDS singles out the circular class; it is invariant under swapping the
    // two deformed classes only.
    CHECK(*sds_score(permuted(m, {0, 2, 1})) == doctest::Approx(*sds_score(m)));
  }
}

TEST_CASE("property: 2x2 MCC equals the phi coefficient") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const ConfusionMatrix m = random_matrix(rng, 2, 50);
    const double a = m.at(0, 0), b = m.at(0, 1), c = m.at(1, 0), d = m.at(1, 1);
    const double den = std::sqrt((a + b) * (c + d) * (a + c) * (b + d));
    const double phi = den == 0 ? 0.0 : (a * d - b * c) / den;
    CHECK(std::abs(*mcc(m) - phi) < 1e-10);
  }
}
