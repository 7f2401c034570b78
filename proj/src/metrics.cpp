#include "cellvote/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cellvote/error.hpp"

namespace cellvote::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes)
    : n_(n_classes), counts_(n_classes * n_classes, 0), na_(n_classes, 0) {
  if (n_classes == 0) throw Error(ErrorKind::InvalidArgument, "confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::int64_t> counts,
                                 std::vector<std::int64_t> na)
    : n_(n_classes), counts_(std::move(counts)), na_(std::move(na)) {
  if (n_classes == 0) throw Error(ErrorKind::InvalidArgument, "confusion matrix needs at least one class");
  if (counts_.size() != n_ * n_)
    throw Error(ErrorKind::InvalidArgument, "confusion matrix expects n*n counts");
  if (na_.empty()) na_.assign(n_, 0);
  if (na_.size() != n_) throw Error(ErrorKind::InvalidArgument, "N/A counts must have one entry per class");
  auto negative = [](std::int64_t v) { return v < 0; };
  if (std::any_of(counts_.begin(), counts_.end(), negative) || std::any_of(na_.begin(), na_.end(), negative))
    throw Error(ErrorKind::InvalidArgument, "confusion matrix counts must be nonnegative");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::int64_t count) {
  counts_.at(truth * n_ + predicted) += count;
}

void ConfusionMatrix::add_na(std::size_t truth, std::int64_t count) { na_.at(truth) += count; }

std::int64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::int64_t sum = 0;
  for (std::size_t p = 0; p < n_; ++p) sum += at(truth, p);
  return sum;
}

std::int64_t ConfusionMatrix::column_total(std::size_t predicted) const {
  std::int64_t sum = 0;
  for (std::size_t t = 0; t < n_; ++t) sum += at(t, predicted);
  return sum;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::correct() const {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < n_; ++i) sum += at(i, i);
  return sum;
}

std::int64_t ConfusionMatrix::na_total() const {
  return std::accumulate(na_.begin(), na_.end(), std::int64_t{0});
}

namespace {

CellClass truth_of(const TruthIndex& truth, const std::string& item_id) {
  const auto it = truth.find(item_id);
  if (it == truth.end())
    throw Error(ErrorKind::UnknownItem, "item '" + item_id + "' has no ground-truth record");
  return it->second;
}

double ratio(std::int64_t num, std::int64_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix build_vote_matrix(std::span<const Vote> votes, const TruthIndex& truth) {
  ConfusionMatrix m(kNumClasses);
  for (const Vote& v : votes) m.add(index_of(truth_of(truth, v.item_id)), index_of(v.label));
  return m;
}

ConfusionMatrix build_consensus_matrix(std::span<const ConsensusResult> results, const TruthIndex& truth) {
  ConfusionMatrix m(kNumClasses);
  for (const ConsensusResult& r : results) {
    const std::size_t t = index_of(truth_of(truth, r.item_id));
    if (r.outcome)
      m.add(t, index_of(r.outcome->label));
    else
      m.add_na(t);
  }
  return m;
}

std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& m, NaPolicy policy) {
  std::vector<std::optional<double>> out(m.n_classes());
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const std::int64_t den = m.row_total(i) + (policy == NaPolicy::CountAsError ? m.na(i) : 0);
    if (den > 0) out[i] = ratio(m.at(i, i), den);
  }
  return out;
}

std::optional<double> overall_accuracy(const ConfusionMatrix& m, NaPolicy policy) {
  const std::int64_t den = m.total() + (policy == NaPolicy::CountAsError ? m.na_total() : 0);
  if (den == 0) return std::nullopt;
  return ratio(m.correct(), den);
}

std::optional<double> sds_score(const ConfusionMatrix& m) {
  std::int64_t tolerated = 0;
  std::int64_t circular_errors = 0;
  for (std::size_t t = 0; t < m.n_classes(); ++t) {
    for (std::size_t p = 0; p < m.n_classes(); ++p) {
      if (t == p || (t != 0 && p != 0))
        tolerated += m.at(t, p);
      else
        circular_errors += m.at(t, p);
    }
  }
  const std::int64_t den = tolerated + circular_errors;
  if (den == 0) return std::nullopt;
  return ratio(tolerated, den);
}

std::optional<double> f_measure(const ConfusionMatrix& m, Averaging averaging) {
  double weighted_sum = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const std::int64_t support = m.row_total(i);
    if (support == 0) continue;
    const std::int64_t predicted = m.column_total(i);
    const double precision = predicted > 0 ? ratio(m.at(i, i), predicted) : 0.0;
    const double recall = ratio(m.at(i, i), support);
    const double f = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const double w = averaging == Averaging::Macro ? 1.0 : static_cast<double>(support);
    weighted_sum += w * f;
    weight += w;
  }
  if (weight == 0.0) return std::nullopt;
  return weighted_sum / weight;
}

std::optional<double> cba(const ConfusionMatrix& m) {
  double sum = 0.0;
  int classes = 0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const std::int64_t den = std::max(m.row_total(i), m.column_total(i));
    if (den == 0) continue;
    sum += ratio(m.at(i, i), den);
    ++classes;
  }
  if (classes == 0) return std::nullopt;
  return sum / classes;
}

std::optional<double> mcc(const ConfusionMatrix& m) {
  const std::int64_t s = m.total();
  if (s == 0) return std::nullopt;
  // Products of counts exceed 2^63 only for corpora far beyond any annotation
  // campaign; long double keeps the integer part exact well past that.
  long double sum_pt = 0, sum_p2 = 0, sum_t2 = 0;
  for (std::size_t k = 0; k < m.n_classes(); ++k) {
    const long double t = m.row_total(k);
    const long double p = m.column_total(k);
    sum_pt += p * t;
    sum_p2 += p * p;
    sum_t2 += t * t;
  }
  const long double s2 = static_cast<long double>(s) * s;
  const long double left = s2 - sum_p2;
  const long double right = s2 - sum_t2;
  if (left <= 0 || right <= 0) return 0.0;
  const long double num = static_cast<long double>(m.correct()) * s - sum_pt;
  return static_cast<double>(num / std::sqrt(left * right));
}

ConfusionMatrix merge_matrix(const ConfusionMatrix& m) {
  if (m.n_classes() != kNumClasses)
    throw Error(ErrorKind::InvalidArgument, "merge_matrix expects a 3-class matrix");
  ConfusionMatrix merged(2);
  for (CellClass t : kAllClasses) {
    const std::size_t mt = index_of(merge_label(t));
    for (CellClass p : kAllClasses) merged.add(mt, index_of(merge_label(p)), m.at(index_of(t), index_of(p)));
    merged.add_na(mt, m.na(index_of(t)));
  }
  return merged;
}

MetricsReport compute_report(const ConfusionMatrix& m, NaPolicy policy) {
  MetricsReport r;
  r.per_class_accuracy = per_class_accuracy(m, policy);
  r.overall_accuracy = overall_accuracy(m, policy);
  r.f_macro = f_measure(m, Averaging::Macro);
  r.f_weighted = f_measure(m, Averaging::Weighted);
  r.sds = sds_score(m);
  r.cba = cba(m);
  r.mcc = mcc(m);
  const std::int64_t all = m.total() + m.na_total();
  r.na_rate = all > 0 ? ratio(m.na_total(), all) : 0.0;
  return r;
}

DualReport full_report(const ConfusionMatrix& three_class, NaPolicy policy) {
  return DualReport{compute_report(three_class, policy), compute_report(merge_matrix(three_class), policy)};
}

}  // namespace cellvote::metrics
