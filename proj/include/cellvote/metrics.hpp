#pragma once

// Confusion matrices (rows = ground truth, columns = prediction) and the
// annotation-quality metrics computed from them.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cellvote/annotation.hpp"
#include "cellvote/dataset.hpp"

namespace cellvote::metrics {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes);
  // Row-major n x n counts; na may be empty (treated as zeros).
  ConfusionMatrix(std::size_t n_classes, std::vector<std::int64_t> counts,
                  std::vector<std::int64_t> na = {});

  std::size_t n_classes() const { return n_; }
  std::int64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::int64_t na(std::size_t truth) const { return na_[truth]; }

  void add(std::size_t truth, std::size_t predicted, std::int64_t count = 1);
  void add_na(std::size_t truth, std::int64_t count = 1);

  std::int64_t row_total(std::size_t truth) const;
  std::int64_t column_total(std::size_t predicted) const;
  std::int64_t total() const;  // excludes N/A
  std::int64_t correct() const;
  std::int64_t na_total() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> na_;
};

enum class NaPolicy { Exclude, CountAsError };
enum class Averaging { Macro, Weighted };

// Throws Error(UnknownItem) when a vote has no ground truth.
ConfusionMatrix build_vote_matrix(std::span<const Vote> votes, const TruthIndex& truth);

// Label outcomes fill counts; NoConsensus increments the true class N/A cell.
ConfusionMatrix build_consensus_matrix(std::span<const ConsensusResult> results, const TruthIndex& truth);

// Absent entries mark classes with an empty denominator.
std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& m, NaPolicy policy);
std::optional<double> overall_accuracy(const ConfusionMatrix& m, NaPolicy policy);

// Class index 0 is Circular. Errors between the deformed classes (indices 1
// and 2) count with the correct cells; every confusion that involves the
// circular class counts against.
std::optional<double> sds_score(const ConfusionMatrix& m);

// Classes with zero support are left out of the macro mean.
std::optional<double> f_measure(const ConfusionMatrix& m, Averaging averaging);

// Mean over classes of diag / max(row total, column total), skipping classes
// with both totals zero.
std::optional<double> cba(const ConfusionMatrix& m);

// Multi-class (Gorodkin) MCC; 0 when either radicand vanishes.
std::optional<double> mcc(const ConfusionMatrix& m);

// Collapses elongated and other into not-circular; N/A counts carried over.
ConfusionMatrix merge_matrix(const ConfusionMatrix& m);

struct MetricsReport {
  std::vector<std::optional<double>> per_class_accuracy;
  std::optional<double> overall_accuracy;
  std::optional<double> f_macro;
  std::optional<double> f_weighted;
  std::optional<double> sds;
  std::optional<double> cba;
  std::optional<double> mcc;
  double na_rate = 0.0;
};

MetricsReport compute_report(const ConfusionMatrix& m, NaPolicy policy);

struct DualReport {
  MetricsReport three_class;
  MetricsReport two_class;
};

DualReport full_report(const ConfusionMatrix& three_class, NaPolicy policy);

}  // namespace cellvote::metrics
