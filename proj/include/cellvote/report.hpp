#pragma once

// Corpus-level analysis: per-vote and consensus matrices, agreement-level
// splits, and the table layouts used by `cellvote report`.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellvote/annotation.hpp"
#include "cellvote/dataset.hpp"
#include "cellvote/metrics.hpp"

namespace cellvote::report {

struct AgreementHistogram {
  std::map<int, int> by_level;               // agreement level -> items with a label
  std::map<std::string, int> by_pattern;     // "3-1-1" -> items (complete ballots only)
  int no_consensus = 0;
  int incomplete = 0;
  int k = kDefaultRedundancy;
  int quorum = kDefaultQuorum;

  // Bucket names of the summary: "5", "4-1", "3-*", and "2-2-1" for k=5.
  std::vector<std::pair<std::string, int>> summary() const;
};

struct Aggregation {
  std::vector<ConsensusResult> results;  // complete ballots, first-appearance order
  AgreementHistogram histogram;
  std::vector<std::string> warnings;     // incomplete ballots
  std::size_t vote_count = 0;
};

// Incomplete ballots are reported as warnings and left out of results.
Aggregation aggregate_votes(std::span<const Vote> votes, int k = kDefaultRedundancy,
                            int quorum = kDefaultQuorum);

void print_histogram(std::ostream& out, const AgreementHistogram& histogram);

struct MetricsRow {
  std::string name;
  metrics::ConfusionMatrix three_class;
  metrics::MetricsReport metrics3;
  metrics::MetricsReport metrics2;
};

struct CorpusReport {
  metrics::ConfusionMatrix vote_matrix{kNumClasses};
  metrics::ConfusionMatrix consensus_matrix{kNumClasses};
  std::vector<MetricsRow> rows;  // Individual, Consensus, then one per agreement level
  Aggregation aggregation;
  int k = kDefaultRedundancy;
  int quorum = kDefaultQuorum;
  metrics::NaPolicy na_policy = metrics::NaPolicy::Exclude;
};

CorpusReport build_report(std::span<const Vote> votes, const TruthIndex& truth,
                          int k = kDefaultRedundancy, int quorum = kDefaultQuorum,
                          metrics::NaPolicy na_policy = metrics::NaPolicy::Exclude);

// A published individual-annotator figure next to the value computed here.
struct ReferenceCheck {
  std::string table;
  std::string metric;
  double published;
  std::optional<double> computed;
  bool matches;  // |published - computed| <= 5e-4 (4-decimal rounding)
};

std::vector<ReferenceCheck> reference_checks(const CorpusReport& report);

std::string format_value(const std::optional<double>& v);  // 4 decimals, "-" when absent

void render_text(std::ostream& out, const CorpusReport& report);
// Long format: table,row,column,value
void render_csv(std::ostream& out, const CorpusReport& report);
// One JSON object per metrics row.
void render_jsonl(std::ostream& out, const CorpusReport& report);

}  // namespace cellvote::report
