#include "cellvote/report.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cellvote/error.hpp"

namespace cellvote::report {

using metrics::ConfusionMatrix;
using metrics::MetricsReport;
using metrics::NaPolicy;

std::vector<std::pair<std::string, int>> AgreementHistogram::summary() const {
  std::vector<std::pair<std::string, int>> out;
  for (int level = k; level >= quorum; --level) {
    std::string name = std::to_string(level);
    if (level == k - 1)
      name += "-1";
    else if (level < k - 1)
      name += "-*";
    const auto it = by_level.find(level);
    out.emplace_back(name, it == by_level.end() ? 0 : it->second);
  }
  out.emplace_back(k == 5 && quorum == 3 ? "2-2-1" : "no-consensus", no_consensus);
  return out;
}

Aggregation aggregate_votes(std::span<const Vote> votes, int k, int quorum) {
  Aggregation agg;
  agg.vote_count = votes.size();
  agg.histogram.k = k;
  agg.histogram.quorum = quorum;
  for (const Ballot& ballot : group_ballots(votes, k)) {
    if (!ballot.complete()) {
      ++agg.histogram.incomplete;
      agg.warnings.push_back("incomplete ballot: item '" + ballot.item_id() + "' has " +
                             std::to_string(ballot.votes().size()) + " of " + std::to_string(k) +
                             " votes");
      continue;
    }
    ConsensusResult r = aggregate(ballot, quorum);
    ++agg.histogram.by_pattern[r.pattern.to_string()];
    if (r.outcome)
      ++agg.histogram.by_level[r.outcome->agreement];
    else
      ++agg.histogram.no_consensus;
    agg.results.push_back(std::move(r));
  }
  return agg;
}

void print_histogram(std::ostream& out, const AgreementHistogram& histogram) {
  char line[96];
  out << "agreement histogram\n";
  for (const auto& [name, count] : histogram.summary()) {
    std::snprintf(line, sizeof line, "  %-12s %8d\n", name.c_str(), count);
    out << line;
  }
  std::snprintf(line, sizeof line, "  %-12s %8d\n", "incomplete", histogram.incomplete);
  out << line;
  out << "patterns\n";
  for (const auto& [name, count] : histogram.by_pattern) {
    std::snprintf(line, sizeof line, "  %-12s %8d\n", name.c_str(), count);
    out << line;
  }
}

CorpusReport build_report(std::span<const Vote> votes, const TruthIndex& truth, int k, int quorum,
                          NaPolicy na_policy) {
  CorpusReport rep;
  rep.k = k;
  rep.quorum = quorum;
  rep.na_policy = na_policy;
  rep.vote_matrix = metrics::build_vote_matrix(votes, truth);
  rep.aggregation = aggregate_votes(votes, k, quorum);
  rep.consensus_matrix = metrics::build_consensus_matrix(rep.aggregation.results, truth);

  auto add_row = [&](std::string name, const ConfusionMatrix& m) {
    rep.rows.push_back(MetricsRow{std::move(name), m, metrics::compute_report(m, na_policy),
                                  metrics::compute_report(metrics::merge_matrix(m), na_policy)});
  };
  add_row("Individual", rep.vote_matrix);
  add_row("Consensus", rep.consensus_matrix);
  for (int level = k; level >= quorum; --level) {
    std::vector<ConsensusResult> subset;
    for (const auto& r : rep.aggregation.results)
      if (r.outcome && r.outcome->agreement == level) subset.push_back(r);
    add_row(std::to_string(level) + " agree", metrics::build_consensus_matrix(subset, truth));
  }
  return rep;
}

std::vector<ReferenceCheck> reference_checks(const CorpusReport& report) {
  std::vector<ReferenceCheck> checks;
  auto check = [&](std::string table, std::string metric, double published, std::optional<double> computed) {
    const bool ok = computed && std::abs(*computed - published) <= 5e-4;
    checks.push_back(ReferenceCheck{std::move(table), std::move(metric), published, computed, ok});
  };
  const auto vote_acc = metrics::per_class_accuracy(report.vote_matrix, NaPolicy::Exclude);
  check("Table 1", "accuracy circular", 0.8674, vote_acc[0]);
  check("Table 1", "accuracy elongated", 0.6758, vote_acc[1]);
  check("Table 1", "accuracy other", 0.6120, vote_acc[2]);
  const auto cons_acc = metrics::per_class_accuracy(report.consensus_matrix, NaPolicy::CountAsError);
  check("Table 2", "consensus accuracy circular", 0.9173, cons_acc[0]);
  check("Table 2", "consensus accuracy elongated", 0.7072, cons_acc[1]);
  check("Table 2", "consensus accuracy other", 0.6400, cons_acc[2]);
  const MetricsRow& individual = report.rows.front();
  check("Table 4", "Individual SDS", 0.8759, individual.metrics3.sds);
  check("Table 4", "Individual F (macro)", 0.7802, individual.metrics3.f_macro);
  check("Table 4", "Individual CBA", 0.7193, individual.metrics3.cba);
  check("Table 4", "Individual MCC", 0.6748, individual.metrics3.mcc);
  check("Table 5", "Individual SDS", 0.8759, individual.metrics2.sds);
  check("Table 5", "Individual F (macro)", 0.8721, individual.metrics2.f_macro);
  check("Table 5", "Individual CBA", 0.8831, individual.metrics2.cba);
  check("Table 5", "Individual MCC", 0.7194, individual.metrics2.mcc);
  return checks;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

namespace {

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
  return buf;
}

std::string pad(const std::string& s, int width) {
  if (static_cast<int>(s.size()) >= width) return s;
  return std::string(static_cast<std::size_t>(width) - s.size(), ' ') + s;
}

std::string left(const std::string& s, int width) {
  if (static_cast<int>(s.size()) >= width) return s;
  return s + std::string(static_cast<std::size_t>(width) - s.size(), ' ');
}

void metrics_table(std::ostream& out, const std::vector<MetricsRow>& rows, bool merged) {
  out << left("Row", 14) << pad("SDS", 10) << pad("F(macro)", 10) << pad("F(wtd)", 10) << pad("CBA", 10)
      << pad("MCC", 10) << pad("Accuracy", 10) << pad("N/A", 10) << '\n';
  for (const MetricsRow& row : rows) {
    const MetricsReport& m = merged ? row.metrics2 : row.metrics3;
    out << left(row.name, 14) << pad(format_value(m.sds), 10) << pad(format_value(m.f_macro), 10)
        << pad(format_value(m.f_weighted), 10) << pad(format_value(m.cba), 10)
        << pad(format_value(m.mcc), 10) << pad(format_value(m.overall_accuracy), 10)
        << pad(format_value(m.na_rate), 10) << '\n';
  }
}

const char* policy_name(NaPolicy p) { return p == NaPolicy::Exclude ? "exclude" : "count_as_error"; }

}  // namespace

void render_text(std::ostream& out, const CorpusReport& rep) {
  const ConfusionMatrix& vm = rep.vote_matrix;
  out << "Table 1. Per-vote confusion matrix (rows: ground truth)\n";
  out << left("GT", 12) << pad("Circular", 10) << pad("Elongated", 10) << pad("Other", 10) << pad("Total", 10)
      << pad("Accuracy", 10) << '\n';
  const auto vote_acc = metrics::per_class_accuracy(vm, NaPolicy::Exclude);
  for (CellClass t : kAllClasses) {
    const std::size_t i = index_of(t);
    std::string name(to_string(t));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    out << left(name, 12);
    for (CellClass p : kAllClasses) out << pad(std::to_string(vm.at(i, index_of(p))), 10);
    out << pad(std::to_string(vm.row_total(i)), 10) << pad(percent(vote_acc[i]), 10) << '\n';
  }
  out << '\n';

  const ConfusionMatrix& cm = rep.consensus_matrix;
  const auto cons_acc = metrics::per_class_accuracy(cm, NaPolicy::CountAsError);
  out << "Table 2. Consensus (quorum " << rep.quorum << " of " << rep.k << "), N/A counted as error\n";
  out << left("Class", 12) << pad("Correct", 10) << pad("N/A", 10) << pad("Total", 10) << pad("Accuracy", 10)
      << '\n';
  for (CellClass t : kAllClasses) {
    const std::size_t i = index_of(t);
    std::string name(to_string(t));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    out << left(name, 12) << pad(std::to_string(cm.at(i, i)), 10) << pad(std::to_string(cm.na(i)), 10)
        << pad(std::to_string(cm.row_total(i) + cm.na(i)), 10) << pad(percent(cons_acc[i]), 10) << '\n';
  }
  out << '\n';

  out << "Table 3. Independence estimate vs observed consensus accuracy\n";
  out << left("Class", 12) << pad("alpha", 10) << pad("Estimated", 11) << pad("Observed", 10) << '\n';
  for (CellClass t : kAllClasses) {
    const std::size_t i = index_of(t);
    std::optional<double> estimated;
    if (vote_acc[i]) estimated = estimate_consensus_accuracy(*vote_acc[i], rep.k, rep.quorum);
    std::string name(to_string(t));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    out << left(name, 12) << pad(format_value(vote_acc[i]), 10) << pad(percent(estimated), 11)
        << pad(percent(cons_acc[i]), 10) << '\n';
  }
  out << '\n';

  out << "Table 4. Metrics, 3 classes (N/A policy: " << policy_name(rep.na_policy) << ")\n";
  metrics_table(out, rep.rows, false);
  out << '\n';
  out << "Table 5. Metrics, 2 classes (elongated and other merged)\n";
  metrics_table(out, rep.rows, true);
  out << '\n';

  print_histogram(out, rep.aggregation.histogram);
  out << '\n';

  out << "Reference comparison (published individual-annotator figures)\n";
  for (const ReferenceCheck& c : reference_checks(rep)) {
    out << "  " << left(c.table, 8) << left(c.metric, 30) << " published " << format_value(c.published)
        << "  computed " << left(format_value(c.computed), 7) << "  "
        << (c.matches ? "match" : "DISCREPANCY") << '\n';
  }
  for (const auto& w : rep.aggregation.warnings) out << "warning: " << w << '\n';
}

void render_csv(std::ostream& out, const CorpusReport& rep) {
  out << "table,row,column,value\n";
  static const char* names[] = {"circular", "elongated", "other"};
  for (std::size_t t = 0; t < kNumClasses; ++t)
    for (std::size_t p = 0; p < kNumClasses; ++p)
      out << "votes," << names[t] << ',' << names[p] << ',' << rep.vote_matrix.at(t, p) << '\n';
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    for (std::size_t p = 0; p < kNumClasses; ++p)
      out << "consensus," << names[t] << ',' << names[p] << ',' << rep.consensus_matrix.at(t, p) << '\n';
    out << "consensus," << names[t] << ",na," << rep.consensus_matrix.na(t) << '\n';
  }
  for (const MetricsRow& row : rep.rows) {
    for (int merged = 0; merged < 2; ++merged) {
      const MetricsReport& m = merged ? row.metrics2 : row.metrics3;
      const std::string table = merged ? "metrics_2class" : "metrics_3class";
      out << table << ',' << row.name << ",sds," << format_value(m.sds) << '\n';
      out << table << ',' << row.name << ",f_macro," << format_value(m.f_macro) << '\n';
      out << table << ',' << row.name << ",f_weighted," << format_value(m.f_weighted) << '\n';
      out << table << ',' << row.name << ",cba," << format_value(m.cba) << '\n';
      out << table << ',' << row.name << ",mcc," << format_value(m.mcc) << '\n';
      out << table << ',' << row.name << ",accuracy," << format_value(m.overall_accuracy) << '\n';
      out << table << ',' << row.name << ",na_rate," << format_value(m.na_rate) << '\n';
    }
  }
}

namespace {

nlohmann::json rounded(const std::optional<double>& v) {
  if (!v) return nullptr;
  return std::round(*v * 1e4) / 1e4;
}

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json acc = nlohmann::json::array();
  for (const auto& a : m.per_class_accuracy) acc.push_back(rounded(a));
  return {{"per_class_accuracy", acc}, {"accuracy", rounded(m.overall_accuracy)},
          {"f_macro", rounded(m.f_macro)},   {"f_weighted", rounded(m.f_weighted)},
          {"sds", rounded(m.sds)},           {"cba", rounded(m.cba)},
          {"mcc", rounded(m.mcc)},           {"na_rate", rounded(m.na_rate)}};
}

}  // namespace

void render_jsonl(std::ostream& out, const CorpusReport& rep) {
  for (const MetricsRow& row : rep.rows) {
    nlohmann::json j = {{"row", row.name}, {"three_class", to_json(row.metrics3)},
                        {"two_class", to_json(row.metrics2)}};
    out << j.dump() << '\n';
  }
}

}  // namespace cellvote::report
