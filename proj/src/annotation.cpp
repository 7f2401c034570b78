#include "cellvote/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "cellvote/error.hpp"

namespace cellvote {

std::string_view to_string(CellClass c) {
  switch (c) {
    case CellClass::Circular: return "circular";
    case CellClass::Elongated: return "elongated";
    case CellClass::Other: return "other";
  }
  return "?";
}

std::string_view to_string(MergedClass c) {
  return c == MergedClass::Circular ? "circular" : "not_circular";
}

CellClass parse_cell_class(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (CellClass c : kAllClasses)
    if (lower == to_string(c)) return c;
  throw Error(ErrorKind::InvalidLabel, "unknown cell class '" + std::string(text) + "'");
}

Ballot::Ballot(std::string item_id, int k) : item_id_(std::move(item_id)), k_(k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "ballot redundancy k must be positive");
  votes_.reserve(static_cast<std::size_t>(k));
}

void Ballot::add(Vote vote) {
  if (vote.item_id != item_id_)
    throw Error(ErrorKind::InvalidBallot,
                "vote for item '" + vote.item_id + "' added to ballot of '" + item_id_ + "'");
  if (static_cast<int>(votes_.size()) >= k_)
    throw Error(ErrorKind::InvalidBallot,
                "item '" + item_id_ + "' already has " + std::to_string(k_) + " votes");
  for (const Vote& v : votes_)
    if (v.worker_id == vote.worker_id)
      throw Error(ErrorKind::InvalidBallot,
                  "worker '" + vote.worker_id + "' voted twice on item '" + item_id_ + "'");
  votes_.push_back(std::move(vote));
}

ClassCounts Ballot::counts() const {
  ClassCounts counts{};
  for (const Vote& v : votes_) ++counts[index_of(v.label)];
  return counts;
}

std::string AgreementPattern::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(counts[i]);
  }
  return out.empty() ? "0" : out;
}

AgreementPattern pattern_of(const ClassCounts& counts) {
  AgreementPattern pattern;
  for (int c : counts)
    if (c > 0) pattern.counts.push_back(c);
  std::sort(pattern.counts.begin(), pattern.counts.end(), std::greater<>());
  return pattern;
}

AgreementPattern classify_pattern(const Ballot& ballot) {
  if (!ballot.complete())
    throw Error(ErrorKind::IncompleteBallot,
                "item '" + ballot.item_id() + "' has " + std::to_string(ballot.votes().size()) +
                    " of " + std::to_string(ballot.k()) + " votes");
  return pattern_of(ballot.counts());
}

ConsensusResult aggregate(const Ballot& ballot, int quorum) {
  if (quorum < 1 || quorum > ballot.k() || 2 * quorum <= ballot.k())
    throw Error(ErrorKind::DomainError, "quorum " + std::to_string(quorum) +
                                            " is not a strict majority of k=" +
                                            std::to_string(ballot.k()));
  ConsensusResult result{ballot.item_id(), std::nullopt, classify_pattern(ballot), false};
  const ClassCounts counts = ballot.counts();
  for (CellClass c : kAllClasses) {
    if (counts[index_of(c)] >= quorum) {
      result.outcome = ConsensusLabel{c, counts[index_of(c)]};
      break;
    }
  }
  return result;
}

ConsensusResult expired_result(const Ballot& ballot) {
  return ConsensusResult{ballot.item_id(), std::nullopt, pattern_of(ballot.counts()), true};
}

std::optional<MergedClass> merge_result(const ConsensusResult& result) {
  if (!result.outcome) return std::nullopt;
  return merge_label(result.outcome->label);
}

double estimate_consensus_accuracy(double alpha, int k, int quorum) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorKind::DomainError, "alpha must lie in [0, 1]");
  if (k < 1) throw Error(ErrorKind::DomainError, "k must be positive");
  if (quorum < 1 || quorum > k)
    throw Error(ErrorKind::DomainError, "quorum must lie in [1, k]");

  // Sum the upper tail term by term; binomial coefficients built
  // multiplicatively stay exact in double for any practical k.
  double total = 0.0;
  double coefficient = 1.0;  // C(k, 0)
  for (int j = 0; j <= k; ++j) {
    if (j > 0) coefficient = coefficient * (k - j + 1) / j;
    if (j >= quorum) total += coefficient * std::pow(alpha, j) * std::pow(1.0 - alpha, k - j);
  }
  return std::clamp(total, 0.0, 1.0);
}

std::vector<Ballot> group_ballots(std::span<const Vote> votes, int k) {
  std::vector<Ballot> ballots;
  std::unordered_map<std::string, std::size_t> slot;
  for (const Vote& v : votes) {
    auto [it, inserted] = slot.try_emplace(v.item_id, ballots.size());
    if (inserted) ballots.emplace_back(v.item_id, k);
    ballots[it->second].add(v);
  }
  return ballots;
}

}  // namespace cellvote
