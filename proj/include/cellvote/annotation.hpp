#pragma once

// Label alphabet, ballots and the quorum rule used to turn k redundant votes
// into a single consensus label.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cellvote/time.hpp"

namespace cellvote {

enum class CellClass : std::uint8_t { Circular = 0, Elongated = 1, Other = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<CellClass, kNumClasses> kAllClasses = {
    CellClass::Circular, CellClass::Elongated, CellClass::Other};

enum class MergedClass : std::uint8_t { Circular = 0, NotCircular = 1 };

inline constexpr int kDefaultRedundancy = 5;
inline constexpr int kDefaultQuorum = 3;

constexpr std::size_t index_of(CellClass c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index_of(MergedClass c) { return static_cast<std::size_t>(c); }

std::string_view to_string(CellClass c);
std::string_view to_string(MergedClass c);

// Case-insensitive; anything outside {circular, elongated, other} throws
// Error(InvalidLabel).
CellClass parse_cell_class(std::string_view text);

constexpr MergedClass merge_label(CellClass c) {
  return c == CellClass::Circular ? MergedClass::Circular : MergedClass::NotCircular;
}

struct Vote {
  std::string worker_id;
  std::string item_id;
  CellClass label = CellClass::Circular;
  Seconds submitted_at = 0;

  bool operator==(const Vote&) const = default;
};

using ClassCounts = std::array<int, kNumClasses>;

// Votes collected for one item. add() enforces the ballot invariants: one
// item, distinct workers, at most k votes.
class Ballot {
 public:
  explicit Ballot(std::string item_id, int k = kDefaultRedundancy);

  void add(Vote vote);

  const std::string& item_id() const { return item_id_; }
  std::span<const Vote> votes() const { return votes_; }
  int k() const { return k_; }
  bool complete() const { return static_cast<int>(votes_.size()) == k_; }
  ClassCounts counts() const;

 private:
  std::string item_id_;
  int k_;
  std::vector<Vote> votes_;
};

// Descending, zero-free vote counts per class, e.g. {3, 1, 1}.
struct AgreementPattern {
  std::vector<int> counts;

  int max_count() const { return counts.empty() ? 0 : counts.front(); }
  std::string to_string() const;  // "3-1-1"
  bool operator==(const AgreementPattern&) const = default;
};

AgreementPattern pattern_of(const ClassCounts& counts);

struct ConsensusLabel {
  CellClass label;
  int agreement;  // number of coinciding votes, >= quorum

  bool operator==(const ConsensusLabel&) const = default;
};

struct ConsensusResult {
  std::string item_id;
  std::optional<ConsensusLabel> outcome;  // empty means NoConsensus
  AgreementPattern pattern;
  // Set when the task expired before collecting k votes; outcome is empty.
  bool expired = false;

  bool has_label() const { return outcome.has_value(); }
  bool operator==(const ConsensusResult&) const = default;
};

// Throws Error(IncompleteBallot) unless the ballot holds exactly k votes.
AgreementPattern classify_pattern(const Ballot& ballot);

// Label(c, m) when some class collects m >= quorum votes, NoConsensus
// otherwise. quorum must be a strict majority of k so the winner is unique.
ConsensusResult aggregate(const Ballot& ballot, int quorum = kDefaultQuorum);

// NoConsensus for a ballot closed early (task expiry); never throws.
ConsensusResult expired_result(const Ballot& ballot);

// Merging is applied to the aggregated outcome; NoConsensus stays empty.
std::optional<MergedClass> merge_result(const ConsensusResult& result);

// P(X >= quorum) for X ~ Binomial(k, alpha): probability that a quorum of k
// independent annotators with accuracy alpha all pick the true class.
double estimate_consensus_accuracy(double alpha, int k = kDefaultRedundancy,
                                   int quorum = kDefaultQuorum);

// Groups votes by item in first-appearance order. Votes that violate ballot
// invariants throw Error(InvalidBallot).
std::vector<Ballot> group_ballots(std::span<const Vote> votes, int k = kDefaultRedundancy);

class GroundTruthRecord {
 public:
  GroundTruthRecord(std::string item_id, CellClass true_label, std::string source_image_id,
                    std::string crop_path)
      : item_id_(std::move(item_id)),
        true_label_(true_label),
        source_image_id_(std::move(source_image_id)),
        crop_path_(std::move(crop_path)) {}

  const std::string& item_id() const { return item_id_; }
  CellClass true_label() const { return true_label_; }
  const std::string& source_image_id() const { return source_image_id_; }
  const std::string& crop_path() const { return crop_path_; }

 private:
  std::string item_id_;
  CellClass true_label_;
  std::string source_image_id_;
  std::string crop_path_;
};

}  // namespace cellvote
