#pragma once
// Microtask lifecycle: batches of paired items, qualification-gated claims,
// joint submissions, timers and reward accounting. Every mutating command is
// applied under one writer lock and appended to a journal, so replaying the
// journal rebuilds the same state.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellvote/annotation.hpp"
#include "cellvote/time.hpp"

namespace cellvote::crowd {

using Micros = std::int64_t;  // currency in millionths of a dollar
inline constexpr Micros kMicrosPerDollar = 1'000'000;

struct OrchestratorConfig {
  int k = kDefaultRedundancy;
  int quorum = kDefaultQuorum;
  Micros reward = 10'000;  // per approved assignment
  Seconds assignment_duration = kHour;
  Seconds auto_approve_after = 7 * kDay;
  Seconds task_lifetime = 3 * kDay;
  double min_approval_rate = 0.90;  // strict: rate must exceed it
  bool require_master = true;
};

enum class TaskState { Open, Complete, Expired };
enum class AssignmentState { Claimed, Submitted, Expired, Approved, Rejected };
enum class Pairing { Sequential, Shuffle };

std::string_view to_string(TaskState s);
std::string_view to_string(AssignmentState s);
std::string_view to_string(Pairing p);
Pairing parse_pairing(std::string_view text);

struct WorkerProfile {
  std::string worker_id;
  bool is_master = false;
  // Review history brought from elsewhere; counts toward the approval rate.
  int prior_approved = 0;
  int prior_reviewed = 0;
  int submitted_count = 0;
  int approved_count = 0;
  int rejected_count = 0;
  Micros balance = 0;

  // Approved over reviewed (approved + rejected) HITs, 1.0 with no history.
  double approval_rate() const;
  bool operator==(const WorkerProfile&) const = default;
};

struct WorkerRegistration {
  std::string worker_id;
  bool is_master = false;
  // Either a rate (stored as history over 1000 HITs) or explicit counts.
  std::optional<double> approval_rate;
  int prior_approved = 0;
  int prior_reviewed = 0;
};

struct Task {
  std::string task_id;
  std::string batch_id;
  std::vector<std::string> items;  // one or two
  int k = kDefaultRedundancy;
  int quorum = kDefaultQuorum;
  Micros reward = 0;
  Seconds created_at = 0;
  Seconds expires_at = 0;
  TaskState state = TaskState::Open;
  std::vector<std::string> assignments;  // claim order
  std::vector<std::string> workers;      // everyone who ever claimed it
  std::vector<std::vector<Vote>> votes;  // per item, submission order
  std::vector<ConsensusResult> results;  // set when Complete or Expired
  int active = 0;                        // assignments not Expired
  int submitted = 0;

  bool operator==(const Task&) const = default;
};

struct Assignment {
  std::string assignment_id;
  std::string task_id;
  std::string worker_id;
  Seconds claimed_at = 0;
  Seconds deadline = 0;
  AssignmentState state = AssignmentState::Claimed;
  std::optional<Seconds> submitted_at;
  std::optional<Seconds> resolved_at;  // expiry, approval or rejection
  std::vector<CellClass> answers;
  std::string idempotency_key;

  bool operator==(const Assignment&) const = default;
};

struct LedgerEntry {
  std::string worker_id;
  std::string assignment_id;
  Micros amount = 0;
  std::string reason;  // "reward" or "bonus"
  Seconds at = 0;
  bool operator==(const LedgerEntry&) const = default;
};

struct Batch {
  std::string batch_id;
  std::vector<std::string> task_ids;
  std::map<std::string, CellClass> truth;  // optional expert labels
  Seconds created_at = 0;
  bool operator==(const Batch&) const = default;
};

struct BatchSpec {
  std::string batch_id;  // generated when empty
  std::vector<std::string> items;
  std::map<std::string, CellClass> truth;
  Pairing pairing = Pairing::Sequential;
  std::uint64_t seed = 0;
  std::optional<int> k;
  std::optional<Micros> reward;
  std::optional<Seconds> lifetime;
};

struct SubmitReceipt {
  std::string assignment_id;
  std::string task_id;
  int votes_recorded = 0;
  bool task_complete = false;
  Seconds submitted_at = 0;
};

struct SweepReport {
  std::vector<std::string> expired_assignments;
  std::vector<std::string> expired_tasks;
  std::vector<std::string> approved_assignments;
  bool empty() const {
    return expired_assignments.empty() && expired_tasks.empty() && approved_assignments.empty();
  }
};

struct State {
  std::map<std::string, WorkerProfile> workers;
  std::vector<Task> tasks;
  std::vector<Assignment> assignments;
  std::vector<Batch> batches;
  std::vector<LedgerEntry> ledger;
  std::uint64_t sequence = 0;  // commands applied

  // Lookup indexes, rebuilt from the vectors above.
  std::unordered_map<std::string, std::size_t> task_index;
  std::unordered_map<std::string, std::size_t> assignment_index;
  std::unordered_map<std::string, std::size_t> batch_index;
  std::unordered_set<std::string> items;
  std::set<std::size_t> open_tasks;

  const Task& task(const std::string& id) const;
  const Assignment& assignment(const std::string& id) const;
  const Batch& batch(const std::string& id) const;
  const WorkerProfile& worker(const std::string& id) const;
  void reindex();
};

nlohmann::json to_json(const WorkerProfile& w);
nlohmann::json to_json(const Task& t);
nlohmann::json to_json(const Assignment& a);
nlohmann::json to_json(const LedgerEntry& e);
nlohmann::json to_json(const Batch& b);
nlohmann::json to_json(const ConsensusResult& r);
nlohmann::json to_json(const State& s);
State state_from_json(const nlohmann::json& j);

// Append-only command log with periodic full-state snapshots. Without a
// directory the log lives in memory only.
class Journal {
 public:
  explicit Journal(std::optional<std::filesystem::path> dir = std::nullopt, int snapshot_every = 1000);

  void append(const nlohmann::json& command, const State& after);
  const std::vector<nlohmann::json>& commands() const { return commands_; }
  const std::optional<std::filesystem::path>& dir() const { return dir_; }

  // Latest snapshot on disk (or nullopt) and the logged commands after it.
  struct Recovery {
    std::optional<State> snapshot;
    std::vector<nlohmann::json> tail;
  };
  static Recovery recover(const std::filesystem::path& dir);

 private:
  void write_snapshot(const State& state) const;

  std::optional<std::filesystem::path> dir_;
  int snapshot_every_;
  std::vector<nlohmann::json> commands_;
};

class Orchestrator {
 public:
  explicit Orchestrator(OrchestratorConfig config = {}, std::shared_ptr<Journal> journal = nullptr);

  // Rebuilds state by re-running commands in order.
  static std::unique_ptr<Orchestrator> replay(OrchestratorConfig config, const std::vector<nlohmann::json>& commands,
                                              std::shared_ptr<Journal> journal = nullptr);
  // Snapshot plus journal tail from a directory, continuing to log there.
  static std::unique_ptr<Orchestrator> open(OrchestratorConfig config, const std::filesystem::path& dir,
                                            int snapshot_every = 1000);

  WorkerProfile register_worker(const WorkerRegistration& registration, Seconds now);
  Batch create_batch(const BatchSpec& spec, Seconds now);
  // Throws NotQualified, NoneAvailable or UnknownWorker.
  Assignment claim_next(const std::string& worker_id, Seconds now);
  // Throws DeadlineExceeded (and expires the assignment), WrongState,
  // InvalidArgument for a wrong answer count. Resubmitting with the same
  // idempotency key returns the original receipt.
  SubmitReceipt submit_answers(const std::string& assignment_id, const std::vector<CellClass>& answers, Seconds now,
                               const std::string& idempotency_key = "");
  Assignment approve(const std::string& assignment_id, Seconds now);
  Assignment reject(const std::string& assignment_id, Seconds now);
  SweepReport sweep(Seconds now);

  // Reads run under a shared lock against a consistent state.
  template <class F>
  auto read(F&& f) const {
    std::shared_lock lock(mutex_);
    return f(static_cast<const State&>(state_));
  }
  Task task_status(const std::string& task_id) const;
  WorkerProfile worker(const std::string& worker_id) const;
  Micros pending_earnings(const std::string& worker_id) const;
  std::vector<Vote> export_votes(const std::string& batch_id) const;
  Batch batch(const std::string& batch_id) const;
  Micros ledger_total() const;
  nlohmann::json snapshot() const;

  const OrchestratorConfig& config() const { return config_; }
  const Journal* journal() const { return journal_.get(); }

 private:
  // Applies a command under the writer lock and journals it if it changed
  // the state.
  template <class F>
  auto run(nlohmann::json& command, F&& apply);
  void replay_commands(const std::vector<nlohmann::json>& commands);

  OrchestratorConfig config_;
  std::shared_ptr<Journal> journal_;
  mutable std::shared_mutex mutex_;
  State state_;
};

}  // namespace cellvote::crowd
