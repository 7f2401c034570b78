#include "cellvote/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>

#include "cellvote/error.hpp"
#include "cellvote/records.hpp"
#include "cellvote/rng.hpp"

namespace cellvote::crowd {

using nlohmann::json;

std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::Open: return "open";
    case TaskState::Complete: return "complete";
    case TaskState::Expired: return "expired";
  }
  return "?";
}

std::string_view to_string(AssignmentState s) {
  switch (s) {
    case AssignmentState::Claimed: return "claimed";
    case AssignmentState::Submitted: return "submitted";
    case AssignmentState::Expired: return "expired";
    case AssignmentState::Approved: return "approved";
    case AssignmentState::Rejected: return "rejected";
  }
  return "?";
}

std::string_view to_string(Pairing p) { return p == Pairing::Sequential ? "sequential" : "shuffle"; }

Pairing parse_pairing(std::string_view text) {
  if (text == "sequential") return Pairing::Sequential;
  if (text == "shuffle") return Pairing::Shuffle;
  throw Error(ErrorKind::InvalidArgument, "unknown pairing policy '" + std::string(text) + "'");
}

double WorkerProfile::approval_rate() const {
  const int reviewed = prior_reviewed + approved_count + rejected_count;
  if (reviewed == 0) return 1.0;
  return static_cast<double>(prior_approved + approved_count) / reviewed;
}

namespace {

template <class E>
E enum_from(std::string_view text, std::initializer_list<E> values) {
  for (E v : values)
    if (to_string(v) == text) return v;
  throw Error(ErrorKind::ParseError, "unknown state '" + std::string(text) + "'");
}

std::string numbered(const char* prefix, std::size_t n, int width) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%0*zu", prefix, width, n);
  return buf;
}

template <class T>
const T& lookup(const std::unordered_map<std::string, std::size_t>& index, const std::vector<T>& items,
                const std::string& id, ErrorKind kind, const char* what) {
  const auto it = index.find(id);
  if (it == index.end()) throw Error(kind, std::string("unknown ") + what + " '" + id + "'");
  return items[it->second];
}

}  // namespace

const Task& State::task(const std::string& id) const {
  return lookup(task_index, tasks, id, ErrorKind::UnknownTask, "task");
}
const Assignment& State::assignment(const std::string& id) const {
  return lookup(assignment_index, assignments, id, ErrorKind::UnknownAssignment, "assignment");
}
const Batch& State::batch(const std::string& id) const {
  return lookup(batch_index, batches, id, ErrorKind::UnknownBatch, "batch");
}
const WorkerProfile& State::worker(const std::string& id) const {
  const auto it = workers.find(id);
  if (it == workers.end()) throw Error(ErrorKind::UnknownWorker, "unknown worker '" + id + "'");
  return it->second;
}

void State::reindex() {
  task_index.clear();
  assignment_index.clear();
  batch_index.clear();
  items.clear();
  open_tasks.clear();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    task_index.emplace(tasks[i].task_id, i);
    items.insert(tasks[i].items.begin(), tasks[i].items.end());
    if (tasks[i].state == TaskState::Open) open_tasks.insert(i);
  }
  for (std::size_t i = 0; i < assignments.size(); ++i) assignment_index.emplace(assignments[i].assignment_id, i);
  for (std::size_t i = 0; i < batches.size(); ++i) batch_index.emplace(batches[i].batch_id, i);
}

// ---- serialization ----

namespace {

json optional_time(const std::optional<Seconds>& t) { return t ? json(*t) : json(nullptr); }

std::optional<Seconds> optional_time(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<Seconds>();
}

json vote_json(const Vote& v) {
  return {{"worker_id", v.worker_id}, {"label", to_string(v.label)}, {"submitted_at", v.submitted_at}};
}

AgreementPattern parse_pattern(const std::string& text) {
  AgreementPattern p;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t dash = text.find('-', start);
    p.counts.push_back(std::stoi(text.substr(start, dash - start)));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  return p;
}

ConsensusResult result_from_json(const json& j) {
  ConsensusResult r;
  r.item_id = j.at("item_id").get<std::string>();
  if (!j.at("label").is_null())
    r.outcome = ConsensusLabel{parse_cell_class(j.at("label").get<std::string>()), j.at("agreement").get<int>()};
  r.pattern = parse_pattern(j.at("pattern").get<std::string>());
  r.expired = j.at("expired").get<bool>();
  return r;
}

}  // namespace

json to_json(const WorkerProfile& w) {
  return {{"worker_id", w.worker_id},
          {"is_master", w.is_master},
          {"prior_approved", w.prior_approved},
          {"prior_reviewed", w.prior_reviewed},
          {"submitted_count", w.submitted_count},
          {"approved_count", w.approved_count},
          {"rejected_count", w.rejected_count},
          {"approval_rate", w.approval_rate()},
          {"balance_micros", w.balance}};
}

json to_json(const ConsensusResult& r) {
  json j = {{"item_id", r.item_id}, {"pattern", r.pattern.to_string()}, {"expired", r.expired}};
  if (r.outcome) {
    j["label"] = to_string(r.outcome->label);
    j["agreement"] = r.outcome->agreement;
  } else {
    j["label"] = nullptr;
    j["agreement"] = nullptr;
  }
  return j;
}

json to_json(const Task& t) {
  json votes = json::array();
  for (const auto& per_item : t.votes) {
    json list = json::array();
    for (const Vote& v : per_item) list.push_back(vote_json(v));
    votes.push_back(std::move(list));
  }
  json results = json::array();
  for (const auto& r : t.results) results.push_back(to_json(r));
  return {{"task_id", t.task_id},         {"batch_id", t.batch_id},
          {"items", t.items},             {"k", t.k},
          {"quorum", t.quorum},           {"reward_micros", t.reward},
          {"created_at", t.created_at},   {"expires_at", t.expires_at},
          {"state", to_string(t.state)},  {"assignments", t.assignments},
          {"workers", t.workers},         {"votes", std::move(votes)},
          {"results", std::move(results)}, {"active", t.active},
          {"submitted", t.submitted}};
}

json to_json(const Assignment& a) {
  json answers = json::array();
  for (CellClass c : a.answers) answers.push_back(to_string(c));
  return {{"assignment_id", a.assignment_id},
          {"task_id", a.task_id},
          {"worker_id", a.worker_id},
          {"claimed_at", a.claimed_at},
          {"deadline", a.deadline},
          {"state", to_string(a.state)},
          {"submitted_at", optional_time(a.submitted_at)},
          {"resolved_at", optional_time(a.resolved_at)},
          {"answers", std::move(answers)},
          {"idempotency_key", a.idempotency_key}};
}

json to_json(const LedgerEntry& e) {
  return {{"worker_id", e.worker_id},
          {"assignment_id", e.assignment_id},
          {"amount_micros", e.amount},
          {"reason", e.reason},
          {"at", e.at}};
}

json to_json(const Batch& b) {
  json truth = json::object();
  for (const auto& [item, label] : b.truth) truth[item] = to_string(label);
  return {{"batch_id", b.batch_id}, {"task_ids", b.task_ids}, {"truth", std::move(truth)}, {"created_at", b.created_at}};
}

json to_json(const State& s) {
  json workers = json::array(), tasks = json::array(), assignments = json::array(), batches = json::array(),
       ledger = json::array();
  for (const auto& [id, w] : s.workers) workers.push_back(to_json(w));
  for (const auto& t : s.tasks) tasks.push_back(to_json(t));
  for (const auto& a : s.assignments) assignments.push_back(to_json(a));
  for (const auto& b : s.batches) batches.push_back(to_json(b));
  for (const auto& e : s.ledger) ledger.push_back(to_json(e));
  return {{"sequence", s.sequence}, {"workers", std::move(workers)}, {"tasks", std::move(tasks)},
          {"assignments", std::move(assignments)}, {"batches", std::move(batches)}, {"ledger", std::move(ledger)}};
}

State state_from_json(const json& j) {
  State s;
  s.sequence = j.at("sequence").get<std::uint64_t>();
  for (const json& w : j.at("workers")) {
    WorkerProfile p;
    p.worker_id = w.at("worker_id").get<std::string>();
    p.is_master = w.at("is_master").get<bool>();
    p.prior_approved = w.at("prior_approved").get<int>();
    p.prior_reviewed = w.at("prior_reviewed").get<int>();
    p.submitted_count = w.at("submitted_count").get<int>();
    p.approved_count = w.at("approved_count").get<int>();
    p.rejected_count = w.at("rejected_count").get<int>();
    p.balance = w.at("balance_micros").get<Micros>();
    s.workers.emplace(p.worker_id, p);
  }
  for (const json& t : j.at("tasks")) {
    Task task;
    task.task_id = t.at("task_id").get<std::string>();
    task.batch_id = t.at("batch_id").get<std::string>();
    task.items = t.at("items").get<std::vector<std::string>>();
    task.k = t.at("k").get<int>();
    task.quorum = t.at("quorum").get<int>();
    task.reward = t.at("reward_micros").get<Micros>();
    task.created_at = t.at("created_at").get<Seconds>();
    task.expires_at = t.at("expires_at").get<Seconds>();
    task.state = enum_from(t.at("state").get<std::string>(), {TaskState::Open, TaskState::Complete, TaskState::Expired});
    task.assignments = t.at("assignments").get<std::vector<std::string>>();
    task.workers = t.at("workers").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < t.at("votes").size(); ++i) {
      std::vector<Vote> votes;
      for (const json& v : t.at("votes")[i])
        votes.push_back(Vote{v.at("worker_id").get<std::string>(), task.items.at(i),
                             parse_cell_class(v.at("label").get<std::string>()), v.at("submitted_at").get<Seconds>()});
      task.votes.push_back(std::move(votes));
    }
    for (const json& r : t.at("results")) task.results.push_back(result_from_json(r));
    task.active = t.at("active").get<int>();
    task.submitted = t.at("submitted").get<int>();
    s.tasks.push_back(std::move(task));
  }
  for (const json& a : j.at("assignments")) {
    Assignment x;
    x.assignment_id = a.at("assignment_id").get<std::string>();
    x.task_id = a.at("task_id").get<std::string>();
    x.worker_id = a.at("worker_id").get<std::string>();
    x.claimed_at = a.at("claimed_at").get<Seconds>();
    x.deadline = a.at("deadline").get<Seconds>();
    x.state = enum_from(a.at("state").get<std::string>(),
                        {AssignmentState::Claimed, AssignmentState::Submitted, AssignmentState::Expired,
                         AssignmentState::Approved, AssignmentState::Rejected});
    x.submitted_at = optional_time(a.at("submitted_at"));
    x.resolved_at = optional_time(a.at("resolved_at"));
    for (const json& c : a.at("answers")) x.answers.push_back(parse_cell_class(c.get<std::string>()));
    x.idempotency_key = a.at("idempotency_key").get<std::string>();
    s.assignments.push_back(std::move(x));
  }
  for (const json& b : j.at("batches")) {
    Batch batch;
    batch.batch_id = b.at("batch_id").get<std::string>();
    batch.task_ids = b.at("task_ids").get<std::vector<std::string>>();
    for (const auto& [item, label] : b.at("truth").items())
      batch.truth.emplace(item, parse_cell_class(label.get<std::string>()));
    batch.created_at = b.at("created_at").get<Seconds>();
    s.batches.push_back(std::move(batch));
  }
  for (const json& e : j.at("ledger"))
    s.ledger.push_back(LedgerEntry{e.at("worker_id").get<std::string>(), e.at("assignment_id").get<std::string>(),
                                   e.at("amount_micros").get<Micros>(), e.at("reason").get<std::string>(),
                                   e.at("at").get<Seconds>()});
  s.reindex();
  return s;
}

// ---- journal ----

namespace {
constexpr const char* kCommandsFile = "commands.jsonl";
constexpr const char* kSnapshotFile = "snapshot.json";
}  // namespace

Journal::Journal(std::optional<std::filesystem::path> dir, int snapshot_every)
    : dir_(std::move(dir)), snapshot_every_(snapshot_every) {
  if (dir_) {
    std::error_code ec;
    std::filesystem::create_directories(*dir_, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create journal directory '" + dir_->string() + "'");
  }
}

void Journal::append(const json& command, const State& after) {
  commands_.push_back(command);
  if (!dir_) return;
  std::ofstream out(*dir_ / kCommandsFile, std::ios::app);
  out << command.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "cannot append to journal in '" + dir_->string() + "'");
  if (snapshot_every_ > 0 && after.sequence % static_cast<std::uint64_t>(snapshot_every_) == 0) write_snapshot(after);
}

void Journal::write_snapshot(const State& state) const {
  const auto tmp = *dir_ / (std::string(kSnapshotFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << to_json(state).dump() << '\n';
    if (!out) throw Error(ErrorKind::IoError, "cannot write snapshot in '" + dir_->string() + "'");
  }
  std::filesystem::rename(tmp, *dir_ / kSnapshotFile);
}

Journal::Recovery Journal::recover(const std::filesystem::path& dir) {
  Recovery r;
  std::uint64_t after = 0;
  if (std::ifstream in(dir / kSnapshotFile); in) {
    try {
      r.snapshot = state_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("corrupt snapshot: ") + e.what());
    }
    after = r.snapshot->sequence;
  }
  std::ifstream in(dir / kCommandsFile);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json command;
    try {
      command = json::parse(line);
    } catch (const json::exception&) {
      throw Error(ErrorKind::ParseError, "corrupt journal entry at line " + std::to_string(line_no));
    }
    if (command.at("seq").get<std::uint64_t>() > after) r.tail.push_back(std::move(command));
  }
  return r;
}

// ---- commands ----

namespace {

Task& task_mut(State& s, const std::string& id) { return const_cast<Task&>(s.task(id)); }
Assignment& assignment_mut(State& s, const std::string& id) { return const_cast<Assignment&>(s.assignment(id)); }
WorkerProfile& worker_mut(State& s, const std::string& id) { return const_cast<WorkerProfile&>(s.worker(id)); }

bool qualified(const WorkerProfile& w, const OrchestratorConfig& config) {
  return (!config.require_master || w.is_master) && w.approval_rate() > config.min_approval_rate;
}

void close_task(State& s, Task& t, TaskState to) {
  t.state = to;
  s.open_tasks.erase(s.task_index.at(t.task_id));
  t.results.clear();
  for (std::size_t i = 0; i < t.items.size(); ++i) {
    Ballot ballot(t.items[i], t.k);
    for (const Vote& v : t.votes[i]) ballot.add(v);
    t.results.push_back(to == TaskState::Complete ? aggregate(ballot, t.quorum) : expired_result(ballot));
  }
}

void expire_assignment(Task& t, Assignment& a, Seconds now) {
  a.state = AssignmentState::Expired;
  a.resolved_at = now;
  --t.active;
}

void credit(State& s, Assignment& a, Micros amount, Seconds now) {
  a.state = AssignmentState::Approved;
  a.resolved_at = now;
  WorkerProfile& w = worker_mut(s, a.worker_id);
  ++w.approved_count;
  w.balance += amount;
  s.ledger.push_back(LedgerEntry{a.worker_id, a.assignment_id, amount, "reward", now});
}

void apply_register(State& s, const json& c) {
  WorkerProfile w;
  w.worker_id = c.at("worker_id").get<std::string>();
  if (s.workers.count(w.worker_id)) throw Error(ErrorKind::DuplicateWorker, "worker '" + w.worker_id + "' exists");
  w.is_master = c.at("is_master").get<bool>();
  w.prior_approved = c.at("prior_approved").get<int>();
  w.prior_reviewed = c.at("prior_reviewed").get<int>();
  s.workers.emplace(w.worker_id, w);
}

Batch apply_create_batch(State& s, const json& c) {
  const auto items = c.at("items").get<std::vector<std::string>>();
  const std::string batch_id = c.at("batch_id").get<std::string>();
  if (items.empty()) throw Error(ErrorKind::EmptyBatch, "batch has no items");
  if (s.batch_index.count(batch_id)) throw Error(ErrorKind::InvalidArgument, "batch '" + batch_id + "' exists");
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    validate_identifier(item, "item_id");
    if (s.items.count(item) || !seen.insert(item).second)
      throw Error(ErrorKind::DuplicateItem, "item '" + item + "' is already scheduled");
  }
  Batch batch;
  batch.batch_id = batch_id;
  batch.created_at = c.at("now").get<Seconds>();
  for (const auto& [item, label] : c.at("truth").items()) {
    if (!seen.count(item)) throw Error(ErrorKind::UnknownItem, "truth for unknown item '" + item + "'");
    batch.truth.emplace(item, parse_cell_class(label.get<std::string>()));
  }
  const int k = c.at("k").get<int>();
  const int quorum = c.at("quorum").get<int>();
  if (k < 1 || quorum <= k / 2 || quorum > k)
    throw Error(ErrorKind::InvalidArgument, "quorum must be a strict majority of k");
  const Micros reward = c.at("reward").get<Micros>();
  if (reward <= 0) throw Error(ErrorKind::InvalidArgument, "reward must be positive");
  const Seconds lifetime = c.at("lifetime").get<Seconds>();
  if (lifetime <= 0) throw Error(ErrorKind::InvalidArgument, "task lifetime must be positive");

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (parse_pairing(c.at("pairing").get<std::string>()) == Pairing::Shuffle) {
    KeyedStream rng(mix(c.at("seed").get<std::uint64_t>(), hash_id(batch_id)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }
  for (std::size_t i = 0; i < order.size(); i += 2) {
    Task t;
    t.task_id = numbered("task", s.tasks.size() + 1, 6);
    t.batch_id = batch_id;
    t.items.push_back(items[order[i]]);
    if (i + 1 < order.size()) t.items.push_back(items[order[i + 1]]);
    t.k = k;
    t.quorum = quorum;
    t.reward = reward;
    t.created_at = batch.created_at;
    t.expires_at = batch.created_at + lifetime;
    t.votes.resize(t.items.size());
    batch.task_ids.push_back(t.task_id);
    s.items.insert(t.items.begin(), t.items.end());
    s.task_index.emplace(t.task_id, s.tasks.size());
    s.open_tasks.insert(s.tasks.size());
    s.tasks.push_back(std::move(t));
  }
  s.batch_index.emplace(batch_id, s.batches.size());
  s.batches.push_back(batch);
  return batch;
}

Assignment apply_claim(State& s, const OrchestratorConfig& config, const json& c) {
  const std::string worker_id = c.at("worker_id").get<std::string>();
  const Seconds now = c.at("now").get<Seconds>();
  const WorkerProfile& w = s.worker(worker_id);
  if (!qualified(w, config))
    throw Error(ErrorKind::NotQualified, "worker '" + worker_id + "' does not meet the qualification");
  for (std::size_t index : s.open_tasks) {
    Task& t = s.tasks[index];
    if (now >= t.expires_at || t.active >= t.k) continue;
    if (std::find(t.workers.begin(), t.workers.end(), worker_id) != t.workers.end()) continue;
    Assignment a;
    a.assignment_id = numbered("asg", s.assignments.size() + 1, 7);
    a.task_id = t.task_id;
    a.worker_id = worker_id;
    a.claimed_at = now;
    a.deadline = now + config.assignment_duration;
    t.assignments.push_back(a.assignment_id);
    t.workers.push_back(worker_id);
    ++t.active;
    s.assignment_index.emplace(a.assignment_id, s.assignments.size());
    s.assignments.push_back(a);
    return a;
  }
  throw Error(ErrorKind::NoneAvailable, "no task available for worker '" + worker_id + "'");
}

SubmitReceipt receipt_of(const State& s, const Assignment& a) {
  const Task& t = s.task(a.task_id);
  return SubmitReceipt{a.assignment_id, a.task_id, static_cast<int>(a.answers.size()), t.state == TaskState::Complete,
                       a.submitted_at.value_or(0)};
}

SubmitReceipt apply_submit(State& s, const json& c) {
  const std::string id = c.at("assignment_id").get<std::string>();
  const Seconds now = c.at("now").get<Seconds>();
  const std::string key = c.at("key").get<std::string>();
  Assignment& a = assignment_mut(s, id);
  if (!key.empty() && a.idempotency_key == key && a.submitted_at) return receipt_of(s, a);
  if (a.state != AssignmentState::Claimed)
    throw Error(ErrorKind::WrongState, "assignment '" + id + "' is " + std::string(to_string(a.state)));
  Task& t = task_mut(s, a.task_id);
  if (now > a.deadline) {
    expire_assignment(t, a, now);
    throw Error(ErrorKind::DeadlineExceeded, "assignment '" + id + "' passed its deadline " + format_iso8601(a.deadline));
  }
  std::vector<CellClass> answers;
  for (const json& label : c.at("answers")) answers.push_back(parse_cell_class(label.get<std::string>()));
  if (answers.size() != t.items.size())
    throw Error(ErrorKind::InvalidArgument, "expected " + std::to_string(t.items.size()) + " answers, got " +
                                                std::to_string(answers.size()));
  a.state = AssignmentState::Submitted;
  a.submitted_at = now;
  a.answers = answers;
  a.idempotency_key = key;
  for (std::size_t i = 0; i < t.items.size(); ++i) t.votes[i].push_back(Vote{a.worker_id, t.items[i], answers[i], now});
  ++t.submitted;
  ++worker_mut(s, a.worker_id).submitted_count;
  if (t.submitted == t.k && t.state == TaskState::Open) close_task(s, t, TaskState::Complete);
  return receipt_of(s, a);
}

Assignment apply_review(State& s, const json& c, bool approve) {
  const std::string id = c.at("assignment_id").get<std::string>();
  const Seconds now = c.at("now").get<Seconds>();
  Assignment& a = assignment_mut(s, id);
  if (a.state != AssignmentState::Submitted)
    throw Error(ErrorKind::WrongState, "assignment '" + id + "' is " + std::string(to_string(a.state)));
  if (approve) {
    credit(s, a, s.task(a.task_id).reward, now);
  } else {
    a.state = AssignmentState::Rejected;
    a.resolved_at = now;
    ++worker_mut(s, a.worker_id).rejected_count;
  }
  return a;
}

SweepReport apply_sweep(State& s, const OrchestratorConfig& config, const json& c) {
  const Seconds now = c.at("now").get<Seconds>();
  SweepReport report;
  for (Assignment& a : s.assignments) {
    if (a.state == AssignmentState::Claimed && now > a.deadline) {
      expire_assignment(task_mut(s, a.task_id), a, now);
      report.expired_assignments.push_back(a.assignment_id);
    }
  }
  const std::vector<std::size_t> open(s.open_tasks.begin(), s.open_tasks.end());
  for (std::size_t index : open) {
    Task& t = s.tasks[index];
    if (now <= t.expires_at) continue;
    for (const auto& id : t.assignments) {
      Assignment& a = assignment_mut(s, id);
      if (a.state != AssignmentState::Claimed) continue;
      expire_assignment(t, a, now);
      report.expired_assignments.push_back(id);
    }
    close_task(s, t, TaskState::Expired);
    report.expired_tasks.push_back(t.task_id);
  }
  for (Assignment& a : s.assignments) {
    if (a.state == AssignmentState::Submitted && now > *a.submitted_at + config.auto_approve_after) {
      credit(s, a, s.task(a.task_id).reward, now);
      report.approved_assignments.push_back(a.assignment_id);
    }
  }
  return report;
}

void apply_any(State& s, const OrchestratorConfig& config, const json& c) {
  const std::string op = c.at("op").get<std::string>();
  if (op == "register") apply_register(s, c);
  else if (op == "create_batch") apply_create_batch(s, c);
  else if (op == "claim") apply_claim(s, config, c);
  else if (op == "submit") apply_submit(s, c);
  else if (op == "approve") apply_review(s, c, true);
  else if (op == "reject") apply_review(s, c, false);
  else if (op == "sweep") apply_sweep(s, config, c);
  else throw Error(ErrorKind::ParseError, "unknown journal command '" + op + "'");
}

// Commands that fail leave the state untouched, except a late submission,
// which expires its assignment before reporting the error.
bool mutates_on_error(const Error& e) { return e.kind() == ErrorKind::DeadlineExceeded; }

}  // namespace

// ---- orchestrator ----

Orchestrator::Orchestrator(OrchestratorConfig config, std::shared_ptr<Journal> journal)
    : config_(config), journal_(journal ? std::move(journal) : std::make_shared<Journal>()) {
  if (config_.k < 1 || config_.quorum <= config_.k / 2 || config_.quorum > config_.k)
    throw Error(ErrorKind::InvalidArgument, "quorum must be a strict majority of k");
  if (config_.reward <= 0 || config_.assignment_duration <= 0 || config_.auto_approve_after <= 0 ||
      config_.task_lifetime <= 0)
    throw Error(ErrorKind::InvalidArgument, "reward and durations must be positive");
}

void Orchestrator::replay_commands(const std::vector<json>& commands) {
  for (const json& c : commands) {
    try {
      apply_any(state_, config_, c);
    } catch (const Error& e) {
      if (!mutates_on_error(e)) throw;
    }
    state_.sequence = c.at("seq").get<std::uint64_t>();
  }
}

std::unique_ptr<Orchestrator> Orchestrator::replay(OrchestratorConfig config, const std::vector<json>& commands,
                                                   std::shared_ptr<Journal> journal) {
  auto o = std::make_unique<Orchestrator>(config, std::move(journal));
  o->replay_commands(commands);
  return o;
}

std::unique_ptr<Orchestrator> Orchestrator::open(OrchestratorConfig config, const std::filesystem::path& dir,
                                                 int snapshot_every) {
  Journal::Recovery r = Journal::recover(dir);
  auto journal = std::make_shared<Journal>(dir, snapshot_every);
  if (!r.snapshot) return replay(config, r.tail, journal);
  auto o = std::make_unique<Orchestrator>(config, journal);
  o->state_ = std::move(*r.snapshot);
  o->replay_commands(r.tail);
  return o;
}

template <class F>
auto Orchestrator::run(json& command, F&& apply) {
  std::unique_lock lock(mutex_);
  const auto log = [&] {
    command["seq"] = ++state_.sequence;
    journal_->append(command, state_);
  };
  try {
    auto result = apply(state_);
    log();
    return result;
  } catch (const Error& e) {
    if (mutates_on_error(e)) log();
    throw;
  }
}

WorkerProfile Orchestrator::register_worker(const WorkerRegistration& r, Seconds now) {
  validate_identifier(r.worker_id, "worker_id");
  int approved = r.prior_approved, reviewed = r.prior_reviewed;
  if (r.approval_rate) {
    if (!(*r.approval_rate >= 0.0 && *r.approval_rate <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "approval_rate must lie in [0, 1]");
    reviewed = 1000;
    approved = static_cast<int>(std::lround(*r.approval_rate * 1000.0));
  }
  if (approved < 0 || reviewed < approved)
    throw Error(ErrorKind::InvalidArgument, "prior approvals must lie between 0 and the reviewed count");
  json c = {{"op", "register"},        {"now", now},
                  {"worker_id", r.worker_id}, {"is_master", r.is_master},
                  {"prior_approved", approved}, {"prior_reviewed", reviewed}};
  return run(c, [&](State& s) {
    apply_register(s, c);
    return s.worker(r.worker_id);
  });
}

Batch Orchestrator::create_batch(const BatchSpec& spec, Seconds now) {
  json truth = json::object();
  for (const auto& [item, label] : spec.truth) truth[item] = to_string(label);
  const int k = spec.k.value_or(config_.k);
  json c = {{"op", "create_batch"},
            {"now", now},
            {"items", spec.items},
            {"truth", std::move(truth)},
            {"pairing", to_string(spec.pairing)},
            {"seed", spec.seed},
            {"k", k},
            {"quorum", k == config_.k ? config_.quorum : k / 2 + 1},
            {"reward", spec.reward.value_or(config_.reward)},
            {"lifetime", spec.lifetime.value_or(config_.task_lifetime)}};
  return run(c, [&](State& s) {
    c["batch_id"] = spec.batch_id.empty() ? numbered("batch", s.batches.size() + 1, 4) : spec.batch_id;
    validate_identifier(c["batch_id"].get<std::string>(), "batch_id");
    return apply_create_batch(s, c);
  });
}

Assignment Orchestrator::claim_next(const std::string& worker_id, Seconds now) {
  json c = {{"op", "claim"}, {"now", now}, {"worker_id", worker_id}};
  return run(c, [&](State& s) { return apply_claim(s, config_, c); });
}

SubmitReceipt Orchestrator::submit_answers(const std::string& assignment_id, const std::vector<CellClass>& answers,
                                           Seconds now, const std::string& idempotency_key) {
  json labels = json::array();
  for (CellClass a : answers) labels.push_back(to_string(a));
  json c = {{"op", "submit"},
                  {"now", now},
                  {"assignment_id", assignment_id},
                  {"answers", std::move(labels)},
                  {"key", idempotency_key}};
  return run(c, [&](State& s) { return apply_submit(s, c); });
}

Assignment Orchestrator::approve(const std::string& assignment_id, Seconds now) {
  json c = {{"op", "approve"}, {"now", now}, {"assignment_id", assignment_id}};
  return run(c, [&](State& s) { return apply_review(s, c, true); });
}

Assignment Orchestrator::reject(const std::string& assignment_id, Seconds now) {
  json c = {{"op", "reject"}, {"now", now}, {"assignment_id", assignment_id}};
  return run(c, [&](State& s) { return apply_review(s, c, false); });
}

SweepReport Orchestrator::sweep(Seconds now) {
  json c = {{"op", "sweep"}, {"now", now}};
  return run(c, [&](State& s) { return apply_sweep(s, config_, c); });
}

Task Orchestrator::task_status(const std::string& task_id) const {
  return read([&](const State& s) { return s.task(task_id); });
}

WorkerProfile Orchestrator::worker(const std::string& worker_id) const {
  return read([&](const State& s) { return s.worker(worker_id); });
}

Micros Orchestrator::pending_earnings(const std::string& worker_id) const {
  return read([&](const State& s) {
    s.worker(worker_id);
    Micros total = 0;
    for (const Assignment& a : s.assignments)
      if (a.worker_id == worker_id && a.state == AssignmentState::Submitted) total += s.task(a.task_id).reward;
    return total;
  });
}

std::vector<Vote> Orchestrator::export_votes(const std::string& batch_id) const {
  return read([&](const State& s) {
    std::vector<Vote> votes;
    for (const auto& id : s.batch(batch_id).task_ids)
      for (const auto& per_item : s.task(id).votes) votes.insert(votes.end(), per_item.begin(), per_item.end());
    return votes;
  });
}

Batch Orchestrator::batch(const std::string& batch_id) const {
  return read([&](const State& s) { return s.batch(batch_id); });
}

Micros Orchestrator::ledger_total() const {
  return read([](const State& s) {
    Micros total = 0;
    for (const auto& e : s.ledger) total += e.amount;
    return total;
  });
}

json Orchestrator::snapshot() const {
  return read([](const State& s) { return to_json(s); });
}

}  // namespace cellvote::crowd
