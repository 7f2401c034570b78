#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include "cellvote/config.hpp"
#include "cellvote/dataset.hpp"
#include "cellvote/error.hpp"
#include "cellvote/metrics.hpp"
#include "cellvote/orchestrator.hpp"
#include "cellvote/records.hpp"
#include "stress.hpp"

using namespace cellvote;
using namespace cellvote::crowd;

namespace {

constexpr Seconds t0 = 1'700'000'000;

std::vector<std::string> item_ids(int n, const std::string& prefix = "img") {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

Batch batch_of(Orchestrator& o, int n, const std::string& prefix = "img") {
  BatchSpec spec;
  spec.items = item_ids(n, prefix);
  return o.create_batch(spec, t0);
}

void add_workers(Orchestrator& o, int n, double rate = 0.98) {
  for (int i = 0; i < n; ++i) o.register_worker({"w" + std::to_string(i), true, rate, 0, 0}, t0);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cellvote-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("batches pair items in manifest order") {
  Orchestrator o;
  const Batch four = batch_of(o, 4, "a");
  CHECK(four.task_ids.size() == 2);
  CHECK(o.task_status(four.task_ids[0]).items == std::vector<std::string>{"a0", "a1"});
  CHECK(o.task_status(four.task_ids[1]).items == std::vector<std::string>{"a2", "a3"});

  const Batch five = batch_of(o, 5, "b");
  REQUIRE(five.task_ids.size() == 3);
  CHECK(o.task_status(five.task_ids[2]).items == std::vector<std::string>{"b4"});
  CHECK(o.task_status(five.task_ids[0]).expires_at == t0 + 3 * kDay);
  CHECK(o.task_status(five.task_ids[0]).reward == 10'000);
}

TEST_CASE("848 items give 424 tasks and 4240 vote slots") {
  Orchestrator o;
  const Batch b = batch_of(o, 848);
  CHECK(b.task_ids.size() == 424);
  int slots = 0;
  for (const auto& id : b.task_ids) {
    const Task t = o.task_status(id);
    slots += static_cast<int>(t.items.size()) * t.k;
  }
  CHECK(slots == 4240);
}

TEST_CASE("seeded shuffle is deterministic and covers every item once") {
  const auto pairs = [](std::uint64_t seed, Pairing pairing) {
    Orchestrator o;
    BatchSpec spec;
    spec.items = item_ids(11);
    spec.pairing = pairing;
    spec.seed = seed;
    std::vector<std::string> order;
    for (const auto& id : o.create_batch(spec, t0).task_ids)
      for (const auto& item : o.task_status(id).items) order.push_back(item);
    return order;
  };
  const auto a = pairs(7, Pairing::Shuffle);
  CHECK(a == pairs(7, Pairing::Shuffle));
  CHECK(a != pairs(8, Pairing::Shuffle));
  CHECK(a != pairs(7, Pairing::Sequential));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  auto expected = item_ids(11);
  std::sort(expected.begin(), expected.end());
  CHECK(sorted == expected);
}

TEST_CASE("batch validation") {
  Orchestrator o;
  CHECK(kind_of([&] { o.create_batch(BatchSpec{}, t0); }) == ErrorKind::EmptyBatch);
  BatchSpec dup;
  dup.items = {"x", "y", "x"};
  CHECK(kind_of([&] { o.create_batch(dup, t0); }) == ErrorKind::DuplicateItem);
  batch_of(o, 2, "z");
  BatchSpec again;
  again.items = {"z1", "q"};
  try {
    o.create_batch(again, t0);
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateItem);
    CHECK(std::string(e.what()).find("z1") != std::string::npos);
  }
  // Failed commands leave no trace.
  CHECK(o.read([](const State& s) { return s.tasks.size(); }) == 1);
  BatchSpec even_k;
  even_k.items = {"e0"};
  even_k.k = 4;
  CHECK(o.create_batch(even_k, t0).task_ids.size() == 1);
  CHECK(o.task_status(o.batch(o.read([](const State& s) { return s.batches.back().batch_id; })).task_ids[0]).quorum == 3);
}

TEST_CASE("qualification needs master status and an approval rate above 90%") {
  Orchestrator o;
  batch_of(o, 2);
  o.register_worker({"low", true, 0.85, 0, 0}, t0);
  o.register_worker({"edge", true, 0.90, 0, 0}, t0);
  o.register_worker({"above", true, 0.901, 0, 0}, t0);
  o.register_worker({"plain", false, 1.0, 0, 0}, t0);
  o.register_worker({"fresh", true, std::nullopt, 0, 0}, t0);
  CHECK(kind_of([&] { o.claim_next("low", t0); }) == ErrorKind::NotQualified);
  CHECK(kind_of([&] { o.claim_next("edge", t0); }) == ErrorKind::NotQualified);
  CHECK(kind_of([&] { o.claim_next("plain", t0); }) == ErrorKind::NotQualified);
  CHECK(kind_of([&] { o.claim_next("nobody", t0); }) == ErrorKind::UnknownWorker);
  CHECK(o.worker("fresh").approval_rate() == 1.0);
  CHECK_NOTHROW(o.claim_next("above", t0));
  CHECK_NOTHROW(o.claim_next("fresh", t0));
  CHECK(kind_of([&] { o.register_worker({"low", true, 0.99, 0, 0}, t0); }) == ErrorKind::DuplicateWorker);
  CHECK(kind_of([&] { o.register_worker({"bad", true, 1.5, 0, 0}, t0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("a task takes k distinct workers and never re-offers itself") {
  Orchestrator o;
  const Batch b = batch_of(o, 2);
  add_workers(o, 6);
  std::set<std::string> ids;
  for (int i = 0; i < 5; ++i) {
    const Assignment a = o.claim_next("w" + std::to_string(i), t0);
    CHECK(a.task_id == b.task_ids[0]);
    CHECK(a.deadline == t0 + kHour);
    ids.insert(a.assignment_id);
  }
  CHECK(ids.size() == 5);
  CHECK(kind_of([&] { o.claim_next("w5", t0); }) == ErrorKind::NoneAvailable);
  CHECK(kind_of([&] { o.claim_next("w0", t0); }) == ErrorKind::NoneAvailable);
}

TEST_CASE("submission lifecycle") {
  Orchestrator o;
  const Batch b = batch_of(o, 2);
  add_workers(o, 6);
  const Assignment a = o.claim_next("w0", t0);

  SUBCASE("valid submission records two votes") {
    const SubmitReceipt r = o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, t0 + 60);
    CHECK(r.votes_recorded == 2);
    CHECK_FALSE(r.task_complete);
    const Task t = o.task_status(a.task_id);
    CHECK(t.votes[0].size() == 1);
    CHECK(t.votes[1][0].label == CellClass::Other);
    CHECK(o.worker("w0").submitted_count == 1);
    CHECK(o.pending_earnings("w0") == 10'000);
    CHECK(kind_of([&] { o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, t0 + 61); }) ==
          ErrorKind::WrongState);
  }
  SUBCASE("the deadline itself is still on time") {
    CHECK_NOTHROW(o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, a.deadline));
  }
  SUBCASE("one second late expires the assignment and frees the slot") {
    for (int i = 1; i < 5; ++i) o.claim_next("w" + std::to_string(i), t0);
    CHECK(kind_of([&] { o.claim_next("w5", t0); }) == ErrorKind::NoneAvailable);
    CHECK(kind_of([&] {
            o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, a.deadline + 1);
          }) == ErrorKind::DeadlineExceeded);
    CHECK(o.read([&](const State& s) { return s.assignment(a.assignment_id).state; }) == AssignmentState::Expired);
    CHECK(o.claim_next("w5", a.deadline + 1).task_id == a.task_id);
    // The late worker is not offered the same task again.
    CHECK(kind_of([&] { o.claim_next("w0", a.deadline + 2); }) == ErrorKind::NoneAvailable);
  }
  SUBCASE("answer validation") {
    CHECK(kind_of([&] { o.submit_answers(a.assignment_id, {CellClass::Circular}, t0); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { o.submit_answers("asg-9999999", {}, t0); }) == ErrorKind::UnknownAssignment);
  }
  SUBCASE("idempotency key replays the receipt") {
    const auto first = o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, t0 + 5, "k1");
    const auto again = o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, t0 + 9, "k1");
    CHECK(again.submitted_at == first.submitted_at);
    CHECK(o.task_status(a.task_id).votes[0].size() == 1);
  }
  (void)b;
}

TEST_CASE("the k-th submission completes the task and aggregates both items") {
  Orchestrator o;
  batch_of(o, 2);
  add_workers(o, 5);
  const CellClass first[] = {CellClass::Circular, CellClass::Circular, CellClass::Circular, CellClass::Elongated,
                             CellClass::Other};
  const CellClass second[] = {CellClass::Other, CellClass::Other, CellClass::Circular, CellClass::Circular,
                              CellClass::Elongated};
  SubmitReceipt last;
  for (int i = 0; i < 5; ++i) {
    const Assignment a = o.claim_next("w" + std::to_string(i), t0 + i);
    last = o.submit_answers(a.assignment_id, {first[i], second[i]}, t0 + 10 + i);
  }
  CHECK(last.task_complete);
  const Task t = o.task_status(last.task_id);
  CHECK(t.state == TaskState::Complete);
  REQUIRE(t.results.size() == 2);
  REQUIRE(t.results[0].outcome);
  CHECK(t.results[0].outcome->label == CellClass::Circular);
  CHECK(t.results[0].outcome->agreement == 3);
  CHECK_FALSE(t.results[1].outcome);
  CHECK(t.results[1].pattern.to_string() == "2-2-1");
  CHECK(o.read([](const State& s) { return s.open_tasks.empty(); }));
}

TEST_CASE("sweep expires claims, approves old submissions and closes stale tasks") {
  Orchestrator o;
  const Batch b = batch_of(o, 4);
  add_workers(o, 3);
  const Assignment stale = o.claim_next("w0", t0);
  const Assignment done = o.claim_next("w1", t0);
  o.submit_answers(done.assignment_id, {CellClass::Circular, CellClass::Circular}, t0 + 100);

  SweepReport r = o.sweep(t0 + 61 * kMinute);
  CHECK(r.expired_assignments == std::vector<std::string>{stale.assignment_id});
  CHECK(r.approved_assignments.empty());
  CHECK(o.claim_next("w2", t0 + 61 * kMinute).task_id == stale.task_id);

  const SweepReport week = o.sweep(t0 + 100 + 7 * kDay);
  CHECK(week.approved_assignments.empty());
  // Both tasks are past their three-day lifetime by now.
  CHECK(week.expired_tasks.size() == 2);
  r = o.sweep(t0 + 100 + 7 * kDay + 1);
  CHECK(r.approved_assignments == std::vector<std::string>{done.assignment_id});
  CHECK(o.worker("w1").balance == 10'000);
  CHECK(o.worker("w1").approved_count == 1);
  CHECK(o.ledger_total() == 10'000);

  CHECK(r.expired_tasks.empty());
  const Task t = o.task_status(b.task_ids[0]);
  CHECK(t.state == TaskState::Expired);
  REQUIRE(t.results.size() == 2);
  CHECK(t.results[0].expired);
  CHECK_FALSE(t.results[0].outcome);

  const auto before = o.snapshot();
  CHECK(o.sweep(t0 + 100 + 7 * kDay + 1).empty());
  auto after = o.snapshot();
  after["sequence"] = before["sequence"];
  CHECK(after == before);
  CHECK(o.ledger_total() == 10'000);
}

TEST_CASE("manual review") {
  Orchestrator o;
  batch_of(o, 4);
  add_workers(o, 2, 0.95);
  const Assignment a = o.claim_next("w0", t0);
  const Assignment b = o.claim_next("w1", t0);
  CHECK(kind_of([&] { o.approve(a.assignment_id, t0); }) == ErrorKind::WrongState);
  o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, t0 + 1);
  o.submit_answers(b.assignment_id, {CellClass::Circular, CellClass::Other}, t0 + 1);
  CHECK(o.approve(a.assignment_id, t0 + 2).state == AssignmentState::Approved);
  CHECK(o.reject(b.assignment_id, t0 + 2).state == AssignmentState::Rejected);
  CHECK(kind_of([&] { o.reject(a.assignment_id, t0 + 3); }) == ErrorKind::WrongState);
  CHECK(o.worker("w0").balance == 10'000);
  CHECK(o.worker("w1").balance == 0);
  CHECK(o.worker("w1").approval_rate() == doctest::Approx(950.0 / 1001.0));
  // Rejected work is never auto-approved later.
  CHECK(o.sweep(t0 + 30 * kDay).approved_assignments.empty());
}

TEST_CASE("exported votes round-trip into the vote matrix") {
  Orchestrator o;
  BatchSpec spec;
  spec.items = item_ids(4);
  for (const auto& id : spec.items) spec.truth[id] = CellClass::Circular;
  const Batch b = o.create_batch(spec, t0);
  CHECK(o.export_votes(b.batch_id).empty());
  add_workers(o, 5);
  for (int round = 0; round < 2; ++round)
    for (int i = 0; i < 5; ++i) {
      const Assignment a = o.claim_next("w" + std::to_string(i), t0 + round);
      o.submit_answers(a.assignment_id, {CellClass::Circular, i == 0 ? CellClass::Other : CellClass::Circular}, t0 + 5);
    }
  const auto votes = o.export_votes(b.batch_id);
  CHECK(votes.size() == 20);
  std::stringstream csv;
  write_votes(csv, votes);
  const auto parsed = read_votes(csv);
  CHECK(parsed == votes);
  TruthIndex truth(spec.truth.begin(), spec.truth.end());
  const auto m = metrics::build_vote_matrix(parsed, truth);
  CHECK(m.total() == 20);
  CHECK(m.at(0, 0) == 18);
  CHECK(m.at(0, 2) == 2);
  CHECK(kind_of([&] { o.export_votes("batch-none"); }) == ErrorKind::UnknownBatch);
  CHECK(kind_of([&] { o.task_status("task-none"); }) == ErrorKind::UnknownTask);
}

TEST_CASE("journal replay and on-disk recovery rebuild the same state") {
  const auto dir = fresh_dir("journal");
  OrchestratorConfig config;
  {
    auto journal = std::make_shared<Journal>(dir, 4);
    Orchestrator o(config, journal);
    batch_of(o, 6);
    add_workers(o, 5);
    for (int i = 0; i < 5; ++i) {
      const Assignment a = o.claim_next("w" + std::to_string(i), t0 + i);
      if (i == 3) {
        CHECK_THROWS(o.submit_answers(a.assignment_id, {CellClass::Other, CellClass::Other}, a.deadline + 1));
        continue;
      }
      o.submit_answers(a.assignment_id, {CellClass::Circular, CellClass::Other}, t0 + 20);
    }
    CHECK_THROWS(o.claim_next("ghost", t0));
    o.sweep(t0 + 8 * kDay);
    const auto state = o.snapshot();
    CHECK(Orchestrator::replay(config, journal->commands())->snapshot() == state);
    CHECK(std::filesystem::exists(dir / "snapshot.json"));
    const auto reopened = Orchestrator::open(config, dir);
    CHECK(reopened->snapshot() == state);
    // The reopened instance keeps logging to the same journal.
    reopened->register_worker({"late", true, 0.99, 0, 0}, t0 + 9 * kDay);
    CHECK(Orchestrator::open(config, dir)->snapshot() == reopened->snapshot());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("state survives a JSON round trip") {
  Orchestrator o;
  batch_of(o, 3);
  add_workers(o, 2);
  const Assignment a = o.claim_next("w0", t0);
  o.submit_answers(a.assignment_id, {CellClass::Elongated, CellClass::Other}, t0 + 3);
  const auto j = o.snapshot();
  CHECK(to_json(state_from_json(j)) == j);
}

TEST_CASE("service configuration from file and environment") {
  const auto dir = fresh_dir("config");
  std::filesystem::create_directories(dir);
  const auto file = dir / "config.json";
  std::ofstream(file) << R"({"k": 7, "quorum": 4, "reward_usd": 0.02, "port": 9000, "image_dir": "crops"})";
  std::map<std::string, std::string> env = {{"CELLVOTE_PORT", "9100"}, {"CELLVOTE_IMAGE_DIR", "123"}};
  const EnvLookup lookup = [&](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const ServiceConfig c = load_service_config(file, lookup);
  CHECK(c.orchestrator.k == 7);
  CHECK(c.orchestrator.quorum == 4);
  CHECK(c.orchestrator.reward == 20'000);
  CHECK(c.port == 9100);
  CHECK(c.image_dir == "123");
  CHECK(c.orchestrator.assignment_duration == kHour);

  std::ofstream(file) << R"({"colour": 1})";
  CHECK(kind_of([&] { load_service_config(file, lookup); }) == ErrorKind::ParseError);
  env["CELLVOTE_PORT"] = "many";
  CHECK(kind_of([&] { load_service_config(std::nullopt, lookup); }) == ErrorKind::ParseError);
  CHECK(kind_of([&] { load_service_config(dir / "missing.json", lookup); }) == ErrorKind::MissingFile);
  CHECK(format_dollars(10'000) == "0.010000");
  CHECK(dollars_to_micros(0.01) == 10'000);
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent clients keep every task invariant") {
  cellvote::testing::StressOptions options;
  options.clients = 16;
  options.tasks = 150;
  options.seed = 11;
  options.journal_dir = fresh_dir("stress");
  const auto r = cellvote::testing::run_orchestrator_stress(options);
  for (const auto& p : r.problems) INFO(p);
  CHECK(r.problems.empty());
  CHECK(r.tasks_complete == 150);
  CHECK_FALSE(r.oversubscribed);
  CHECK_FALSE(r.double_assigned);
  CHECK_FALSE(r.unqualified_claimed);
  CHECK(r.max_active <= 5);
  CHECK(r.results_ok);
  CHECK(r.sweep_idempotent);
  CHECK(r.ledger_ok);
  CHECK(r.replay_equal);
  CHECK(r.recovery_equal);
  std::filesystem::remove_all(*options.journal_dir);
}
