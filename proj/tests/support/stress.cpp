#include "stress.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "cellvote/error.hpp"
#include "cellvote/orchestrator.hpp"
#include "cellvote/rng.hpp"

namespace cellvote::testing {

using namespace cellvote::crowd;

namespace {

constexpr Seconds kStart = 1'700'000'000;

struct Check {
  int max_active = 0;
  bool oversubscribed = false;
  bool double_assigned = false;
  bool counters_ok = true;
};

Check inspect(const State& s) {
  Check c;
  for (const Task& t : s.tasks) {
    int live = 0;
    std::set<std::string> workers;
    for (const auto& id : t.assignments) {
      const Assignment& a = s.assignment(id);
      if (a.state != AssignmentState::Expired) ++live;
      if (!workers.insert(a.worker_id).second) c.double_assigned = true;
    }
    c.max_active = std::max(c.max_active, live);
    if (live > t.k) c.oversubscribed = true;
    if (live != t.active) c.counters_ok = false;
  }
  return c;
}

}  // namespace

StressOutcome run_orchestrator_stress(const StressOptions& options) {
  StressOutcome out;
  OrchestratorConfig config;
  config.task_lifetime = 365 * kDay;  // the logical clock must not expire tasks mid-run
  std::shared_ptr<Journal> journal =
      std::make_shared<Journal>(options.journal_dir, options.journal_dir ? 250 : 0);
  Orchestrator o(config, journal);

  std::vector<std::string> workers;
  for (int i = 0; i < options.clients; ++i) {
    workers.push_back("w" + std::to_string(i));
    o.register_worker({workers.back(), true, std::nullopt, 990, 1000}, kStart);
  }
  o.register_worker({"novice", true, 0.85, 0, 0}, kStart);
  o.register_worker({"casual", false, 0.99, 0, 0}, kStart);

  BatchSpec spec;
  for (int i = 0; i < 2 * options.tasks; ++i) spec.items.push_back("item-" + std::to_string(i));
  spec.pairing = Pairing::Shuffle;
  spec.seed = options.seed;
  o.create_batch(spec, kStart);

  std::atomic<Seconds> clock{kStart};
  std::atomic<bool> done{false};
  std::atomic<int> claims{0}, submissions{0}, approvals{0}, rejections{0};
  std::atomic<bool> unqualified{false};
  std::mutex check_mutex;
  Check worst;

  const auto client = [&](int index) {
    KeyedStream rng(mix(options.seed, static_cast<std::uint64_t>(index) + 1));
    const std::string& me = workers[static_cast<std::size_t>(index)];
    while (!done.load()) {
      const Seconds now = clock.fetch_add(1) + 1;
      Assignment a;
      try {
        a = o.claim_next(me, now);
        ++claims;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoneAvailable) throw;
        o.sweep(now);
        if (o.read([](const State& s) { return s.open_tasks.empty(); })) done = true;
        std::this_thread::yield();
        continue;
      }
      if (rng.uniform() < options.abandon_rate) continue;
      std::vector<CellClass> answers;
      const std::size_t n = o.read([&](const State& s) { return s.task(a.task_id).items.size(); });
      for (std::size_t i = 0; i < n; ++i) answers.push_back(kAllClasses[rng.below(kNumClasses)]);
      try {
        o.submit_answers(a.assignment_id, answers, clock.fetch_add(1) + 1, a.assignment_id + "-key");
        ++submissions;
      } catch (const Error& e) {
        // Another client's sweep may have expired a claim that sat too long.
        if (e.kind() != ErrorKind::WrongState && e.kind() != ErrorKind::DeadlineExceeded) throw;
        continue;
      }
      const double u = rng.uniform();
      try {
        if (u < options.reject_rate) {
          o.reject(a.assignment_id, clock.load());
          ++rejections;
        } else if (u < options.reject_rate + options.manual_approve_rate) {
          o.approve(a.assignment_id, clock.load());
          ++approvals;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::WrongState) throw;
      }
    }
  };

  const auto monitor = [&] {
    while (!done.load()) {
      const Check c = o.read(inspect);
      {
        std::lock_guard lock(check_mutex);
        worst.max_active = std::max(worst.max_active, c.max_active);
        worst.oversubscribed |= c.oversubscribed;
        worst.double_assigned |= c.double_assigned;
        worst.counters_ok &= c.counters_ok;
      }
      for (const char* id : {"novice", "casual"}) {
        try {
          o.claim_next(id, clock.load());
          unqualified = true;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NotQualified) unqualified = true;
        }
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  };

  std::vector<std::thread> threads;
  std::mutex error_mutex;
  for (int i = 0; i < options.clients; ++i)
    threads.emplace_back([&, i] {
      try {
        client(i);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        out.problems.push_back(std::string("client error: ") + e.what());
        done = true;
      }
    });
  std::thread watcher(monitor);
  for (auto& t : threads) t.join();
  done = true;
  watcher.join();

  const Check final_check = o.read(inspect);
  worst.max_active = std::max(worst.max_active, final_check.max_active);
  worst.oversubscribed |= final_check.oversubscribed;
  worst.double_assigned |= final_check.double_assigned;
  worst.counters_ok &= final_check.counters_ok;
  if (!worst.counters_ok) out.problems.push_back("active counters disagree with assignment states");

  out.claims = claims;
  out.submissions = submissions;
  out.rejections = rejections;
  out.max_active = worst.max_active;
  out.oversubscribed = worst.oversubscribed;
  out.double_assigned = worst.double_assigned;
  out.unqualified_claimed = unqualified;

  out.results_ok = o.read([&](const State& s) {
    bool ok = true;
    for (const Task& t : s.tasks) {
      if (t.state != TaskState::Complete) {
        ok = false;
        continue;
      }
      ++out.tasks_complete;
      ok &= t.results.size() == t.items.size();
      for (std::size_t i = 0; i < t.items.size(); ++i) {
        ok &= static_cast<int>(t.votes[i].size()) == t.k;
        ok &= i < t.results.size() && t.results[i].item_id == t.items[i] && !t.results[i].expired;
      }
    }
    return ok;
  });

  // Past the auto-approval window every remaining submission gets paid.
  const Seconds late = clock.load() + 8 * kDay;
  o.sweep(late);
  const auto before = o.snapshot();
  const SweepReport again = o.sweep(late);
  auto after = o.snapshot();
  after["sequence"] = before["sequence"];
  out.sweep_idempotent = again.empty() && before == after;

  out.ledger_micros = o.ledger_total();
  out.ledger_ok = o.read([&](const State& s) {
    long long approved = 0;
    for (const Assignment& a : s.assignments) {
      if (a.state == AssignmentState::Approved) ++approved;
      if (a.state == AssignmentState::Expired) ++out.expirations;
    }
    out.approvals = static_cast<int>(approved);
    return out.ledger_micros == approved * config.reward && s.ledger.size() == static_cast<std::size_t>(approved);
  });

  const auto final_state = o.snapshot();
  out.replay_equal = Orchestrator::replay(config, journal->commands())->snapshot() == final_state;
  if (options.journal_dir) out.recovery_equal = Orchestrator::open(config, *options.journal_dir)->snapshot() == final_state;
  return out;
}

}  // namespace cellvote::testing
