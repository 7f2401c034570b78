#include "cellvote/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cellvote/error.hpp"
#include "cellvote/rng.hpp"

namespace cellvote::sim {

namespace {

// Stream tags so the draws behind one vote never reuse a key.
enum : std::uint64_t { kCorrect = 1, kShare = 2, kWorkerError = 3, kItemError = 4, kDifficulty = 5, kPick = 6 };

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_probability(double p, const char* what) {
  if (!is_probability(p)) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must lie in [0, 1]");
}

// Picks a wrong class for `truth` from its error row using uniform u.
CellClass wrong_class(const ErrorRows& errors, CellClass truth, double u) {
  const auto& row = errors[index_of(truth)];
  double acc = 0.0;
  CellClass last = truth;
  for (CellClass c : kAllClasses) {
    if (c == truth) continue;
    last = c;
    acc += row[index_of(c)];
    if (u < acc) return c;
  }
  return last;
}

std::uint64_t worker_key(const WorkerModel& w) { return mix(w.seed, hash_id(w.worker_id)); }

}  // namespace

void WorkerModel::validate() const {
  for (CellClass t : kAllClasses) {
    check_probability(accuracy[index_of(t)], "accuracy");
    double sum = 0.0;
    for (CellClass c : kAllClasses) {
      const double p = errors[index_of(t)][index_of(c)];
      check_probability(p, "error probability");
      if (c == t && p != 0.0) throw Error(ErrorKind::InvalidArgument, "error rows must have a zero diagonal");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "error rows must sum to 1");
  }
}

ClassProbabilities reference_accuracy() { return {2676.0 / 3085.0, 614.0 / 905.0, 153.0 / 250.0}; }

ErrorRows reference_errors() {
  return {{{0.0, 58.0 / 409.0, 351.0 / 409.0}, {48.0 / 291.0, 0.0, 243.0 / 291.0}, {69.0 / 97.0, 28.0 / 97.0, 0.0}}};
}

WorkerModel reference_worker(std::string worker_id, std::uint64_t seed) {
  return WorkerModel{std::move(worker_id), reference_accuracy(), reference_errors(), seed};
}

double DifficultyModel::difficulty(std::string_view item_id) const {
  return to_unit(mix(mix(seed, kDifficulty), hash_id(item_id)));
}

void DifficultyModel::validate() const {
  for (double r : rho) check_probability(r, "rho");
}

double correct_probability(double alpha, double rho, double d) {
  return (1.0 - rho) * alpha + rho * (d < alpha ? 1.0 : 0.0);
}

CellClass simulate_vote(const WorkerModel& model, std::string_view item_id, CellClass truth,
                        const DifficultyModel& difficulty) {
  const std::size_t c = index_of(truth);
  const double rho = difficulty.rho[c];
  const std::uint64_t vote = mix(worker_key(model), hash_id(item_id));
  const double p = correct_probability(model.accuracy[c], rho, difficulty.difficulty(item_id));
  if (to_unit(mix(vote, kCorrect)) < p) return truth;
  const bool shared = to_unit(mix(vote, kShare)) < rho;
  const double u = shared ? to_unit(mix(mix(difficulty.seed, kItemError), hash_id(item_id)))
                          : to_unit(mix(vote, kWorkerError));
  return wrong_class(model.errors, truth, u);
}

std::vector<ItemSpec> make_items(const std::array<int, kNumClasses>& per_class) {
  std::vector<ItemSpec> items;
  int n = 0;
  for (CellClass c : kAllClasses) {
    if (per_class[index_of(c)] < 0) throw Error(ErrorKind::InvalidArgument, "item counts must be nonnegative");
    for (int i = 0; i < per_class[index_of(c)]; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "sim-%06d", ++n);
      items.push_back({id, c});
    }
  }
  return items;
}

std::vector<Vote> run_experiment(const ExperimentConfig& config) {
  if (config.k < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
  if (static_cast<int>(config.workers.size()) < config.k)
    throw Error(ErrorKind::InsufficientWorkers, "need at least " + std::to_string(config.k) + " workers, have " +
                                                    std::to_string(config.workers.size()));
  for (const auto& w : config.workers) w.validate();
  config.difficulty.validate();

  std::vector<Vote> votes;
  votes.reserve(config.items.size() * static_cast<std::size_t>(config.k));
  std::vector<std::size_t> pool(config.workers.size());
  for (std::size_t i = 0; i < config.items.size(); ++i) {
    const ItemSpec& item = config.items[i];
    // Partial Fisher-Yates keyed by the item picks k distinct workers.
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    KeyedStream pick(mix(mix(config.seed, kPick), hash_id(item.item_id)));
    for (int slot = 0; slot < config.k; ++slot) {
      const std::size_t j = slot + pick.below(pool.size() - slot);
      std::swap(pool[slot], pool[j]);
      const WorkerModel& w = config.workers[pool[slot]];
      votes.push_back(Vote{w.worker_id, item.item_id, simulate_vote(w, item.item_id, item.truth, config.difficulty),
                           config.start + static_cast<Seconds>(i) * 60 + slot});
    }
  }
  return votes;
}

AccuracyEstimate simulate_consensus_accuracy(double alpha, double rho, int items, std::uint64_t seed, int k,
                                             int quorum) {
  check_probability(alpha, "alpha");
  check_probability(rho, "rho");
  if (items < 1 || k < 1 || quorum < 1 || quorum > k)
    throw Error(ErrorKind::DomainError, "need items >= 1 and 1 <= quorum <= k");
  long long hits = 0;
  for (int i = 0; i < items; ++i) {
    const std::uint64_t item = mix(seed, static_cast<std::uint64_t>(i));
    const double p = correct_probability(alpha, rho, to_unit(mix(item, kDifficulty)));
    int correct = 0;
    for (int j = 0; j < k; ++j) correct += to_unit(mix(item, kCorrect + 8 * static_cast<std::uint64_t>(j))) < p;
    hits += correct >= quorum;
  }
  AccuracyEstimate e;
  e.items = items;
  e.accuracy = static_cast<double>(hits) / items;
  e.standard_error = std::sqrt(e.accuracy * (1.0 - e.accuracy) / items);
  return e;
}

double expected_consensus_accuracy(double alpha, double rho, int k, int quorum) {
  check_probability(alpha, "alpha");
  check_probability(rho, "rho");
  const double easy = estimate_consensus_accuracy(alpha + rho * (1.0 - alpha), k, quorum);
  const double hard = estimate_consensus_accuracy(alpha * (1.0 - rho), k, quorum);
  return alpha * easy + (1.0 - alpha) * hard;
}

Calibration calibrate_correlation(double target, double alpha, const CalibrationOptions& options) {
  check_probability(alpha, "alpha");
  if (!(options.tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  const double independent = estimate_consensus_accuracy(alpha, options.k, options.quorum);
  const double lo_value = std::min(alpha, independent), hi_value = std::max(alpha, independent);
  if (!(target >= lo_value - 1e-12 && target <= hi_value + 1e-12)) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "target %.4f is outside the reachable range [%.4f, %.4f] for alpha %.4f", target,
                  lo_value, hi_value, alpha);
    throw Error(ErrorKind::TargetUnreachable, msg);
  }

  Calibration cal;
  const auto simulate = [&](double rho) {
    ++cal.evaluations;
    return simulate_consensus_accuracy(alpha, rho, options.items, options.seed, options.k, options.quorum);
  };
  // Accuracy moves from the independent value at rho = 0 toward alpha at rho = 1.
  const bool decreasing = independent >= alpha;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > options.tolerance) {
    const double mid = 0.5 * (lo + hi);
    const bool above = simulate(mid).accuracy > target;
    if (above == decreasing)
      lo = mid;
    else
      hi = mid;
  }
  cal.rho = 0.5 * (lo + hi);
  const AccuracyEstimate at = simulate(cal.rho);
  cal.achieved = at.accuracy;
  cal.standard_error = at.standard_error;

  const double h = 0.02;
  const double a = std::max(0.0, cal.rho - h), b = std::min(1.0, cal.rho + h);
  const double slope = (simulate(b).accuracy - simulate(a).accuracy) / (b - a);
  const double half = std::abs(slope) > 1e-12 ? 1.96 * at.standard_error / std::abs(slope) : 1.0;
  cal.ci_low = std::max(0.0, cal.rho - half);
  cal.ci_high = std::min(1.0, cal.rho + half);
  return cal;
}

std::array<Calibration, kNumClasses> calibrate_correlation(const ClassProbabilities& targets,
                                                           const ClassProbabilities& alphas,
                                                           const CalibrationOptions& options) {
  std::array<Calibration, kNumClasses> out;
  for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = calibrate_correlation(targets[c], alphas[c], options);
  return out;
}

}  // namespace cellvote::sim
