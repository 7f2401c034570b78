#pragma once
// Synthetic annotators. Each vote is a pure function of (seed, worker, item),
// so corpora are reproducible and independent of generation order.
//
// Correlation model: every item carries a difficulty d ~ U(0,1). A vote on
// class c is correct with probability
//   (1 - rho_c) * alpha_c + rho_c * [d < alpha_c]
// so at rho = 0 workers are independent, at rho = 1 all workers agree on
// whether the item is easy, and the per-vote accuracy stays alpha_c for any
// rho. With probability rho_c the wrong class is also shared by the item.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellvote/annotation.hpp"

namespace cellvote::sim {

using ClassProbabilities = std::array<double, kNumClasses>;
using ErrorRows = std::array<ClassProbabilities, kNumClasses>;  // zero diagonal, rows sum to 1

struct WorkerModel {
  std::string worker_id;
  ClassProbabilities accuracy{};  // alpha per true class
  ErrorRows errors{};             // where a wrong vote goes, per true class
  std::uint64_t seed = 0;         // worker-specific stream

  // Throws Error(InvalidArgument) if a probability is outside [0,1] or an
  // error row is not a distribution over the wrong classes.
  void validate() const;
};

// Per-vote accuracies and error proportions of the published per-vote matrix.
ClassProbabilities reference_accuracy();
ErrorRows reference_errors();
WorkerModel reference_worker(std::string worker_id, std::uint64_t seed = 0);

struct DifficultyModel {
  ClassProbabilities rho{};  // correlation weight per true class
  std::uint64_t seed = 0;

  double difficulty(std::string_view item_id) const;
  void validate() const;
};

// Probability that one vote on an item of class c with difficulty d is correct.
double correct_probability(double alpha, double rho, double d);

CellClass simulate_vote(const WorkerModel& model, std::string_view item_id, CellClass truth,
                        const DifficultyModel& difficulty);

struct ItemSpec {
  std::string item_id;
  CellClass truth = CellClass::Circular;
};

struct ExperimentConfig {
  std::vector<WorkerModel> workers;
  std::vector<ItemSpec> items;
  int k = kDefaultRedundancy;
  DifficultyModel difficulty;
  std::uint64_t seed = 0;      // picks which k workers vote on each item
  Seconds start = 1'685'577'600;  // 2023-06-01T00:00:00Z
};

// k votes per item from k distinct workers, items in input order.
// Throws Error(InsufficientWorkers) when fewer than k workers are given.
std::vector<Vote> run_experiment(const ExperimentConfig& config);

// Items per class laid out as "sim-000001", ... in class order.
std::vector<ItemSpec> make_items(const std::array<int, kNumClasses>& per_class);

struct AccuracyEstimate {
  double accuracy = 0.0;
  double standard_error = 0.0;
  int items = 0;
};

// Consensus accuracy for one class by Monte-Carlo over n items: the fraction
// of items whose true class collects at least `quorum` of k votes.
AccuracyEstimate simulate_consensus_accuracy(double alpha, double rho, int items, std::uint64_t seed,
                                             int k = kDefaultRedundancy, int quorum = kDefaultQuorum);

// Closed form of the same quantity under the threshold model.
double expected_consensus_accuracy(double alpha, double rho, int k = kDefaultRedundancy,
                                   int quorum = kDefaultQuorum);

struct CalibrationOptions {
  int k = kDefaultRedundancy;
  int quorum = kDefaultQuorum;
  int items = 100'000;        // Monte-Carlo items per evaluation
  double tolerance = 1e-4;    // bisection stops when the rho bracket is this narrow
  std::uint64_t seed = 2024;  // shared across evaluations (common random numbers)
};

struct Calibration {
  double rho = 0.0;
  double achieved = 0.0;        // simulated consensus accuracy at rho
  double standard_error = 0.0;  // of `achieved`
  double ci_low = 0.0;          // approximate 95% interval for rho
  double ci_high = 0.0;
  int evaluations = 0;
};

// Finds rho in [0,1] whose simulated consensus accuracy equals target.
// Throws Error(TargetUnreachable) if the target lies outside the range the
// model can produce, [alpha, P(Binomial(k, alpha) >= quorum)].
Calibration calibrate_correlation(double target, double alpha, const CalibrationOptions& options = {});

std::array<Calibration, kNumClasses> calibrate_correlation(const ClassProbabilities& targets,
                                                           const ClassProbabilities& alphas,
                                                           const CalibrationOptions& options = {});

}  // namespace cellvote::sim
