#pragma once

#include <string>
#include <vector>

#include "evoopt/admm/solver.hpp"
#include "evoopt/dsl/program.hpp"
#include "evoopt/vmsched/sim.hpp"

namespace evoopt::fit {

// Returned for any candidate whose evaluation faults; every successful
// evaluation scores strictly above this.
inline constexpr double kSentinelFitness = -1e9;
inline constexpr double kNonConvergencePenalty = 1000.0;

enum class Aggregation { Mean, Min };

struct ScheduleInstance {
  std::vector<vmsched::VmEvent> trace;
  vmsched::ClusterSpec cluster;
};

struct PenaltyInstance {
  admm::StructuredProblem problem;
  admm::SolveOptions options;  // beta0, tolerances, max_iter
};

struct TaskDescriptor {
  enum class Domain { Schedule, AdmmPenalty };
  Domain domain = Domain::Schedule;
  std::string description;  // handed to generators verbatim
  double parsimony_weight = 0.01;
  Aggregation aggregation = Aggregation::Mean;
  std::vector<ScheduleInstance> schedule_train, schedule_probe;
  std::vector<PenaltyInstance> penalty_train, penalty_probe;
  vmsched::SimOptions sim_options;  // Schedule: util kind + program budget

  const dsl::Signature& signature() const {
    return domain == Domain::Schedule ? dsl::Signature::schedule()
                                      : dsl::Signature::penalty();
  }
  std::size_t probe_count() const {
    return domain == Domain::Schedule ? schedule_probe.size()
                                      : penalty_probe.size();
  }
};

struct FitnessResult {
  double fitness = kSentinelFitness;
  std::vector<double> signature;     // probe scores, zeros on fault
  std::vector<double> train_scores;  // per-instance raw scores (diagnostics)
  bool faulted = false;
  std::string note;  // diagnostic for faults, empty otherwise
};

// Higher is better for both evaluators:
//   Schedule:    raw score = scheduling length under the program's policy
//   AdmmPenalty: raw score = -iterations, or -(max_iter + penalty) without
//                convergence
// fitness = aggregate(train scores) - parsimony_weight * complexity.
// Any program fault on any instance yields the sentinel. Deterministic.
FitnessResult evaluate_schedule(const dsl::Program& prog,
                                const TaskDescriptor& task);
FitnessResult evaluate_penalty_rule(const dsl::Program& prog,
                                    const TaskDescriptor& task);
FitnessResult evaluate(const dsl::Program& prog, const TaskDescriptor& task);

}  // namespace evoopt::fit
