#include "evoopt/fitness/fitness.hpp"

#include <algorithm>
#include <stdexcept>

#include "evoopt/dsl/errors.hpp"

namespace evoopt::fit {
namespace {

double aggregate(Aggregation agg, const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("no training instances");
  if (agg == Aggregation::Min)
    return *std::min_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

FitnessResult sentinel_result(const TaskDescriptor& task, std::string note) {
  FitnessResult out;
  out.fitness = kSentinelFitness;
  out.signature.assign(task.probe_count(), 0.0);
  out.faulted = true;
  out.note = std::move(note);
  return out;
}

double schedule_score(const vmsched::Policy& policy,
                      const ScheduleInstance& inst,
                      const vmsched::SimOptions& opts) {
  auto outcome = vmsched::simulate(policy, inst.trace, inst.cluster, opts);
  return static_cast<double>(outcome.scheduling_length);
}

double penalty_score(const dsl::Program& prog, const PenaltyInstance& inst) {
  auto report = admm::solve(inst.problem,
                            admm::PenaltyStrategy::rule(prog), inst.options);
  if (report.converged) return -static_cast<double>(report.iterations);
  return -(static_cast<double>(inst.options.max_iter) +
           kNonConvergencePenalty);
}

template <typename Inst, typename Score>
FitnessResult run(const dsl::Program& prog, const TaskDescriptor& task,
                  const std::vector<Inst>& train,
                  const std::vector<Inst>& probe, Score score) {
  FitnessResult out;
  out.train_scores.reserve(train.size());
  for (const auto& inst : train) out.train_scores.push_back(score(inst));
  out.signature.reserve(probe.size());
  for (const auto& inst : probe) out.signature.push_back(score(inst));
  out.fitness = aggregate(task.aggregation, out.train_scores) -
                task.parsimony_weight *
                    static_cast<double>(dsl::complexity(prog));
  return out;
}

}  // namespace

FitnessResult evaluate_schedule(const dsl::Program& prog,
                                const TaskDescriptor& task) {
  if (prog.signature != &dsl::Signature::schedule())
    return sentinel_result(task, "program is not a scheduling rule");
  auto policy = vmsched::Policy::from_program(prog);
  try {
    return run(prog, task, task.schedule_train, task.schedule_probe,
               [&](const ScheduleInstance& inst) {
                 return schedule_score(policy, inst, task.sim_options);
               });
  } catch (const vmsched::DslEvaluationError& e) {
    return sentinel_result(task, e.what());
  }
}

FitnessResult evaluate_penalty_rule(const dsl::Program& prog,
                                    const TaskDescriptor& task) {
  if (prog.signature != &dsl::Signature::penalty())
    return sentinel_result(task, "program is not a penalty rule");
  try {
    return run(prog, task, task.penalty_train, task.penalty_probe,
               [&](const PenaltyInstance& inst) {
                 return penalty_score(prog, inst);
               });
  } catch (const dsl::DslError& e) {
    return sentinel_result(task, e.what());
  } catch (const admm::NumericalError& e) {
    return sentinel_result(task, e.what());
  }
}

FitnessResult evaluate(const dsl::Program& prog, const TaskDescriptor& task) {
  return task.domain == TaskDescriptor::Domain::Schedule
             ? evaluate_schedule(prog, task)
             : evaluate_penalty_rule(prog, task);
}

}  // namespace evoopt::fit
