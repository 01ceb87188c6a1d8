#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evoopt/dsl/eval.hpp"
#include "evoopt/dsl/program.hpp"
#include "evoopt/vmsched/trace.hpp"

namespace evoopt::vmsched {

struct ClusterSpec {
  int num_servers = 1;
  int cap_cpu = 1;  // per server
  int cap_mem = 1;
};

struct ServerState {
  int used_cpu = 0;
  int used_mem = 0;
};

// How a server's scalar utilization is reduced from the two dimensions.
enum class UtilKind { MeanDims, MaxDims };

struct Policy {
  enum class Kind { FirstFit, BestFit, WorstFit, Dsl };
  Kind kind = Kind::FirstFit;
  dsl::Program program;  // Dsl only; SCHEDULE signature

  static Policy first_fit() { return {Kind::FirstFit, {}}; }
  static Policy best_fit() { return {Kind::BestFit, {}}; }
  static Policy worst_fit() { return {Kind::WorstFit, {}}; }
  static Policy from_program(dsl::Program p) { return {Kind::Dsl, std::move(p)}; }
};

struct SimOutcome {
  std::int64_t scheduling_length = 0;  // creates placed before termination
  std::optional<std::int64_t> rejected_vm;
  std::vector<double> utilization_trace;  // cluster mean, one per processed event
  std::vector<std::pair<std::int64_t, int>> placements;  // (vm_id, server)
};

struct DslEvaluationError : std::runtime_error {
  DslEvaluationError(std::int64_t vm_id, int server, const std::string& why)
      : std::runtime_error("policy program failed on vm " +
                           std::to_string(vm_id) + " server " +
                           std::to_string(server) + ": " + why),
        vm_id(vm_id),
        server(server) {}
  std::int64_t vm_id;
  int server;
};

struct SimOptions {
  UtilKind util = UtilKind::MeanDims;
  dsl::EvalLimits limits;
};

double server_util(const ServerState& s, const ClusterSpec& c, UtilKind kind);

// Replays the trace against homogeneous servers. CREATE places on the
// feasible server preferred by the policy (ties to the lowest index; BestFit
// maximizes current utilization, WorstFit minimizes it, Dsl maximizes the
// program's score). Terminates at the first CREATE with no feasible server.
SimOutcome simulate(const Policy& policy, const std::vector<VmEvent>& events,
                    const ClusterSpec& cluster, const SimOptions& opts = {});

}  // namespace evoopt::vmsched
