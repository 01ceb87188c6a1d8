#include "evoopt/vmsched/sim.hpp"

#include <cassert>

#include "evoopt/dsl/errors.hpp"

namespace evoopt::vmsched {

double server_util(const ServerState& s, const ClusterSpec& c, UtilKind kind) {
  double cu = static_cast<double>(s.used_cpu) / c.cap_cpu;
  double mu = static_cast<double>(s.used_mem) / c.cap_mem;
  return kind == UtilKind::MeanDims ? 0.5 * (cu + mu) : std::max(cu, mu);
}

namespace {

double cluster_util(const std::vector<ServerState>& servers,
                    const ClusterSpec& c, UtilKind kind) {
  double sum = 0.0;
  for (const auto& s : servers) sum += server_util(s, c, kind);
  return sum / static_cast<double>(servers.size());
}

}  // namespace

SimOutcome simulate(const Policy& policy, const std::vector<VmEvent>& events,
                    const ClusterSpec& cluster, const SimOptions& opts) {
  if (cluster.num_servers <= 0 || cluster.cap_cpu <= 0 || cluster.cap_mem <= 0)
    throw std::invalid_argument("simulate: bad cluster spec");
  if (policy.kind == Policy::Kind::Dsl &&
      (policy.program.signature == nullptr ||
       policy.program.signature->kind() != dsl::Signature::Kind::Schedule))
    throw std::invalid_argument("simulate: policy program must use the "
                                "placement signature");

  std::vector<ServerState> servers(
      static_cast<std::size_t>(cluster.num_servers));
  // resident vm -> (server, cpu, mem); deletes must find their placement
  std::map<std::int64_t, std::tuple<int, int, int>> resident;
  SimOutcome out;

  for (const auto& e : events) {
    if (e.kind == VmEvent::Kind::Delete) {
      auto it = resident.find(e.vm_id);
      if (it == resident.end())
        throw DanglingDelete(e.vm_id, static_cast<int>(e.event_index));
      auto [srv, cpu, mem] = it->second;
      servers[static_cast<std::size_t>(srv)].used_cpu -= cpu;
      servers[static_cast<std::size_t>(srv)].used_mem -= mem;
      assert(servers[static_cast<std::size_t>(srv)].used_cpu >= 0);
      assert(servers[static_cast<std::size_t>(srv)].used_mem >= 0);
      resident.erase(it);
      out.utilization_trace.push_back(
          cluster_util(servers, cluster, opts.util));
      continue;
    }

    int chosen = -1;
    double best_score = 0.0;
    for (int s = 0; s < cluster.num_servers; ++s) {
      const ServerState& srv = servers[static_cast<std::size_t>(s)];
      int free_cpu = cluster.cap_cpu - srv.used_cpu;
      int free_mem = cluster.cap_mem - srv.used_mem;
      if (free_cpu < e.cpu_cores || free_mem < e.mem_gb) continue;
      double score;
      switch (policy.kind) {
        case Policy::Kind::FirstFit:
          score = 0.0;
          break;
        case Policy::Kind::BestFit:
          score = server_util(srv, cluster, opts.util);
          break;
        case Policy::Kind::WorstFit:
          score = -server_util(srv, cluster, opts.util);
          break;
        case Policy::Kind::Dsl: {
          double vals[5] = {static_cast<double>(e.cpu_cores),
                            static_cast<double>(e.mem_gb),
                            static_cast<double>(free_cpu),
                            static_cast<double>(free_mem),
                            server_util(srv, cluster, opts.util)};
          try {
            score = dsl::evaluate(policy.program, vals, opts.limits);
          } catch (const dsl::DslError& err) {
            throw DslEvaluationError(e.vm_id, s, err.what());
          }
          break;
        }
        default:
          score = 0.0;
          break;
      }
      // strict '>' keeps ties on the lowest index
      if (chosen < 0 || score > best_score) {
        chosen = s;
        best_score = score;
      }
    }

    if (chosen < 0) {
      out.rejected_vm = e.vm_id;
      break;
    }
    servers[static_cast<std::size_t>(chosen)].used_cpu += e.cpu_cores;
    servers[static_cast<std::size_t>(chosen)].used_mem += e.mem_gb;
    assert(servers[static_cast<std::size_t>(chosen)].used_cpu <= cluster.cap_cpu);
    assert(servers[static_cast<std::size_t>(chosen)].used_mem <= cluster.cap_mem);
    resident.emplace(e.vm_id, std::make_tuple(chosen, e.cpu_cores, e.mem_gb));
    out.placements.emplace_back(e.vm_id, chosen);
    ++out.scheduling_length;
    out.utilization_trace.push_back(cluster_util(servers, cluster, opts.util));
  }

  return out;
}

}  // namespace evoopt::vmsched
