#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace evoopt::vmsched {

struct VmEvent {
  enum class Kind { Create, Delete };
  std::int64_t vm_id = 0;
  std::int64_t event_index = 0;
  Kind kind = Kind::Create;
  int cpu_cores = 0;  // create only
  int mem_gb = 0;     // create only
};

struct TraceFormatError : std::runtime_error {
  TraceFormatError(int line, const std::string& message)
      : std::runtime_error("trace line " + std::to_string(line) + ": " +
                           message),
        line(line) {}
  int line;
};

struct DanglingDelete : std::runtime_error {
  DanglingDelete(std::int64_t vm_id, int line)
      : std::runtime_error("trace line " + std::to_string(line) +
                           ": delete of non-resident vm " +
                           std::to_string(vm_id)),
        vm_id(vm_id),
        line(line) {}
  std::int64_t vm_id;
  int line;
};

// Canonical CSV: header "vm_id,event_index,kind,cpu_cores,mem_gb"; deletes
// leave the demand fields empty. Validates demands, strictly increasing
// event_index, and residency (DanglingDelete, duplicate creates).
std::vector<VmEvent> load_trace(std::istream& in);
std::vector<VmEvent> load_trace_file(const std::string& path);
void save_trace(std::ostream& out, const std::vector<VmEvent>& events);
void save_trace_file(const std::string& path, const std::vector<VmEvent>& events);

// Re-checks the invariants of an in-memory trace (throws like load_trace,
// with 1-based event positions as "lines").
void validate_trace(const std::vector<VmEvent>& events);

// Seeded synthetic workload: n_creates CREATE events with demands drawn
// uniformly from the choice lists; each VM's DELETE is scheduled after a
// Geometric(lifetime_p) number of later CREATE arrivals (p = 1 means the
// delete immediately follows its create). Deletes that outlive the last
// create are flushed at the end in schedule order. Deterministic per seed.
std::vector<VmEvent> generate_trace(std::uint64_t seed, int n_creates,
                                    const std::vector<int>& cpu_choices,
                                    const std::vector<int>& mem_choices,
                                    double lifetime_p);

// Adapter for the public Huawei VM-placement dataset layout
// (vmid,cpu,memory,time,type with type 0 = create / 1 = delete): rows are
// taken in file order and re-indexed into the canonical event stream.
std::vector<VmEvent> load_huawei_trace(std::istream& in);
std::vector<VmEvent> load_huawei_trace_file(const std::string& path);

}  // namespace evoopt::vmsched
