#include "evoopt/vmsched/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "evoopt/common/rng.hpp"

namespace evoopt::vmsched {
namespace {

constexpr const char* kHeader = "vm_id,event_index,kind,cpu_cores,mem_gb";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::int64_t parse_i64(const std::string& s, int line, const char* what) {
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw TraceFormatError(line, std::string("bad ") + what + ": '" + s + "'");
  return v;
}

// Residency bookkeeping shared by the validators.
struct ResidencyCheck {
  std::map<std::int64_t, bool> resident;
  std::int64_t last_index = -1;
  bool first = true;

  void feed(const VmEvent& e, int line) {
    if (!first && e.event_index <= last_index)
      throw TraceFormatError(line, "event_index not strictly increasing");
    first = false;
    last_index = e.event_index;
    if (e.kind == VmEvent::Kind::Create) {
      if (e.cpu_cores <= 0 || e.mem_gb <= 0)
        throw TraceFormatError(line, "create with non-positive demand");
      auto [it, inserted] = resident.emplace(e.vm_id, true);
      if (!inserted && it->second)
        throw TraceFormatError(line, "duplicate create for resident vm " +
                                         std::to_string(e.vm_id));
      it->second = true;
    } else {
      auto it = resident.find(e.vm_id);
      if (it == resident.end() || !it->second)
        throw DanglingDelete(e.vm_id, line);
      it->second = false;
    }
  }
};

}  // namespace

std::vector<VmEvent> load_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kHeader)
    throw TraceFormatError(1, std::string("expected header '") + kHeader + "'");
  std::vector<VmEvent> events;
  ResidencyCheck check;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 5)
      throw TraceFormatError(line_no, "expected 5 fields");
    VmEvent e;
    e.vm_id = parse_i64(fields[0], line_no, "vm_id");
    e.event_index = parse_i64(fields[1], line_no, "event_index");
    if (e.event_index < 0)
      throw TraceFormatError(line_no, "negative event_index");
    if (fields[2] == "create") {
      e.kind = VmEvent::Kind::Create;
      e.cpu_cores = static_cast<int>(parse_i64(fields[3], line_no, "cpu_cores"));
      e.mem_gb = static_cast<int>(parse_i64(fields[4], line_no, "mem_gb"));
    } else if (fields[2] == "delete") {
      e.kind = VmEvent::Kind::Delete;
      if (!fields[3].empty() || !fields[4].empty())
        throw TraceFormatError(line_no, "delete must leave demand fields empty");
    } else {
      throw TraceFormatError(line_no, "unknown kind '" + fields[2] + "'");
    }
    check.feed(e, line_no);
    events.push_back(e);
  }
  return events;
}

std::vector<VmEvent> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError(0, "cannot open " + path);
  return load_trace(in);
}

void save_trace(std::ostream& out, const std::vector<VmEvent>& events) {
  out << kHeader << '\n';
  for (const auto& e : events) {
    out << e.vm_id << ',' << e.event_index << ',';
    if (e.kind == VmEvent::Kind::Create)
      out << "create," << e.cpu_cores << ',' << e.mem_gb << '\n';
    else
      out << "delete,,\n";
  }
}

void save_trace_file(const std::string& path, const std::vector<VmEvent>& events) {
  std::ofstream out(path);
  if (!out) throw TraceFormatError(0, "cannot open " + path + " for writing");
  save_trace(out, events);
}

void validate_trace(const std::vector<VmEvent>& events) {
  ResidencyCheck check;
  int pos = 0;
  for (const auto& e : events) check.feed(e, ++pos);
}

std::vector<VmEvent> generate_trace(std::uint64_t seed, int n_creates,
                                    const std::vector<int>& cpu_choices,
                                    const std::vector<int>& mem_choices,
                                    double lifetime_p) {
  if (n_creates < 0 || cpu_choices.empty() || mem_choices.empty() ||
      !(lifetime_p > 0.0) || lifetime_p > 1.0)
    throw std::invalid_argument("generate_trace: bad arguments");
  Rng rng(seed);
  std::vector<VmEvent> events;
  events.reserve(static_cast<std::size_t>(n_creates) * 2);
  // deletes keyed by the create index after which they fire
  std::map<std::int64_t, std::vector<std::int64_t>> pending;
  std::int64_t next_index = 0;
  for (int i = 0; i < n_creates; ++i) {
    VmEvent e;
    e.vm_id = i + 1;
    e.event_index = next_index++;
    e.kind = VmEvent::Kind::Create;
    e.cpu_cores = cpu_choices[rng.below(cpu_choices.size())];
    e.mem_gb = mem_choices[rng.below(mem_choices.size())];
    events.push_back(e);
    std::int64_t life;
    if (lifetime_p >= 1.0) {
      life = 0;
    } else {
      double u = rng.uniform01();
      while (u <= 0.0) u = rng.uniform01();
      life = static_cast<std::int64_t>(
          std::floor(std::log(u) / std::log(1.0 - lifetime_p)));
    }
    pending[i + life].push_back(e.vm_id);
    auto due = pending.find(i);
    if (due != pending.end()) {
      for (std::int64_t vm : due->second)
        events.push_back({vm, next_index++, VmEvent::Kind::Delete, 0, 0});
      pending.erase(due);
    }
  }
  for (auto& [trigger, vms] : pending)
    for (std::int64_t vm : vms)
      events.push_back({vm, next_index++, VmEvent::Kind::Delete, 0, 0});
  return events;
}

std::vector<VmEvent> load_huawei_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw TraceFormatError(1, "empty file");
  if (strip_cr(line) != "vmid,cpu,memory,time,type")
    throw TraceFormatError(1, "expected header 'vmid,cpu,memory,time,type'");
  std::vector<VmEvent> events;
  int line_no = 1;
  std::int64_t next_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 5)
      throw TraceFormatError(line_no, "expected 5 fields");
    VmEvent e;
    e.vm_id = parse_i64(fields[0], line_no, "vmid");
    e.event_index = next_index++;
    std::int64_t type = parse_i64(fields[4], line_no, "type");
    if (type == 0) {
      e.kind = VmEvent::Kind::Create;
      e.cpu_cores = static_cast<int>(parse_i64(fields[1], line_no, "cpu"));
      e.mem_gb = static_cast<int>(parse_i64(fields[2], line_no, "memory"));
    } else if (type == 1) {
      e.kind = VmEvent::Kind::Delete;
    } else {
      throw TraceFormatError(line_no, "type must be 0 or 1");
    }
    events.push_back(e);
  }
  validate_trace(events);
  return events;
}

std::vector<VmEvent> load_huawei_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError(0, "cannot open " + path);
  return load_huawei_trace(in);
}

}  // namespace evoopt::vmsched
