#include "evoopt/harness/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "evoopt/dsl/errors.hpp"
#include "evoopt/dsl/parser.hpp"
#include "evoopt/vmsched/trace.hpp"

namespace evoopt::harness {
namespace {

constexpr std::array kKnownKeys = {
    "output_dir",
    "resume.checkpoint",
    "evolution.num_islands",
    "evolution.island_capacity",
    "evolution.generations_budget",
    "evolution.candidates_per_generation",
    "evolution.migration_interval",
    "evolution.migration_k",
    "evolution.tournament_size",
    "evolution.exploration_epsilon",
    "evolution.signature_bucket_width",
    "evolution.master_seed",
    "evolution.checkpoint_interval",
    "evolution.seeds",
    "generator.kind",
    "generator.base_url",
    "generator.model",
    "generator.timeout_seconds",
    "generator.max_retries",
    "generator.temperature",
    "generator.backoff_base_ms",
    "generator.max_concurrent",
    "generator.requests_per_minute",
    "task.domain",
    "task.description",
    "task.parsimony_weight",
    "task.aggregation",
    "task.num_servers",
    "task.cap_cpu",
    "task.cap_mem",
    "task.util",
    "task.step_budget",
    "task.trace_files",
    "task.trace_seeds",
    "task.probe_trace_files",
    "task.probe_trace_seeds",
    "task.trace_creates",
    "task.cpu_choices",
    "task.mem_choices",
    "task.lifetime_p",
    "task.problem_kind",
    "task.problem_files",
    "task.problem_seeds",
    "task.probe_problem_seeds",
    "task.problem_m",
    "task.problem_n",
    "task.lambda1_factor",
    "task.lambda2",
    "task.num_groups",
    "task.condition",
    "task.noise",
    "task.sparsity",
    "task.beta0",
    "task.max_iter",
    "task.tol_abs",
    "task.tol_rel",
    "task.update_period",
    "simulate.policies",
    "simulate.genome_file",
    "simulate.trace_files",
    "simulate.trace_seeds",
    "simulate.num_servers",
    "simulate.cap_cpu",
    "simulate.cap_mem",
    "simulate.util",
    "simulate.trace_creates",
    "simulate.cpu_choices",
    "simulate.mem_choices",
    "simulate.lifetime_p",
    "solve.strategies",
    "solve.problem_files",
    "solve.problem_seeds",
    "solve.problem_kind",
    "solve.problem_m",
    "solve.problem_n",
    "solve.lambda1_factor",
    "solve.lambda2",
    "solve.num_groups",
    "solve.condition",
    "solve.noise",
    "solve.sparsity",
    "solve.beta0",
    "solve.max_iter",
    "solve.tol_abs",
    "solve.tol_rel",
    "solve.update_period",
    "solve.mu",
    "solve.eta",
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto at = s.find(sep, start);
    auto piece = trim(s.substr(start, at - start));
    if (!piece.empty()) out.push_back(piece);
    if (at == std::string::npos) break;
    start = at + 1;
  }
  return out;
}

class KeyValues {
 public:
  explicit KeyValues(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      auto key = trim(stripped.substr(0, eq));
      auto value = trim(stripped.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty key");
      if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) ==
          kKnownKeys.end())
        throw ConfigError("unknown config key: " + key);
      if (!values_.emplace(key, value).second)
        throw ConfigError("duplicate config key: " + key);
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  bool any_with_prefix(const std::string& prefix) const {
    auto it = values_.lower_bound(prefix);
    return it != values_.end() && it->first.rfind(prefix, 0) == 0;
  }

  std::string str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string required(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("missing required config key: " + key);
    return it->second;
  }

  template <typename T>
  T number(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    T v{};
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError("config key " + key + ": not a number: " + s);
    return v;
  }

  double real(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not a number: " + it->second);
    }
  }

  std::vector<std::string> list(const std::string& key, char sep) const {
    auto it = values_.find(key);
    if (it == values_.end()) return {};
    return split(it->second, sep);
  }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<int> int_list(const KeyValues& kv, const std::string& key,
                          std::vector<int> fallback) {
  if (!kv.has(key)) return fallback;
  std::vector<int> out;
  for (const auto& piece : kv.list(key, ',')) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (ec != std::errc() || ptr != piece.data() + piece.size())
      throw ConfigError("config key " + key + ": not an integer: " + piece);
    out.push_back(v);
  }
  return out;
}

std::vector<std::uint64_t> seed_list(const KeyValues& kv,
                                     const std::string& key) {
  std::vector<std::uint64_t> out;
  for (const auto& piece : kv.list(key, ',')) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (ec != std::errc() || ptr != piece.data() + piece.size())
      throw ConfigError("config key " + key + ": not a seed: " + piece);
    out.push_back(v);
  }
  return out;
}

vmsched::UtilKind util_kind(const KeyValues& kv, const std::string& key) {
  auto name = kv.str(key, "mean_dims");
  if (name == "mean_dims") return vmsched::UtilKind::MeanDims;
  if (name == "max_dims") return vmsched::UtilKind::MaxDims;
  throw ConfigError("config key " + key + ": unknown utilization kind " + name);
}

admm::ProblemKind problem_kind(const KeyValues& kv, const std::string& key) {
  auto name = kv.str(key, "lasso");
  try {
    return admm::kind_by_name(name);
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key " + key + ": unknown problem kind " + name);
  }
}

void fill_evolution(const KeyValues& kv, ExperimentConfig& cfg) {
  auto& e = cfg.evolution;
  e.num_islands = kv.number("evolution.num_islands", e.num_islands);
  e.island_capacity = kv.number("evolution.island_capacity", e.island_capacity);
  e.generations_budget =
      kv.number("evolution.generations_budget", e.generations_budget);
  e.candidates_per_generation = kv.number(
      "evolution.candidates_per_generation", e.candidates_per_generation);
  e.migration_interval =
      kv.number("evolution.migration_interval", e.migration_interval);
  e.migration_k = kv.number("evolution.migration_k", e.migration_k);
  e.tournament_size = kv.number("evolution.tournament_size", e.tournament_size);
  e.exploration_epsilon =
      kv.real("evolution.exploration_epsilon", e.exploration_epsilon);
  e.signature_bucket_width =
      kv.real("evolution.signature_bucket_width", e.signature_bucket_width);
  e.master_seed = kv.number("evolution.master_seed", e.master_seed);
  cfg.checkpoint_interval =
      kv.number("evolution.checkpoint_interval", cfg.checkpoint_interval);
  if (cfg.checkpoint_interval < 1)
    throw ConfigError("evolution.checkpoint_interval must be positive");
  cfg.seed_sources = kv.list("evolution.seeds", ';');
}

void fill_generator(const KeyValues& kv, ExperimentConfig& cfg) {
  cfg.generator_kind = kv.str("generator.kind", "mock");
  if (cfg.generator_kind != "mock" && cfg.generator_kind != "llm")
    throw ConfigError("generator.kind must be mock or llm");
  auto& ep = cfg.endpoint;
  ep.base_url = kv.str("generator.base_url", "");
  ep.model_name = kv.str("generator.model", ep.model_name);
  ep.timeout_seconds = kv.real("generator.timeout_seconds", ep.timeout_seconds);
  ep.max_retries = kv.number("generator.max_retries", ep.max_retries);
  ep.temperature = kv.real("generator.temperature", ep.temperature);
  ep.backoff_base_ms = kv.number("generator.backoff_base_ms", ep.backoff_base_ms);
  ep.max_concurrent = kv.number("generator.max_concurrent", ep.max_concurrent);
  ep.requests_per_minute =
      kv.number("generator.requests_per_minute", ep.requests_per_minute);
  if (cfg.generator_kind == "llm") {
    if (ep.base_url.empty())
      throw ConfigError("generator.kind = llm requires generator.base_url");
    if (ep.temperature < 0.0 || ep.temperature > 2.0)
      throw ConfigError("generator.temperature must lie in [0, 2]");
  }
}

std::vector<vmsched::VmEvent> synthetic_trace(const KeyValues& kv,
                                              const std::string& section,
                                              std::uint64_t seed) {
  auto creates = kv.number<int>(section + ".trace_creates", 50);
  auto cpu = int_list(kv, section + ".cpu_choices", {1, 2, 4});
  auto mem = int_list(kv, section + ".mem_choices", {2, 4, 8});
  auto p = kv.real(section + ".lifetime_p", 0.3);
  return vmsched::generate_trace(seed, creates, cpu, mem, p);
}

void fill_task(const KeyValues& kv, ExperimentConfig& cfg) {
  if (!kv.any_with_prefix("task.")) return;
  cfg.has_task = true;
  auto& task = cfg.task;

  auto domain = kv.required("task.domain");
  if (domain == "schedule") {
    task.domain = fit::TaskDescriptor::Domain::Schedule;
  } else if (domain == "admm_penalty") {
    task.domain = fit::TaskDescriptor::Domain::AdmmPenalty;
  } else {
    throw ConfigError("task.domain must be schedule or admm_penalty");
  }
  task.description = kv.str(
      "task.description",
      domain == "schedule"
          ? "Place as many virtual machines as possible before the cluster "
            "runs out of room. Higher server scores win placement."
          : "Drive the ADMM penalty parameter so the solver converges in as "
            "few iterations as possible.");
  task.parsimony_weight = kv.real("task.parsimony_weight", 0.01);
  auto agg = kv.str("task.aggregation", "mean");
  if (agg == "mean") {
    task.aggregation = fit::Aggregation::Mean;
  } else if (agg == "min") {
    task.aggregation = fit::Aggregation::Min;
  } else {
    throw ConfigError("task.aggregation must be mean or min");
  }

  if (task.domain == fit::TaskDescriptor::Domain::Schedule) {
    vmsched::ClusterSpec cluster{kv.number<int>("task.num_servers", 3),
                                 kv.number<int>("task.cap_cpu", 8),
                                 kv.number<int>("task.cap_mem", 16)};
    task.sim_options.util = util_kind(kv, "task.util");
    task.sim_options.limits.step_budget =
        kv.number<std::int64_t>("task.step_budget", 10000);
    try {
      for (const auto& path : kv.list("task.trace_files", ';'))
        task.schedule_train.push_back(
            {vmsched::load_trace_file(path), cluster});
      for (auto seed : seed_list(kv, "task.trace_seeds"))
        task.schedule_train.push_back(
            {synthetic_trace(kv, "task", seed), cluster});
      for (const auto& path : kv.list("task.probe_trace_files", ';'))
        task.schedule_probe.push_back(
            {vmsched::load_trace_file(path), cluster});
      for (auto seed : seed_list(kv, "task.probe_trace_seeds"))
        task.schedule_probe.push_back(
            {synthetic_trace(kv, "task", seed), cluster});
    } catch (const std::exception& e) {
      throw ConfigError(std::string("task trace: ") + e.what());
    }
    if (task.schedule_train.empty())
      throw ConfigError("schedule task has no training traces");
  } else {
    admm::RandomProblemSpec spec;
    spec.kind = problem_kind(kv, "task.problem_kind");
    spec.m = kv.number("task.problem_m", spec.m);
    spec.n = kv.number("task.problem_n", spec.n);
    spec.lambda1_factor = kv.real("task.lambda1_factor", spec.lambda1_factor);
    spec.lambda2 = kv.real("task.lambda2", spec.lambda2);
    spec.num_groups = kv.number("task.num_groups", spec.num_groups);
    spec.condition = kv.real("task.condition", spec.condition);
    spec.noise = kv.real("task.noise", spec.noise);
    spec.sparsity = kv.real("task.sparsity", spec.sparsity);

    admm::SolveOptions options;
    options.beta0 = kv.real("task.beta0", options.beta0);
    options.max_iter = kv.number("task.max_iter", std::int64_t{1000});
    options.tol_abs = kv.real("task.tol_abs", options.tol_abs);
    options.tol_rel = kv.real("task.tol_rel", options.tol_rel);
    options.update_period =
        kv.number("task.update_period", options.update_period);
    if (options.tol_abs <= 0.0 || options.tol_rel <= 0.0)
      throw ConfigError("task tolerances must be positive");

    try {
      for (const auto& path : kv.list("task.problem_files", ';'))
        task.penalty_train.push_back(
            {admm::load_problem_file(path), options});
      for (auto seed : seed_list(kv, "task.problem_seeds")) {
        spec.seed = seed;
        task.penalty_train.push_back({admm::random_problem(spec), options});
      }
      for (auto seed : seed_list(kv, "task.probe_problem_seeds")) {
        spec.seed = seed;
        task.penalty_probe.push_back({admm::random_problem(spec), options});
      }
    } catch (const std::exception& e) {
      throw ConfigError(std::string("task problem: ") + e.what());
    }
    if (task.penalty_train.empty())
      throw ConfigError("penalty task has no training problems");
  }
}

void fill_simulate(const KeyValues& kv, ExperimentConfig& cfg) {
  if (!kv.any_with_prefix("simulate.")) return;
  cfg.has_simulate = true;
  auto& sim = cfg.simulate;

  sim.cluster = {kv.number<int>("simulate.num_servers", 3),
                 kv.number<int>("simulate.cap_cpu", 8),
                 kv.number<int>("simulate.cap_mem", 16)};
  sim.options.util = util_kind(kv, "simulate.util");

  sim.policy_names = kv.list("simulate.policies", ',');
  if (sim.policy_names.empty())
    throw ConfigError("simulate.policies lists no policies");
  bool needs_genome = false;
  for (const auto& name : sim.policy_names) {
    if (name == "dsl") {
      needs_genome = true;
    } else if (name != "first_fit" && name != "best_fit" &&
               name != "worst_fit") {
      throw ConfigError("unknown policy in simulate.policies: " + name);
    }
  }
  if (needs_genome) {
    auto path = kv.str("simulate.genome_file", "");
    if (path.empty())
      throw ConfigError("simulate.policies includes dsl but no genome_file");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read genome file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      sim.genome = dsl::typecheck(dsl::parse(trim(buf.str())),
                                  dsl::Signature::schedule());
    } catch (const dsl::DslError& e) {
      throw ConfigError("genome file " + path + ": " + e.what());
    }
  }

  try {
    for (const auto& path : kv.list("simulate.trace_files", ';')) {
      auto base = path.find_last_of('/');
      sim.scenarios.push_back(
          {base == std::string::npos ? path : path.substr(base + 1),
           vmsched::load_trace_file(path)});
    }
    for (auto seed : seed_list(kv, "simulate.trace_seeds"))
      sim.scenarios.push_back({"seed" + std::to_string(seed),
                               synthetic_trace(kv, "simulate", seed)});
  } catch (const std::exception& e) {
    throw ConfigError(std::string("simulate trace: ") + e.what());
  }
  if (sim.scenarios.empty())
    throw ConfigError("simulate has no scenarios");
}

void fill_solve(const KeyValues& kv, ExperimentConfig& cfg) {
  if (!kv.any_with_prefix("solve.")) return;
  cfg.has_solve = true;
  auto& sol = cfg.solve;

  sol.options.beta0 = kv.real("solve.beta0", sol.options.beta0);
  sol.options.max_iter =
      kv.number("solve.max_iter", sol.options.max_iter);
  sol.options.tol_abs = kv.real("solve.tol_abs", sol.options.tol_abs);
  sol.options.tol_rel = kv.real("solve.tol_rel", sol.options.tol_rel);
  sol.options.update_period =
      kv.number("solve.update_period", sol.options.update_period);
  if (sol.options.tol_abs <= 0.0 || sol.options.tol_rel <= 0.0)
    throw ConfigError("solve tolerances must be positive");
  double mu = kv.real("solve.mu", 10.0);
  double eta = kv.real("solve.eta", 2.0);

  auto names = kv.list("solve.strategies", ',');
  if (names.empty()) throw ConfigError("solve.strategies lists no strategies");
  for (const auto& name : names) {
    if (name == "fixed") {
      sol.strategies.push_back({name, admm::PenaltyStrategy::fixed()});
    } else if (name == "residual_balancing") {
      sol.strategies.push_back(
          {name, admm::PenaltyStrategy::residual_balancing(mu, eta)});
    } else if (name.rfind("rule:", 0) == 0) {
      auto path = name.substr(5);
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot read rule file: " + path);
      std::ostringstream buf;
      buf << in.rdbuf();
      try {
        sol.strategies.push_back(
            {name, admm::PenaltyStrategy::rule(dsl::typecheck(
                       dsl::parse(trim(buf.str())),
                       dsl::Signature::penalty()))});
      } catch (const dsl::DslError& e) {
        throw ConfigError("rule file " + path + ": " + e.what());
      }
    } else {
      throw ConfigError("unknown strategy in solve.strategies: " + name);
    }
  }

  admm::RandomProblemSpec spec;
  spec.kind = problem_kind(kv, "solve.problem_kind");
  spec.m = kv.number("solve.problem_m", spec.m);
  spec.n = kv.number("solve.problem_n", spec.n);
  spec.lambda1_factor = kv.real("solve.lambda1_factor", spec.lambda1_factor);
  spec.lambda2 = kv.real("solve.lambda2", spec.lambda2);
  spec.num_groups = kv.number("solve.num_groups", spec.num_groups);
  spec.condition = kv.real("solve.condition", spec.condition);
  spec.noise = kv.real("solve.noise", spec.noise);
  spec.sparsity = kv.real("solve.sparsity", spec.sparsity);

  try {
    for (const auto& path : kv.list("solve.problem_files", ';')) {
      auto base = path.find_last_of('/');
      sol.instances.push_back(
          {base == std::string::npos ? path : path.substr(base + 1),
           admm::load_problem_file(path)});
    }
    for (auto seed : seed_list(kv, "solve.problem_seeds")) {
      spec.seed = seed;
      sol.instances.push_back(
          {"seed" + std::to_string(seed), admm::random_problem(spec)});
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("solve problem: ") + e.what());
  }
  if (sol.instances.empty()) throw ConfigError("solve has no problems");
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& content) {
  KeyValues kv(content);
  ExperimentConfig cfg;
  cfg.output_dir = kv.str("output_dir", cfg.output_dir);
  cfg.resume_checkpoint = kv.str("resume.checkpoint", "");
  fill_evolution(kv, cfg);
  fill_generator(kv, cfg);
  fill_task(kv, cfg);
  fill_simulate(kv, cfg);
  fill_solve(kv, cfg);
  return cfg;
}

ExperimentConfig parse_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str());
}

}  // namespace evoopt::harness
