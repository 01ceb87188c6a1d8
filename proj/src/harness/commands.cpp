#include "evoopt/harness/commands.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evoopt/dsl/errors.hpp"
#include "evoopt/dsl/parser.hpp"
#include "evoopt/evolve/checkpoint.hpp"

namespace evoopt::harness {
namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Quote only when the field would break the row; sources with commas are the
// common case.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

fs::path ensure_output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

evolve::Generator make_generator(const ExperimentConfig& cfg) {
  if (cfg.generator_kind == "llm") {
    auto endpoint = cfg.endpoint;
    return [endpoint](const gen::GenerationRequest& req) {
      return gen::llm_generate(req, endpoint);
    };
  }
  return [](const gen::GenerationRequest& req) {
    return gen::mock_generate(req);
  };
}

// exit 3 belongs to endpoint failures detectable before any generation runs.
bool credentials_missing(const ExperimentConfig& cfg) {
  return cfg.generator_kind == "llm" &&
         std::getenv(gen::kApiKeyEnvVar) == nullptr;
}

std::string curve_csv(const std::vector<evolve::CurvePoint>& curve) {
  std::string out = "generation,best_fitness,mean_fitness\n";
  for (const auto& p : curve) {
    out += std::to_string(p.generation);
    out += ',';
    out += fmt_double(p.best_fitness);
    out += ',';
    out += fmt_double(p.mean_fitness);
    out += '\n';
  }
  return out;
}

std::string archive_csv(const evolve::EngineState& state) {
  std::string out = "hash,source,fitness,first_seen\n";
  for (const auto& [hash, entry] : state.archive) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(hash));
    out += hex;
    out += ',';
    out += csv_field(entry.source);
    out += ',';
    out += fmt_double(entry.fitness);
    out += ',';
    out += std::to_string(entry.first_seen);
    out += '\n';
  }
  return out;
}

// Shared tail of evolve and resume: generations loop (run() handles the
// migration cadence), periodic checkpoints, final artifacts.
int run_to_budget(evolve::EngineState& state, const ExperimentConfig& cfg,
                  const fs::path& dir) {
  auto generate = make_generator(cfg);
  auto evaluate = [&cfg](const dsl::Program& p) {
    return fit::evaluate(p, cfg.task);
  };
  auto checkpoint_path = (dir / "checkpoint.json").string();
  while (state.generation < state.config.generations_budget) {
    evolve::run(state, generate, evaluate, 1);
    if (state.generation % cfg.checkpoint_interval == 0)
      evolve::save_checkpoint_file(checkpoint_path, state);
  }
  evolve::save_checkpoint_file(checkpoint_path, state);
  const auto* best = evolve::best_individual(state);
  write_file(dir / "best_genome.txt",
             best ? best->genome.canonical_text + "\n" : "");
  write_file(dir / "curve.csv", curve_csv(state.curve));
  write_file(dir / "archive.csv", archive_csv(state));
  return kExitOk;
}

int fail_input(const char* command, const std::string& what) {
  std::cerr << command << ": " << what << "\n";
  return kExitBadInput;
}

}  // namespace

int cmd_evolve(const ExperimentConfig& cfg) {
  try {
    if (!cfg.has_task) return fail_input("evolve", "config has no task section");
    if (credentials_missing(cfg)) {
      std::cerr << "evolve: MissingCredentials: set " << gen::kApiKeyEnvVar
                << " to use the llm generator\n";
      return kExitService;
    }
    const auto& sig = cfg.task.signature();
    std::vector<dsl::Program> seeds;
    for (const auto& src : cfg.seed_sources)
      seeds.push_back(dsl::typecheck(dsl::parse(src), sig));
    auto dir = ensure_output_dir(cfg);
    auto state = evolve::initialize(
        cfg.evolution, cfg.task.description, sig, seeds,
        [&cfg](const dsl::Program& p) { return fit::evaluate(p, cfg.task); });
    return run_to_budget(state, cfg, dir);
  } catch (const gen::MissingCredentials& e) {
    std::cerr << "evolve: " << e.what() << "\n";
    return kExitService;
  } catch (const std::exception& e) {
    return fail_input("evolve", e.what());
  }
}

int cmd_resume(const ExperimentConfig& cfg) {
  try {
    if (!cfg.has_task) return fail_input("resume", "config has no task section");
    if (credentials_missing(cfg)) {
      std::cerr << "resume: MissingCredentials: set " << gen::kApiKeyEnvVar
                << " to use the llm generator\n";
      return kExitService;
    }
    auto dir = ensure_output_dir(cfg);
    auto path = cfg.resume_checkpoint.empty()
                    ? (dir / "checkpoint.json").string()
                    : cfg.resume_checkpoint;
    auto state = evolve::load_checkpoint_file(path);
    if (state.signature != &cfg.task.signature())
      return fail_input("resume", "checkpoint domain does not match task");
    // The budget is the one knob resume takes from the config file; the rest
    // of the engine config must stay as recorded or determinism breaks.
    state.config.generations_budget = cfg.evolution.generations_budget;
    return run_to_budget(state, cfg, dir);
  } catch (const gen::MissingCredentials& e) {
    std::cerr << "resume: " << e.what() << "\n";
    return kExitService;
  } catch (const std::exception& e) {
    return fail_input("resume", e.what());
  }
}

int cmd_simulate(const ExperimentConfig& cfg) {
  try {
    if (!cfg.has_simulate)
      return fail_input("simulate", "config has no simulate section");
    const auto& sim = cfg.simulate;
    std::string csv = "scenario,num_servers,policy,scheduling_length\n";
    for (const auto& scenario : sim.scenarios) {
      for (const auto& name : sim.policy_names) {
        auto policy = name == "first_fit"  ? vmsched::Policy::first_fit()
                      : name == "best_fit" ? vmsched::Policy::best_fit()
                      : name == "worst_fit"
                          ? vmsched::Policy::worst_fit()
                          : vmsched::Policy::from_program(sim.genome);
        auto outcome =
            vmsched::simulate(policy, scenario.trace, sim.cluster, sim.options);
        csv += csv_field(scenario.name);
        csv += ',';
        csv += std::to_string(sim.cluster.num_servers);
        csv += ',';
        csv += name;
        csv += ',';
        csv += std::to_string(outcome.scheduling_length);
        csv += '\n';
      }
    }
    // Built in full before the single write so a failed scenario leaves no
    // partial file behind.
    auto dir = ensure_output_dir(cfg);
    write_file(dir / "simulate.csv", csv);
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input("simulate", e.what());
  }
}

int cmd_solve(const ExperimentConfig& cfg) {
  try {
    if (!cfg.has_solve) return fail_input("solve", "config has no solve section");
    const auto& sol = cfg.solve;
    std::string csv = "problem,strategy,iterations,converged,objective\n";
    for (const auto& inst : sol.instances) {
      for (const auto& strat : sol.strategies) {
        auto report = admm::solve(inst.problem, strat.strategy, sol.options);
        csv += csv_field(inst.name);
        csv += ',';
        csv += csv_field(strat.name);
        csv += ',';
        csv += std::to_string(report.iterations);
        csv += ',';
        csv += report.converged ? "true" : "false";
        csv += ',';
        csv += fmt_double(report.objective);
        csv += '\n';
      }
    }
    auto dir = ensure_output_dir(cfg);
    write_file(dir / "solve.csv", csv);
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input("solve", e.what());
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"evolving scheduling and penalty rules over a sandboxed DSL"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  const char* names[] = {"evolve", "simulate", "solve", "resume"};
  const char* blurbs[] = {"search for rules with the configured generator",
                          "replay traces under the listed placement policies",
                          "run penalty strategies over the listed problems",
                          "continue an interrupted evolve run"};
  for (int i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--seed", seed, "override evolution.master_seed");
    sub->add_option("--out", out_dir, "override output_dir");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  ExperimentConfig cfg;
  try {
    cfg = parse_experiment_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  auto* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) cfg.evolution.master_seed = seed;
  if (active->count("--out") > 0) cfg.output_dir = out_dir;

  auto name = active->get_name();
  if (name == "evolve") return cmd_evolve(cfg);
  if (name == "simulate") return cmd_simulate(cfg);
  if (name == "solve") return cmd_solve(cfg);
  return cmd_resume(cfg);
}

}  // namespace evoopt::harness
