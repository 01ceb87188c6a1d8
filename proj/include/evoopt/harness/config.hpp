#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "evoopt/admm/problem.hpp"
#include "evoopt/admm/solver.hpp"
#include "evoopt/evolve/engine.hpp"
#include "evoopt/fitness/fitness.hpp"
#include "evoopt/generator/generator.hpp"
#include "evoopt/vmsched/sim.hpp"

namespace evoopt::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulateSpec {
  struct Scenario {
    std::string name;
    std::vector<vmsched::VmEvent> trace;
  };
  std::vector<Scenario> scenarios;
  vmsched::ClusterSpec cluster{3, 8, 16};
  vmsched::SimOptions options;
  std::vector<std::string> policy_names;  // first_fit best_fit worst_fit dsl
  dsl::Program genome;                    // bound when "dsl" is listed
};

struct SolveSpec {
  struct Instance {
    std::string name;
    admm::StructuredProblem problem;
  };
  struct Strategy {
    std::string name;  // fixed | residual_balancing | rule:<path>
    admm::PenaltyStrategy strategy;
  };
  std::vector<Instance> instances;
  std::vector<Strategy> strategies;
  admm::SolveOptions options;
};

// Everything a command needs, materialized from a flat key = value file
// ('#' comment lines, dotted section keys, ';'-separated program and path
// lists, ','-separated scalar lists). Referenced trace/problem/genome files
// are loaded here, so a missing file fails before any command output.
// Unknown keys are rejected.
struct ExperimentConfig {
  std::string output_dir = "out";
  std::string resume_checkpoint;  // empty: <output_dir>/checkpoint.json

  evolve::EvolutionConfig evolution;
  int checkpoint_interval = 10;
  std::vector<std::string> seed_sources;  // evolve seed programs

  std::string generator_kind = "mock";  // mock | llm
  gen::GeneratorEndpoint endpoint;

  bool has_task = false;
  fit::TaskDescriptor task;

  bool has_simulate = false;
  SimulateSpec simulate;

  bool has_solve = false;
  SolveSpec solve;
};

ExperimentConfig parse_experiment(const std::string& content);
ExperimentConfig parse_experiment_file(const std::string& path);

}  // namespace evoopt::harness
