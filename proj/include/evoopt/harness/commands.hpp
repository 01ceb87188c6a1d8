#pragma once

#include "evoopt/harness/config.hpp"

namespace evoopt::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;  // config or input-file problems
inline constexpr int kExitService = 3;   // unrecoverable generator endpoint

// Each command writes its outputs under config.output_dir and nowhere else,
// reporting failures on stderr through the exit code. All of them are pure
// functions of (config, environment) so tests drive them in-process.

// evolve: initialize from evolution.seeds, run the generation loop with
// periodic migration and checkpointing, then write best_genome.txt,
// curve.csv, archive.csv, and a final checkpoint.json.
int cmd_evolve(const ExperimentConfig& config);

// resume: reload the checkpoint (resume.checkpoint, or
// <output_dir>/checkpoint.json), adopt the config file's generations_budget,
// and continue to the same outputs as an uninterrupted run.
int cmd_resume(const ExperimentConfig& config);

// simulate: every policy on every scenario, scenario-major, into
// simulate.csv (scenario, num_servers, policy, scheduling_length).
int cmd_simulate(const ExperimentConfig& config);

// solve: every strategy on every problem, problem-major, into solve.csv
// (problem, strategy, iterations, converged, objective).
int cmd_solve(const ExperimentConfig& config);

// evoopt evolve|simulate|solve|resume --config <path> [--seed N] [--out DIR]
int run_cli(int argc, char** argv);

}  // namespace evoopt::harness
