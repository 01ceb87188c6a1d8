#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoopt/common/rng.hpp"
#include "evoopt/dsl/program.hpp"
#include "evoopt/fitness/fitness.hpp"
#include "evoopt/generator/generator.hpp"

namespace evoopt::evolve {

struct Individual {
  dsl::Program genome;
  double fitness = 0.0;
  std::vector<double> signature;  // probe scores
  std::int64_t generation_born = 0;
};

// Island member order and every fitness tie in the engine: higher fitness,
// then older, then smaller canonical hash. Total given distinct hashes, which
// the dedup guarantees.
bool better(const Individual& a, const Individual& b);

struct Island {
  int id = 0;
  std::vector<Individual> members;  // kept sorted by better()
  Rng rng{0};
};

struct ArchiveEntry {
  std::string source;
  double fitness = 0.0;
  std::int64_t first_seen = 0;
};

struct EvolutionConfig {
  int num_islands = 4;
  int island_capacity = 20;
  std::int64_t generations_budget = 30;
  int candidates_per_generation = 4;  // per island
  int migration_interval = 10;        // generations
  int migration_k = 2;
  int tournament_size = 2;  // reserved selection knob, unused by the current
                            // top-k + epsilon scheme
  double exploration_epsilon = 0.1;
  double signature_bucket_width = 1.0;
  std::uint64_t master_seed = 0;
};

void validate(const EvolutionConfig& config);

struct CurvePoint {
  std::int64_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;  // over all current island members
};

struct EngineState {
  EvolutionConfig config;
  std::string task_description;
  const dsl::Signature* signature = nullptr;
  std::int64_t generation = 0;
  std::vector<Island> islands;
  std::map<std::uint64_t, ArchiveEntry> archive;  // by canonical hash
  std::vector<CurvePoint> curve;
};

// Pure scoring function; faults are expected to come back as the sentinel
// result, not as exceptions (see the fitness module).
using Evaluator = std::function<fit::FitnessResult(const dsl::Program&)>;
// Candidate source: gen::mock_generate, a bound llm_generate, or a test
// double. May throw gen::GenerationError; the island skips the generation.
using Generator = std::function<std::vector<std::string>(
    const gen::GenerationRequest&)>;

// Componentwise floor(signature_i / bucket_width).
std::vector<std::int64_t> cluster_key(const std::vector<double>& signature,
                                      double bucket_width);

// Seeds are deduplicated by canonical hash, evaluated once each, and copied
// into every island (born at generation 0). Island i's rng is seeded with
// derive_seed(master_seed, i).
EngineState initialize(const EvolutionConfig& config,
                       std::string task_description,
                       const dsl::Signature& signature,
                       const std::vector<dsl::Program>& seeds,
                       const Evaluator& evaluate);

// Top min(3, n) members, plus per slot one epsilon-chance pick of a uniform
// member of a uniform signature cluster. Consumes island rng draws; the
// sequence is part of the reproducibility contract.
std::vector<Individual> select_parents(Island& island,
                                       const EvolutionConfig& config);

// One generation over every island in ascending id order: request candidates
// from the exemplars, drop what fails to parse or is already in the archive,
// evaluate the rest, insert, and prune back to capacity keeping each
// signature cluster's best before filling by fitness. Appends a curve point.
void step_generation(EngineState& state, const Generator& generate,
                     const Evaluator& evaluate);

// Ring migration: island i receives copies of the pre-migration top-k of
// island (i - 1) mod n, skipping members it already holds, then prunes.
void migrate(EngineState& state);

// step_generation n times, migrating after every migration_interval-th
// generation.
void run(EngineState& state, const Generator& generate,
         const Evaluator& evaluate, std::int64_t n_generations);

const Individual* best_individual(const EngineState& state);  // null if empty

}  // namespace evoopt::evolve
