#include "evoopt/evolve/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evoopt/dsl/errors.hpp"
#include "evoopt/dsl/parser.hpp"

namespace evoopt::evolve {
namespace {

using ClusterMap = std::map<std::vector<std::int64_t>, std::vector<std::size_t>>;

ClusterMap cluster_members(const std::vector<Individual>& members,
                           double width) {
  ClusterMap clusters;
  for (std::size_t i = 0; i < members.size(); ++i)
    clusters[cluster_key(members[i].signature, width)].push_back(i);
  return clusters;
}

void insert_sorted(std::vector<Individual>& members, Individual ind) {
  auto at = std::lower_bound(members.begin(), members.end(), ind, better);
  members.insert(at, std::move(ind));
}

// Capacity pruning with diversity preservation: each cluster's best member
// (the lowest index, since members are sorted) is kept ahead of everything
// else; leftover slots go to the best of the rest. The global best is some
// cluster's best, so elites survive.
void prune(Island& island, const EvolutionConfig& config) {
  auto capacity = static_cast<std::size_t>(config.island_capacity);
  if (island.members.size() <= capacity) return;

  auto clusters =
      cluster_members(island.members, config.signature_bucket_width);
  std::vector<bool> keep(island.members.size(), false);
  std::vector<std::size_t> bests;
  for (const auto& [key, idxs] : clusters) bests.push_back(idxs.front());
  std::sort(bests.begin(), bests.end());

  std::size_t kept = 0;
  for (std::size_t i : bests) {
    if (kept == capacity) break;
    keep[i] = true;
    ++kept;
  }
  for (std::size_t i = 0; i < island.members.size() && kept < capacity; ++i) {
    if (keep[i]) continue;
    keep[i] = true;
    ++kept;
  }

  std::vector<Individual> pruned;
  pruned.reserve(capacity);
  for (std::size_t i = 0; i < island.members.size(); ++i)
    if (keep[i]) pruned.push_back(std::move(island.members[i]));
  island.members = std::move(pruned);
}

bool holds_hash(const Island& island, std::uint64_t hash) {
  for (const auto& m : island.members)
    if (m.genome.canonical_hash == hash) return true;
  return false;
}

void append_curve_point(EngineState& state) {
  double best = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& island : state.islands) {
    for (const auto& m : island.members) {
      best = std::max(best, m.fitness);
      sum += m.fitness;
      ++count;
    }
  }
  state.curve.push_back(
      {state.generation, best, count ? sum / static_cast<double>(count) : 0.0});
}

}  // namespace

bool better(const Individual& a, const Individual& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  if (a.generation_born != b.generation_born)
    return a.generation_born < b.generation_born;
  return a.genome.canonical_hash < b.genome.canonical_hash;
}

void validate(const EvolutionConfig& config) {
  if (config.num_islands < 1)
    throw std::invalid_argument("num_islands must be at least 1");
  if (config.island_capacity < 1 || config.candidates_per_generation < 1 ||
      config.migration_interval < 1 || config.migration_k < 1 ||
      config.tournament_size < 1 || config.generations_budget < 1)
    throw std::invalid_argument("evolution counts must be positive");
  if (config.migration_k >= config.island_capacity)
    throw std::invalid_argument("migration_k must be below island_capacity");
  if (!(config.exploration_epsilon >= 0.0) ||
      !(config.exploration_epsilon <= 1.0))
    throw std::invalid_argument("exploration_epsilon must lie in [0, 1]");
  if (!(config.signature_bucket_width > 0.0))
    throw std::invalid_argument("signature_bucket_width must be positive");
}

std::vector<std::int64_t> cluster_key(const std::vector<double>& signature,
                                      double bucket_width) {
  std::vector<std::int64_t> key;
  key.reserve(signature.size());
  for (double s : signature)
    key.push_back(static_cast<std::int64_t>(std::floor(s / bucket_width)));
  return key;
}

EngineState initialize(const EvolutionConfig& config,
                       std::string task_description,
                       const dsl::Signature& signature,
                       const std::vector<dsl::Program>& seeds,
                       const Evaluator& evaluate) {
  validate(config);
  if (seeds.empty()) throw std::invalid_argument("no seed programs");
  for (const auto& seed : seeds)
    if (seed.signature != &signature)
      throw std::invalid_argument("seed program for a different signature");

  EngineState state;
  state.config = config;
  state.task_description = std::move(task_description);
  state.signature = &signature;

  std::vector<Individual> founders;
  for (const auto& seed : seeds) {
    if (state.archive.count(seed.canonical_hash)) continue;
    auto result = evaluate(seed);
    state.archive.emplace(
        seed.canonical_hash,
        ArchiveEntry{seed.canonical_text, result.fitness, 0});
    founders.push_back({seed, result.fitness, result.signature, 0});
  }

  state.islands.resize(static_cast<std::size_t>(config.num_islands));
  for (int i = 0; i < config.num_islands; ++i) {
    auto& island = state.islands[static_cast<std::size_t>(i)];
    island.id = i;
    island.rng = Rng(derive_seed(config.master_seed,
                                 static_cast<std::uint64_t>(i)));
    for (const auto& f : founders) insert_sorted(island.members, f);
    prune(island, config);
  }
  return state;
}

std::vector<Individual> select_parents(Island& island,
                                       const EvolutionConfig& config) {
  if (island.members.empty())
    throw std::invalid_argument("selection from an empty island");
  std::size_t k_best = std::min<std::size_t>(3, island.members.size());
  std::vector<Individual> out(island.members.begin(),
                              island.members.begin() +
                                  static_cast<std::ptrdiff_t>(k_best));

  auto clusters =
      cluster_members(island.members, config.signature_bucket_width);
  for (std::size_t slot = 0; slot < k_best; ++slot) {
    // The draw happens even at epsilon 0 so the stream position does not
    // depend on the parameter.
    double u = island.rng.uniform01();
    if (u >= config.exploration_epsilon) continue;
    auto it = clusters.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(
                         island.rng.below(clusters.size())));
    const auto& idxs = it->second;
    out.push_back(island.members[idxs[island.rng.below(idxs.size())]]);
  }
  return out;
}

void step_generation(EngineState& state, const Generator& generate,
                     const Evaluator& evaluate) {
  ++state.generation;
  for (auto& island : state.islands) {
    auto parents = select_parents(island, state.config);
    std::sort(parents.begin(), parents.end(),
              [](const Individual& a, const Individual& b) {
                return better(b, a);  // worst first, best last
              });

    gen::GenerationRequest req;
    req.task_description = state.task_description;
    req.signature = state.signature;
    for (const auto& p : parents)
      req.exemplars.push_back({p.genome.canonical_text, p.fitness});
    req.num_candidates = state.config.candidates_per_generation;
    req.seed = island.rng.next();

    std::vector<std::string> candidates;
    try {
      candidates = generate(req);
    } catch (const gen::GenerationError&) {
      continue;  // this island sits the generation out
    }

    for (const auto& text : candidates) {
      dsl::Program prog;
      try {
        prog = dsl::typecheck(dsl::parse(text), *state.signature);
      } catch (const dsl::DslError&) {
        continue;
      }
      if (state.archive.count(prog.canonical_hash)) continue;
      auto result = evaluate(prog);
      state.archive.emplace(
          prog.canonical_hash,
          ArchiveEntry{prog.canonical_text, result.fitness,
                       state.generation});
      insert_sorted(island.members, {std::move(prog), result.fitness,
                                     result.signature, state.generation});
    }
    prune(island, state.config);
  }
  append_curve_point(state);
}

void migrate(EngineState& state) {
  auto n = state.islands.size();
  if (n < 2) return;

  std::vector<std::vector<Individual>> tops(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto k = std::min<std::size_t>(
        static_cast<std::size_t>(state.config.migration_k),
        state.islands[i].members.size());
    tops[i].assign(state.islands[i].members.begin(),
                   state.islands[i].members.begin() +
                       static_cast<std::ptrdiff_t>(k));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& island = state.islands[i];
    for (const auto& migrant : tops[(i + n - 1) % n]) {
      if (holds_hash(island, migrant.genome.canonical_hash)) continue;
      insert_sorted(island.members, migrant);
    }
    prune(island, state.config);
  }
}

void run(EngineState& state, const Generator& generate,
         const Evaluator& evaluate, std::int64_t n_generations) {
  for (std::int64_t i = 0; i < n_generations; ++i) {
    step_generation(state, generate, evaluate);
    if (state.config.num_islands > 1 &&
        state.generation % state.config.migration_interval == 0)
      migrate(state);
  }
}

const Individual* best_individual(const EngineState& state) {
  const Individual* best = nullptr;
  for (const auto& island : state.islands)
    for (const auto& m : island.members)
      if (best == nullptr || better(m, *best)) best = &m;
  return best;
}

}  // namespace evoopt::evolve
