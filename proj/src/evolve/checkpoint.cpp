#include "evoopt/evolve/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "evoopt/dsl/errors.hpp"
#include "evoopt/dsl/parser.hpp"
#include "json.hpp"

namespace evoopt::evolve {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::uint64_t v = 0;
  if (s.size() != 16)
    throw CorruptCheckpoint("malformed 64-bit hex field: " + s);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CorruptCheckpoint("malformed 64-bit hex field: " + s);
  return v;
}

json config_to_json(const EvolutionConfig& c) {
  return json{{"num_islands", c.num_islands},
              {"island_capacity", c.island_capacity},
              {"generations_budget", c.generations_budget},
              {"candidates_per_generation", c.candidates_per_generation},
              {"migration_interval", c.migration_interval},
              {"migration_k", c.migration_k},
              {"tournament_size", c.tournament_size},
              {"exploration_epsilon", c.exploration_epsilon},
              {"signature_bucket_width", c.signature_bucket_width},
              {"master_seed", hex64(c.master_seed)}};
}

EvolutionConfig config_from_json(const json& j) {
  EvolutionConfig c;
  c.num_islands = j.at("num_islands").get<int>();
  c.island_capacity = j.at("island_capacity").get<int>();
  c.generations_budget = j.at("generations_budget").get<std::int64_t>();
  c.candidates_per_generation = j.at("candidates_per_generation").get<int>();
  c.migration_interval = j.at("migration_interval").get<int>();
  c.migration_k = j.at("migration_k").get<int>();
  c.tournament_size = j.at("tournament_size").get<int>();
  c.exploration_epsilon = j.at("exploration_epsilon").get<double>();
  c.signature_bucket_width = j.at("signature_bucket_width").get<double>();
  c.master_seed = parse_hex64(j.at("master_seed").get<std::string>());
  return c;
}

}  // namespace

std::string checkpoint(const EngineState& state) {
  json j;
  j["version"] = 1;
  j["task_description"] = state.task_description;
  j["signature"] = state.signature->name();
  j["config"] = config_to_json(state.config);
  j["generation"] = state.generation;

  j["islands"] = json::array();
  for (const auto& island : state.islands) {
    json members = json::array();
    for (const auto& m : island.members)
      members.push_back({{"source", m.genome.canonical_text},
                         {"fitness", m.fitness},
                         {"signature", m.signature},
                         {"born", m.generation_born}});
    j["islands"].push_back({{"id", island.id},
                            {"rng_state", hex64(island.rng.state())},
                            {"members", std::move(members)}});
  }

  j["archive"] = json::array();
  for (const auto& [hash, entry] : state.archive)
    j["archive"].push_back({{"hash", hex64(hash)},
                            {"source", entry.source},
                            {"fitness", entry.fitness},
                            {"first_seen", entry.first_seen}});

  j["curve"] = json::array();
  for (const auto& point : state.curve)
    j["curve"].push_back({{"generation", point.generation},
                          {"best_fitness", point.best_fitness},
                          {"mean_fitness", point.mean_fitness}});

  std::string content = j.dump(2);
  content.push_back('\n');
  return content + hex64(fnv1a64(content)) + "\n";
}

EngineState restore(const std::string& bytes) {
  std::string trimmed = bytes;
  if (!trimmed.empty() && trimmed.back() == '\n') trimmed.pop_back();
  auto cut = trimmed.rfind('\n');
  if (cut == std::string::npos)
    throw CorruptCheckpoint("checkpoint is missing its digest line");
  std::string digest_hex = trimmed.substr(cut + 1);
  std::string content = trimmed.substr(0, cut + 1);
  if (parse_hex64(digest_hex) != fnv1a64(content))
    throw CorruptCheckpoint("checkpoint digest mismatch");

  json j;
  try {
    j = json::parse(content);
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("unparseable checkpoint: ") +
                            e.what());
  }

  EngineState state;
  try {
    auto version = j.at("version").get<int>();
    if (version != 1)
      throw CorruptCheckpoint("unsupported checkpoint version " +
                              std::to_string(version));
    state.task_description = j.at("task_description").get<std::string>();
    const auto& sig =
        dsl::Signature::by_name(j.at("signature").get<std::string>());
    state.signature = &sig;
    state.config = config_from_json(j.at("config"));
    state.generation = j.at("generation").get<std::int64_t>();

    for (const auto& ji : j.at("islands")) {
      Island island;
      island.id = ji.at("id").get<int>();
      island.rng.set_state(parse_hex64(ji.at("rng_state").get<std::string>()));
      for (const auto& jm : ji.at("members")) {
        Individual ind;
        auto source = jm.at("source").get<std::string>();
        ind.genome = dsl::typecheck(dsl::parse(source), sig);
        if (ind.genome.canonical_text != source)
          throw CorruptCheckpoint("non-canonical genome in checkpoint: " +
                                  source);
        ind.fitness = jm.at("fitness").get<double>();
        ind.signature = jm.at("signature").get<std::vector<double>>();
        ind.generation_born = jm.at("born").get<std::int64_t>();
        island.members.push_back(std::move(ind));
      }
      std::sort(island.members.begin(), island.members.end(), better);
      state.islands.push_back(std::move(island));
    }

    for (const auto& ja : j.at("archive")) {
      auto hash = parse_hex64(ja.at("hash").get<std::string>());
      ArchiveEntry entry{ja.at("source").get<std::string>(),
                         ja.at("fitness").get<double>(),
                         ja.at("first_seen").get<std::int64_t>()};
      if (fnv1a64(entry.source) != hash)
        throw CorruptCheckpoint("archive hash mismatch for: " + entry.source);
      state.archive.emplace(hash, std::move(entry));
    }

    for (const auto& jc : j.at("curve"))
      state.curve.push_back({jc.at("generation").get<std::int64_t>(),
                             jc.at("best_fitness").get<double>(),
                             jc.at("mean_fitness").get<double>()});
    validate(state.config);
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint field: ") +
                            e.what());
  } catch (const dsl::DslError& e) {
    throw CorruptCheckpoint(std::string("invalid genome in checkpoint: ") +
                            e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
  return state;
}

void save_checkpoint_file(const std::string& path, const EngineState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << checkpoint(state);
}

EngineState load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("cannot read checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return restore(buf.str());
}

}  // namespace evoopt::evolve
