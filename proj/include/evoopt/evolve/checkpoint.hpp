#pragma once

#include <stdexcept>
#include <string>

#include "evoopt/evolve/engine.hpp"

namespace evoopt::evolve {

struct CorruptCheckpoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON document carrying the complete engine state (config, islands with rng
// states, archive, fitness curve), terminated by a line holding the FNV-1a64
// digest of everything before it. Identical states serialize to identical
// bytes.
std::string checkpoint(const EngineState& state);

// Inverse of checkpoint. Verifies the digest and the schema version, then
// re-typechecks every stored source. Throws CorruptCheckpoint.
EngineState restore(const std::string& bytes);

void save_checkpoint_file(const std::string& path, const EngineState& state);
EngineState load_checkpoint_file(const std::string& path);

}  // namespace evoopt::evolve
