#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "evoopt/dsl/program.hpp"

namespace evoopt::dsl {

struct EvalLimits {
  std::int64_t step_budget = 10000;  // one step per node visit
  double clamp_abs = 1e12;           // every intermediate is clamped to +/- this
};

inline constexpr double kDivEpsilon = 1e-9;   // |denominator| floor
inline constexpr double kLogEpsilon = 1e-9;   // safe_log(x) = log(|x| + eps)
inline constexpr double kExpArgCap = 700.0;   // safe_exp caps its argument

// values[i] binds signature.variables()[i]; all values must be finite.
// Deterministic, never returns NaN or an infinity. Throws StepBudgetExceeded
// when the budget runs out mid-walk.
double evaluate(const Program& prog, std::span<const double> values,
                const EvalLimits& limits = {});

// Convenience overload; the map must cover the signature exactly
// (BindingError otherwise).
double evaluate(const Program& prog,
                const std::map<std::string, double>& bindings,
                const EvalLimits& limits = {});

}  // namespace evoopt::dsl
