#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evoopt/admm/problem.hpp"
#include "evoopt/dsl/eval.hpp"
#include "evoopt/dsl/program.hpp"

namespace evoopt::admm {

inline constexpr double kBetaMin = 1e-6;
inline constexpr double kBetaMax = 1e6;

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// How the penalty weight evolves between iterations.
struct PenaltyStrategy {
  enum class Kind { Fixed, ResidualBalancing, DslRule };
  Kind kind = Kind::Fixed;
  double mu = 10.0;  // ResidualBalancing: dominance ratio (> 1)
  double eta = 2.0;  // ResidualBalancing: scale step (> 1)
  dsl::Program program;  // DslRule; PENALTY signature, bound as
                         // {p = r_norm, d = s_norm, beta, k}

  static PenaltyStrategy fixed() { return {}; }
  static PenaltyStrategy residual_balancing(double mu = 10.0, double eta = 2.0) {
    PenaltyStrategy s;
    s.kind = Kind::ResidualBalancing;
    s.mu = mu;
    s.eta = eta;
    return s;
  }
  static PenaltyStrategy rule(dsl::Program p) {
    PenaltyStrategy s;
    s.kind = Kind::DslRule;
    s.program = std::move(p);
    return s;
  }
};

struct SolveOptions {
  double beta0 = 1.0;
  double tol_abs = 1e-8;
  double tol_rel = 1e-6;
  std::int64_t max_iter = 10000;
  std::int64_t update_period = 1;  // apply the strategy every this many iters
  dsl::EvalLimits limits;          // DslRule evaluation budget
  bool require_convergence = false;  // throw NonConvergence at max_iter
};

// Loop state for the x/z split with the x - z = 0 coupling.
struct AdmmState {
  Eigen::VectorXd x, z, w;  // w is the (unscaled) multiplier estimate
  double beta = 1.0;
  std::int64_t iteration = 0;
  double r_norm = 0.0;  // ||x - z||_2, constraint residual
  double s_norm = 0.0;  // beta * ||z - z_prev||_2, dual residual
};

struct SolveReport {
  bool converged = false;
  std::int64_t iterations = 0;
  double objective = 0.0;
  double r_norm = 0.0;
  double s_norm = 0.0;
  Eigen::VectorXd x, z;
  std::vector<double> beta_trace;  // beta used at each iteration
};

double soft_threshold(double v, double t);
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t);

// One strategy step on the residuals observed at iteration k; the result is
// clamped to [kBetaMin, kBetaMax]. DslRule evaluates the bound program and
// lets its evaluation faults propagate.
double update_beta(const PenaltyStrategy& strategy, double r_norm,
                   double s_norm, double beta, std::int64_t k,
                   const dsl::EvalLimits& limits = {});

// Splitting solver: x-update solves (M^T M + beta I) x = M^T y + w + beta z
// (refactored whenever beta changes), z-update is the regularizer's prox at
// (x - w / beta) with parameter 1 / beta, then w <- w - beta (x - z).
// Stops when both residuals pass the mixed absolute/relative test. Throws
// NumericalError on non-finite iterates.
SolveReport solve(const StructuredProblem& problem,
                  const PenaltyStrategy& strategy, const SolveOptions& options);

}  // namespace evoopt::admm
