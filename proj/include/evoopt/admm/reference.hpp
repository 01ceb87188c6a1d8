#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "evoopt/admm/problem.hpp"

namespace evoopt::admm {

struct ReferenceReport {
  bool converged = false;
  std::int64_t iterations = 0;
  double objective = 0.0;
  Eigen::VectorXd x;
};

// Proximal-gradient (ISTA) with backtracking line search on the same
// composite objective. Kept deliberately independent of solve(): different
// algorithm, separate prox arithmetic. Used as the accuracy oracle.
ReferenceReport solve_reference(const StructuredProblem& problem,
                                double tol = 1e-10,
                                std::int64_t max_iter = 200000);

}  // namespace evoopt::admm
