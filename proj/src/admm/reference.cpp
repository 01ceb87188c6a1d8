#include "evoopt/admm/reference.hpp"

#include <cmath>

namespace evoopt::admm {
namespace {

// Prox arithmetic restated locally; this file must not lean on the solver.
double shrink(double v, double t) {
  double a = std::abs(v) - t;
  return a > 0.0 ? (v > 0.0 ? a : -a) : 0.0;
}

Eigen::VectorXd prox(const StructuredProblem& p, const Eigen::VectorXd& v,
                     double t) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  switch (p.kind) {
    case ProblemKind::Lasso:
      for (Eigen::Index i = 0; i < v.size(); ++i)
        out[i] = shrink(v[i], t * p.lambda1);
      break;
    case ProblemKind::ElasticNet:
      for (Eigen::Index i = 0; i < v.size(); ++i)
        out[i] = shrink(v[i], t * p.lambda1) / (1.0 + t * p.lambda2);
      break;
    case ProblemKind::GroupLasso:
      for (const auto& g : p.groups) {
        double sq = 0.0;
        for (int idx : g) sq += v[idx] * v[idx];
        double norm = std::sqrt(sq);
        if (norm <= t * p.lambda1) continue;
        double scale = 1.0 - t * p.lambda1 / norm;
        for (int idx : g) out[idx] = scale * v[idx];
      }
      break;
  }
  return out;
}

}  // namespace

ReferenceReport solve_reference(const StructuredProblem& problem, double tol,
                                std::int64_t max_iter) {
  problem.validate();
  const Eigen::Index n = problem.M.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double t = 1.0;
  ReferenceReport report;

  Eigen::VectorXd residual = problem.M * x - problem.y;
  double fx = 0.5 * residual.squaredNorm();
  for (std::int64_t k = 1; k <= max_iter; ++k) {
    Eigen::VectorXd grad = problem.M.transpose() * residual;
    // backtracking on the smooth part's quadratic model
    Eigen::VectorXd cand;
    double f_cand;
    for (;;) {
      cand = prox(problem, x - t * grad, t);
      Eigen::VectorXd diff = cand - x;
      f_cand = 0.5 * (problem.M * cand - problem.y).squaredNorm();
      double model = fx + grad.dot(diff) + diff.squaredNorm() / (2.0 * t);
      if (f_cand <= model + 1e-15 * std::abs(model)) break;
      t *= 0.5;
      if (t < 1e-18) break;  // fully degenerate; accept and let tol decide
    }
    double step_norm = (x - cand).norm() / t;
    x = cand;
    residual = problem.M * x - problem.y;
    fx = f_cand;
    report.iterations = k;
    if (step_norm <= tol * std::max(1.0, x.norm())) {
      report.converged = true;
      break;
    }
    t *= 1.25;  // optimistic growth, re-shrunk by the next backtrack
  }
  report.x = x;
  report.objective = fx + regularizer(problem, x);
  return report;
}

}  // namespace evoopt::admm
