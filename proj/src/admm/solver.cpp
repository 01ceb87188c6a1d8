#include "evoopt/admm/solver.hpp"

#include <algorithm>
#include <cmath>

namespace evoopt::admm {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], t);
  return out;
}

double update_beta(const PenaltyStrategy& strategy, double r_norm,
                   double s_norm, double beta, std::int64_t k,
                   const dsl::EvalLimits& limits) {
  double next = beta;
  switch (strategy.kind) {
    case PenaltyStrategy::Kind::Fixed:
      break;
    case PenaltyStrategy::Kind::ResidualBalancing:
      if (r_norm > strategy.mu * s_norm)
        next = strategy.eta * beta;
      else if (s_norm > strategy.mu * r_norm)
        next = beta / strategy.eta;
      break;
    case PenaltyStrategy::Kind::DslRule: {
      double vals[4] = {r_norm, s_norm, beta, static_cast<double>(k)};
      next = dsl::evaluate(strategy.program, vals, limits);
      break;
    }
  }
  return std::clamp(next, kBetaMin, kBetaMax);
}

namespace {

// z-update: prox of the regularizer at v with parameter 1/beta.
Eigen::VectorXd prox_step(const StructuredProblem& p, const Eigen::VectorXd& v,
                          double beta) {
  switch (p.kind) {
    case ProblemKind::Lasso:
      return soft_threshold(v, p.lambda1 / beta);
    case ProblemKind::ElasticNet:
      return soft_threshold(v, p.lambda1 / beta) / (1.0 + p.lambda2 / beta);
    case ProblemKind::GroupLasso: {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(v.size());
      for (const auto& g : p.groups) {
        double sq = 0.0;
        for (int idx : g) sq += v[idx] * v[idx];
        double norm = std::sqrt(sq);
        if (norm <= 0.0) continue;
        double scale = std::max(0.0, 1.0 - p.lambda1 / (beta * norm));
        for (int idx : g) z[idx] = scale * v[idx];
      }
      return z;
    }
  }
  return v;
}

}  // namespace

SolveReport solve(const StructuredProblem& problem,
                  const PenaltyStrategy& strategy,
                  const SolveOptions& options) {
  problem.validate();
  if (options.max_iter <= 0 || options.update_period <= 0 ||
      !(options.tol_abs > 0.0) || !(options.tol_rel >= 0.0) ||
      !(options.beta0 > 0.0))
    throw std::invalid_argument("solve: bad options");
  if (strategy.kind == PenaltyStrategy::Kind::ResidualBalancing &&
      (!(strategy.mu > 1.0) || !(strategy.eta > 1.0)))
    throw std::invalid_argument("solve: residual balancing needs mu, eta > 1");
  if (strategy.kind == PenaltyStrategy::Kind::DslRule &&
      (strategy.program.signature == nullptr ||
       strategy.program.signature->kind() != dsl::Signature::Kind::Penalty))
    throw std::invalid_argument("solve: rule program must use the penalty "
                                "signature");

  const Eigen::Index n = problem.M.cols();
  const Eigen::MatrixXd MtM = problem.M.transpose() * problem.M;
  const Eigen::VectorXd Mty = problem.M.transpose() * problem.y;
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  double beta = std::clamp(options.beta0, kBetaMin, kBetaMax);
  double factored_beta = beta;
  Eigen::LLT<Eigen::MatrixXd> llt(
      MtM + beta * Eigen::MatrixXd::Identity(n, n));
  if (llt.info() != Eigen::Success)
    throw NumericalError("x-update factorization failed");

  AdmmState st;
  st.x = Eigen::VectorXd::Zero(n);
  st.z = Eigen::VectorXd::Zero(n);
  st.w = Eigen::VectorXd::Zero(n);
  st.beta = beta;

  SolveReport report;
  report.beta_trace.reserve(64);

  for (std::int64_t k = 1; k <= options.max_iter; ++k) {
    if (st.beta != factored_beta) {
      llt.compute(MtM + st.beta * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() != Eigen::Success)
        throw NumericalError("x-update factorization failed");
      factored_beta = st.beta;
    }
    st.x = llt.solve(Mty + st.w + st.beta * st.z);
    Eigen::VectorXd z_prev = st.z;
    st.z = prox_step(problem, st.x - st.w / st.beta, st.beta);
    st.w -= st.beta * (st.x - st.z);

    st.iteration = k;
    st.r_norm = (st.x - st.z).norm();
    st.s_norm = st.beta * (st.z - z_prev).norm();
    report.beta_trace.push_back(st.beta);

    if (!st.x.allFinite() || !st.z.allFinite() || !st.w.allFinite() ||
        !std::isfinite(st.r_norm) || !std::isfinite(st.s_norm))
      throw NumericalError("non-finite iterate at iteration " +
                           std::to_string(k));

    double eps_pri = sqrt_n * options.tol_abs +
                     options.tol_rel * std::max(st.x.norm(), st.z.norm());
    double eps_dual = sqrt_n * options.tol_abs + options.tol_rel * st.w.norm();
    if (st.r_norm <= eps_pri && st.s_norm <= eps_dual) {
      report.converged = true;
      break;
    }

    if (k % options.update_period == 0)
      st.beta = update_beta(strategy, st.r_norm, st.s_norm, st.beta, k,
                            options.limits);
  }

  report.iterations = st.iteration;
  report.r_norm = st.r_norm;
  report.s_norm = st.s_norm;
  report.x = st.x;
  report.z = st.z;
  report.objective =
      0.5 * (problem.M * st.x - problem.y).squaredNorm() +
      regularizer(problem, st.z);
  if (!report.converged && options.require_convergence)
    throw NonConvergence("no convergence within " +
                         std::to_string(options.max_iter) + " iterations");
  return report;
}

}  // namespace evoopt::admm
