#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "evoopt/admm/problem.hpp"
#include "evoopt/admm/reference.hpp"
#include "evoopt/admm/solver.hpp"
#include "evoopt/dsl/parser.hpp"

using namespace evoopt::admm;
namespace dsl = evoopt::dsl;

namespace {

// Balancing rule written in the solver's residual naming: p is the constraint
// residual, d the dual one, so beta inflates when p dominates.
const char* kBalanceRuleText =
    "if p > 10.0 * d then beta * 2.0 else if d > 10.0 * p then beta / 2.0 "
    "else beta";

dsl::Program penalty_rule(const std::string& text) {
  return dsl::typecheck(dsl::parse(text), dsl::Signature::penalty());
}

StructuredProblem identity_lasso() {
  StructuredProblem p;
  p.kind = ProblemKind::Lasso;
  p.M = Eigen::MatrixXd::Identity(3, 3);
  p.y = Eigen::Vector3d(3.0, 0.5, -2.0);
  p.lambda1 = 1.0;
  return p;
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-2.0, 1.0) == -1.0);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);
  Eigen::VectorXd v(3);
  v << 3.0, 0.5, -2.0;
  Eigen::VectorXd s = soft_threshold(v, 1.0);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == -1.0);
}

TEST_CASE("update_beta: residual balancing branches and clamp") {
  auto rb = PenaltyStrategy::residual_balancing(10.0, 2.0);
  CHECK(update_beta(rb, 5.0, 0.1, 1.0, 1) == 2.0);
  CHECK(update_beta(rb, 0.1, 5.0, 1.0, 1) == 0.5);
  CHECK(update_beta(rb, 1.0, 1.0, 1.0, 1) == 1.0);
  CHECK(update_beta(PenaltyStrategy::fixed(), 5.0, 0.1, 1.0, 1) == 1.0);
  // clamped on both sides
  CHECK(update_beta(rb, 5.0, 0.0, 8e5, 1) == kBetaMax);
  CHECK(update_beta(rb, 0.0, 5.0, 1.5e-6, 1) == kBetaMin);
  auto blow_up = PenaltyStrategy::rule(penalty_rule("beta * 1000000.0"));
  CHECK(update_beta(blow_up, 1.0, 1.0, 1.0, 1) == kBetaMax);
  auto negative = PenaltyStrategy::rule(penalty_rule("0.0 - beta"));
  CHECK(update_beta(negative, 1.0, 1.0, 1.0, 1) == kBetaMin);
  // the iteration count is visible to rules
  auto by_k = PenaltyStrategy::rule(penalty_rule("k"));
  CHECK(update_beta(by_k, 1.0, 1.0, 1.0, 7) == 7.0);
}

TEST_CASE("identity lasso reaches the closed-form solution") {
  SolveOptions opt;
  opt.beta0 = 1.0;
  opt.tol_abs = 1e-10;
  opt.tol_rel = 1e-8;
  opt.max_iter = 200;
  auto report = solve(identity_lasso(), PenaltyStrategy::fixed(), opt);
  REQUIRE(report.converged);
  CHECK(report.iterations <= 200);
  CHECK(std::abs(report.z[0] - 2.0) < 1e-6);
  CHECK(std::abs(report.z[1] - 0.0) < 1e-6);
  CHECK(std::abs(report.z[2] - (-1.0)) < 1e-6);
  CHECK(report.beta_trace.size() == static_cast<std::size_t>(report.iterations));
  for (double b : report.beta_trace) CHECK(b == 1.0);
}

TEST_CASE("identity elastic net matches its closed form") {
  StructuredProblem p = identity_lasso();
  p.kind = ProblemKind::ElasticNet;
  p.lambda2 = 0.5;
  SolveOptions opt;
  opt.tol_abs = 1e-12;
  opt.tol_rel = 1e-10;
  opt.max_iter = 2000;
  auto report = solve(p, PenaltyStrategy::fixed(), opt);
  REQUIRE(report.converged);
  // x* = S_1(y) / (1 + lambda2)
  CHECK(std::abs(report.z[0] - 2.0 / 1.5) < 1e-7);
  CHECK(std::abs(report.z[1] - 0.0) < 1e-7);
  CHECK(std::abs(report.z[2] + 1.0 / 1.5) < 1e-7);
}

TEST_CASE("benign instances converge for fixed betas and match the oracle") {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    for (auto kind : {ProblemKind::Lasso, ProblemKind::ElasticNet}) {
      RandomProblemSpec spec;
      spec.kind = kind;
      spec.seed = seed;
      spec.m = 30;
      spec.n = 50;
      auto problem = random_problem(spec);
      auto oracle = solve_reference(problem, 1e-11);
      REQUIRE(oracle.converged);
      for (double beta0 : {0.1, 1.0, 10.0}) {
        SolveOptions opt;
        opt.beta0 = beta0;
        opt.tol_abs = 1e-11;
        opt.tol_rel = 1e-11;
        opt.max_iter = 10000;
        auto report = solve(problem, PenaltyStrategy::fixed(), opt);
        REQUIRE(report.converged);
        REQUIRE(rel_diff(report.objective, oracle.objective) < 1e-6);
      }
    }
  }
}

TEST_CASE("lasso solutions satisfy the subgradient conditions") {
  for (std::uint64_t seed : {21ull, 22ull, 23ull, 24ull}) {
    RandomProblemSpec spec;
    spec.seed = seed;
    spec.m = 25;
    spec.n = 40;
    auto problem = random_problem(spec);
    SolveOptions opt;
    opt.tol_abs = 1e-12;
    opt.tol_rel = 1e-12;
    opt.max_iter = 50000;
    auto report = solve(problem, PenaltyStrategy::residual_balancing(), opt);
    REQUIRE(report.converged);
    Eigen::VectorXd grad =
        problem.M.transpose() * (problem.M * report.z - problem.y);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      if (report.z[i] == 0.0) {
        CHECK(std::abs(grad[i]) <= problem.lambda1 + 1e-4);
      } else {
        CHECK(std::abs(grad[i] + problem.lambda1 * (report.z[i] > 0 ? 1.0 : -1.0)) <=
              1e-4);
      }
    }
  }
}

TEST_CASE("rule encoding of the balancing strategy replays it exactly") {
  auto rule = PenaltyStrategy::rule(penalty_rule(kBalanceRuleText));
  auto rb = PenaltyStrategy::residual_balancing(10.0, 2.0);
  for (std::uint64_t seed : {31ull, 32ull, 33ull}) {
    RandomProblemSpec spec;
    spec.seed = seed;
    spec.m = 20;
    spec.n = 30;
    spec.condition = 100.0;
    auto problem = random_problem(spec);
    SolveOptions opt;
    opt.beta0 = 500.0;  // deliberately off so the strategy has work to do
    opt.max_iter = 20000;
    auto a = solve(problem, rb, opt);
    auto b = solve(problem, rule, opt);
    REQUIRE(a.iterations == b.iterations);
    REQUIRE(a.converged == b.converged);
    REQUIRE(a.beta_trace == b.beta_trace);
    REQUIRE(a.objective == b.objective);
    CHECK(a.beta_trace.front() == 500.0);
    bool adapted = false;
    for (double bt : a.beta_trace) adapted |= (bt != 500.0);
    CHECK(adapted);
  }
}

TEST_CASE("adversarial rules cannot push beta outside its bounds") {
  for (const char* text : {"beta * 1000000.0", "0.0 - 1000000.0",
                           "safe_exp(k)", "1.0 / (p - p)"}) {
    auto strategy = PenaltyStrategy::rule(penalty_rule(text));
    SolveOptions opt;
    opt.max_iter = 60;
    auto report = solve(identity_lasso(), strategy, opt);
    for (double b : report.beta_trace) {
      CHECK(b >= kBetaMin);
      CHECK(b <= kBetaMax);
    }
  }
}

TEST_CASE("update period throttles strategy applications") {
  RandomProblemSpec spec;
  spec.seed = 41;
  spec.m = 20;
  spec.n = 30;
  spec.condition = 50.0;
  auto problem = random_problem(spec);
  SolveOptions opt;
  opt.beta0 = 300.0;
  opt.update_period = 5;
  opt.max_iter = 5000;
  auto report = solve(problem, PenaltyStrategy::residual_balancing(), opt);
  for (std::size_t i = 1; i < report.beta_trace.size(); ++i) {
    if (report.beta_trace[i] != report.beta_trace[i - 1])
      CHECK(i % 5 == 0);  // 0-based position i == iteration i, a period edge
  }
}

TEST_CASE("group lasso agrees with the oracle and validates groups") {
  RandomProblemSpec spec;
  spec.kind = ProblemKind::GroupLasso;
  spec.seed = 51;
  spec.m = 30;
  spec.n = 24;
  spec.num_groups = 6;
  auto problem = random_problem(spec);
  auto oracle = solve_reference(problem, 1e-11);
  REQUIRE(oracle.converged);
  SolveOptions opt;
  opt.tol_abs = 1e-11;
  opt.tol_rel = 1e-11;
  opt.max_iter = 20000;
  auto report = solve(problem, PenaltyStrategy::fixed(), opt);
  REQUIRE(report.converged);
  CHECK(rel_diff(report.objective, oracle.objective) < 1e-6);

  auto bad = problem;
  bad.groups.back().push_back(0);  // overlap
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  auto missing = problem;
  missing.groups.pop_back();
  CHECK_THROWS_AS(missing.validate(), std::invalid_argument);
}

TEST_CASE("problem files round trip") {
  RandomProblemSpec spec;
  spec.kind = ProblemKind::GroupLasso;
  spec.seed = 61;
  spec.m = 6;
  spec.n = 8;
  spec.num_groups = 4;
  auto problem = random_problem(spec);
  auto again = problem_from_json(problem_to_json(problem));
  CHECK(again.kind == problem.kind);
  CHECK(again.lambda1 == problem.lambda1);
  CHECK((again.M - problem.M).norm() == 0.0);
  CHECK((again.y - problem.y).norm() == 0.0);
  CHECK(again.groups == problem.groups);
  CHECK_THROWS_AS(problem_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(problem_from_json(R"({"kind":"nope"})"),
                  std::invalid_argument);
}

TEST_CASE("non-convergence is reported, or thrown on request") {
  SolveOptions opt;
  opt.max_iter = 1;
  auto report = solve(identity_lasso(), PenaltyStrategy::fixed(), opt);
  CHECK(!report.converged);
  CHECK(report.iterations == 1);
  opt.require_convergence = true;
  CHECK_THROWS_AS(solve(identity_lasso(), PenaltyStrategy::fixed(), opt),
                  NonConvergence);
}

TEST_CASE("option validation") {
  SolveOptions opt;
  opt.max_iter = 0;
  CHECK_THROWS_AS(solve(identity_lasso(), PenaltyStrategy::fixed(), opt),
                  std::invalid_argument);
  SolveOptions opt2;
  opt2.beta0 = -1.0;
  CHECK_THROWS_AS(solve(identity_lasso(), PenaltyStrategy::fixed(), opt2),
                  std::invalid_argument);
  auto bad_rb = PenaltyStrategy::residual_balancing(0.5, 2.0);
  CHECK_THROWS_AS(solve(identity_lasso(), bad_rb, SolveOptions{}),
                  std::invalid_argument);
  auto wrong_sig = PenaltyStrategy::rule(dsl::typecheck(
      dsl::parse("bin_util"), dsl::Signature::schedule()));
  CHECK_THROWS_AS(solve(identity_lasso(), wrong_sig, SolveOptions{}),
                  std::invalid_argument);
}
