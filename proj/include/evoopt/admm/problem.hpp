#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace evoopt::admm {

enum class ProblemKind { Lasso, ElasticNet, GroupLasso };

const char* kind_name(ProblemKind k);
ProblemKind kind_by_name(const std::string& name);

// min over x of 0.5*||M x - y||^2 + g(x) with
//   Lasso:      g = lambda1 * ||x||_1
//   ElasticNet: g = lambda1 * ||x||_1 + (lambda2 / 2) * ||x||^2
//   GroupLasso: g = lambda1 * sum_g ||x_g||_2  (groups partition the indices)
struct StructuredProblem {
  ProblemKind kind = ProblemKind::Lasso;
  Eigen::MatrixXd M;
  Eigen::VectorXd y;
  double lambda1 = 1.0;
  double lambda2 = 0.0;
  std::vector<std::vector<int>> groups;  // GroupLasso only

  void validate() const;  // throws std::invalid_argument
};

double regularizer(const StructuredProblem& p, const Eigen::VectorXd& v);
double objective(const StructuredProblem& p, const Eigen::VectorXd& x);

// Structured-text (JSON) round trip for problem files.
std::string problem_to_json(const StructuredProblem& p);
StructuredProblem problem_from_json(const std::string& text);
void save_problem_file(const std::string& path, const StructuredProblem& p);
StructuredProblem load_problem_file(const std::string& path);

// Seeded instance family shared by tests and the experiment harness.
struct RandomProblemSpec {
  ProblemKind kind = ProblemKind::Lasso;
  std::uint64_t seed = 1;
  int m = 20;
  int n = 40;
  double lambda1_factor = 0.1;  // lambda1 = factor * ||M^T y||_inf
  double lambda2 = 0.1;         // ElasticNet only
  int num_groups = 5;           // GroupLasso only
  double condition = 1.0;       // geometric column-scale ratio (1 = none)
  double noise = 0.01;
  double sparsity = 0.25;       // fraction of nonzeros in the planted signal
};

StructuredProblem random_problem(const RandomProblemSpec& spec);

}  // namespace evoopt::admm
