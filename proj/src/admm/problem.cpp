#include "evoopt/admm/problem.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "evoopt/common/rng.hpp"

namespace evoopt::admm {

const char* kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::Lasso: return "lasso";
    case ProblemKind::ElasticNet: return "elasticnet";
    case ProblemKind::GroupLasso: return "grouplasso";
  }
  return "?";
}

ProblemKind kind_by_name(const std::string& name) {
  if (name == "lasso") return ProblemKind::Lasso;
  if (name == "elasticnet") return ProblemKind::ElasticNet;
  if (name == "grouplasso") return ProblemKind::GroupLasso;
  throw std::invalid_argument("unknown problem kind: " + name);
}

void StructuredProblem::validate() const {
  if (M.rows() == 0 || M.cols() == 0)
    throw std::invalid_argument("problem: empty design matrix");
  if (y.size() != M.rows())
    throw std::invalid_argument("problem: y length must match M rows");
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1))
    throw std::invalid_argument("problem: lambda1 must be >= 0");
  if (kind == ProblemKind::ElasticNet &&
      (!(lambda2 >= 0.0) || !std::isfinite(lambda2)))
    throw std::invalid_argument("problem: lambda2 must be >= 0");
  if (kind == ProblemKind::GroupLasso) {
    std::vector<char> seen(static_cast<std::size_t>(M.cols()), 0);
    for (const auto& g : groups) {
      if (g.empty()) throw std::invalid_argument("problem: empty group");
      for (int idx : g) {
        if (idx < 0 || idx >= M.cols())
          throw std::invalid_argument("problem: group index out of range");
        if (seen[static_cast<std::size_t>(idx)]++)
          throw std::invalid_argument("problem: groups must not overlap");
      }
    }
    for (char s : seen)
      if (!s) throw std::invalid_argument("problem: groups must cover all indices");
  }
  if (!M.allFinite() || !y.allFinite())
    throw std::invalid_argument("problem: non-finite data");
}

double regularizer(const StructuredProblem& p, const Eigen::VectorXd& v) {
  switch (p.kind) {
    case ProblemKind::Lasso:
      return p.lambda1 * v.lpNorm<1>();
    case ProblemKind::ElasticNet:
      return p.lambda1 * v.lpNorm<1>() + 0.5 * p.lambda2 * v.squaredNorm();
    case ProblemKind::GroupLasso: {
      double sum = 0.0;
      for (const auto& g : p.groups) {
        double sq = 0.0;
        for (int idx : g) sq += v[idx] * v[idx];
        sum += std::sqrt(sq);
      }
      return p.lambda1 * sum;
    }
  }
  return 0.0;
}

double objective(const StructuredProblem& p, const Eigen::VectorXd& x) {
  return 0.5 * (p.M * x - p.y).squaredNorm() + regularizer(p, x);
}

std::string problem_to_json(const StructuredProblem& p) {
  nlohmann::json j;
  j["kind"] = kind_name(p.kind);
  j["m"] = p.M.rows();
  j["n"] = p.M.cols();
  j["lambda1"] = p.lambda1;
  j["lambda2"] = p.lambda2;
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(p.M.rows()));
  for (Eigen::Index r = 0; r < p.M.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(p.M.cols()));
    for (Eigen::Index c = 0; c < p.M.cols(); ++c)
      row[static_cast<std::size_t>(c)] = p.M(r, c);
    rows.push_back(std::move(row));
  }
  j["M"] = rows;
  j["y"] = std::vector<double>(p.y.data(), p.y.data() + p.y.size());
  if (p.kind == ProblemKind::GroupLasso) j["groups"] = p.groups;
  return j.dump();
}

StructuredProblem problem_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("problem file: ") + e.what());
  }
  StructuredProblem p;
  try {
    p.kind = kind_by_name(j.at("kind").get<std::string>());
    auto m = j.at("m").get<Eigen::Index>();
    auto n = j.at("n").get<Eigen::Index>();
    p.lambda1 = j.at("lambda1").get<double>();
    p.lambda2 = j.value("lambda2", 0.0);
    auto rows = j.at("M").get<std::vector<std::vector<double>>>();
    if (static_cast<Eigen::Index>(rows.size()) != m)
      throw std::invalid_argument("problem file: M row count mismatch");
    p.M.resize(m, n);
    for (Eigen::Index r = 0; r < m; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
        throw std::invalid_argument("problem file: M column count mismatch");
      for (Eigen::Index c = 0; c < n; ++c)
        p.M(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    auto yv = j.at("y").get<std::vector<double>>();
    p.y = Eigen::Map<Eigen::VectorXd>(yv.data(),
                                      static_cast<Eigen::Index>(yv.size()));
    if (j.contains("groups"))
      p.groups = j.at("groups").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("problem file: ") + e.what());
  }
  p.validate();
  return p;
}

void save_problem_file(const std::string& path, const StructuredProblem& p) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path + " for writing");
  out << problem_to_json(p) << '\n';
}

StructuredProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return problem_from_json(ss.str());
}

StructuredProblem random_problem(const RandomProblemSpec& spec) {
  if (spec.m <= 0 || spec.n <= 0)
    throw std::invalid_argument("random_problem: bad dimensions");
  Rng rng(spec.seed);
  StructuredProblem p;
  p.kind = spec.kind;
  p.M.resize(spec.m, spec.n);
  double scale = 1.0 / std::sqrt(static_cast<double>(spec.m));
  for (Eigen::Index r = 0; r < spec.m; ++r)
    for (Eigen::Index c = 0; c < spec.n; ++c) p.M(r, c) = scale * rng.normal();
  if (spec.condition != 1.0 && spec.n > 1) {
    for (Eigen::Index c = 0; c < spec.n; ++c) {
      double t = static_cast<double>(c) / static_cast<double>(spec.n - 1);
      p.M.col(c) *= std::pow(spec.condition, t);
    }
  }
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(spec.n);
  for (Eigen::Index c = 0; c < spec.n; ++c)
    if (rng.uniform01() < spec.sparsity) truth[c] = rng.coin() ? 1.0 : -1.0;
  p.y = p.M * truth;
  for (Eigen::Index r = 0; r < spec.m; ++r) p.y[r] += spec.noise * rng.normal();
  double lambda_scale = (p.M.transpose() * p.y).lpNorm<Eigen::Infinity>();
  p.lambda1 = spec.lambda1_factor * (lambda_scale > 0 ? lambda_scale : 1.0);
  if (spec.kind == ProblemKind::ElasticNet) p.lambda2 = spec.lambda2;
  if (spec.kind == ProblemKind::GroupLasso) {
    int g = std::max(1, std::min(spec.num_groups, spec.n));
    p.groups.assign(static_cast<std::size_t>(g), {});
    for (int c = 0; c < spec.n; ++c)
      p.groups[static_cast<std::size_t>(c % g)].push_back(c);
  }
  p.validate();
  return p;
}

}  // namespace evoopt::admm
