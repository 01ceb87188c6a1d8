#include "evoopt/dsl/eval.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "evoopt/dsl/errors.hpp"

namespace evoopt::dsl {
namespace {

struct Evaluator {
  std::span<const double> values;
  const EvalLimits& limits;
  std::int64_t steps = 0;

  double clamp(double x) const {
    return std::clamp(x, -limits.clamp_abs, limits.clamp_abs);
  }

  void charge() {
    if (++steps > limits.step_budget)
      throw StepBudgetExceeded("step budget exceeded");
  }

  double eval(const AstNode& n) {
    charge();
    if (const auto* c = std::get_if<AstNode::Const>(&n.v)) return clamp(c->value);
    if (const auto* v = std::get_if<AstNode::Var>(&n.v)) {
      assert(v->slot >= 0 && static_cast<std::size_t>(v->slot) < values.size());
      return clamp(values[static_cast<std::size_t>(v->slot)]);
    }
    if (const auto* u = std::get_if<AstNode::Unary>(&n.v)) {
      double x = eval(*u->child);
      switch (u->op) {
        case UnaryOp::Neg: return clamp(-x);
        case UnaryOp::Abs: return clamp(std::abs(x));
        case UnaryOp::SafeLog: return clamp(std::log(std::abs(x) + kLogEpsilon));
        case UnaryOp::SafeExp: return clamp(std::exp(std::min(x, kExpArgCap)));
      }
    }
    if (const auto* b = std::get_if<AstNode::Binary>(&n.v)) {
      double l = eval(*b->left);
      double r = eval(*b->right);
      switch (b->op) {
        case BinaryOp::Add: return clamp(l + r);
        case BinaryOp::Sub: return clamp(l - r);
        case BinaryOp::Mul: return clamp(l * r);
        case BinaryOp::SafeDiv: {
          double den = std::abs(r) >= kDivEpsilon
                           ? r
                           : (r >= 0.0 ? kDivEpsilon : -kDivEpsilon);
          return clamp(l / den);
        }
        case BinaryOp::Min: return clamp(std::min(l, r));
        case BinaryOp::Max: return clamp(std::max(l, r));
      }
    }
    const auto& f = std::get<AstNode::If>(n.v);
    double l = eval(*f.lhs);
    double r = eval(*f.rhs);
    bool taken;
    switch (f.cmp) {
      case CmpOp::Lt: taken = l < r; break;
      case CmpOp::Le: taken = l <= r; break;
      case CmpOp::Gt: taken = l > r; break;
      case CmpOp::Ge: taken = l >= r; break;
      default: taken = false; break;
    }
    // Only the taken branch is walked, so step cost tracks the executed path.
    return eval(taken ? *f.then_branch : *f.else_branch);
  }
};

}  // namespace

double evaluate(const Program& prog, std::span<const double> values,
                const EvalLimits& limits) {
  if (!prog.ast || prog.signature == nullptr)
    throw BindingError("program is not typechecked");
  if (values.size() != prog.signature->variables().size())
    throw BindingError("binding count does not match signature");
  for (double v : values)
    if (!std::isfinite(v)) throw BindingError("non-finite binding value");
  Evaluator ev{values, limits};
  double result = ev.eval(*prog.ast);
  assert(std::isfinite(result));
  return result;
}

double evaluate(const Program& prog,
                const std::map<std::string, double>& bindings,
                const EvalLimits& limits) {
  if (!prog.ast || prog.signature == nullptr)
    throw BindingError("program is not typechecked");
  auto vars = prog.signature->variables();
  if (bindings.size() != vars.size())
    throw BindingError("bindings must cover the signature exactly");
  std::vector<double> values(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto it = bindings.find(vars[i]);
    if (it == bindings.end()) throw BindingError("missing binding: " + vars[i]);
    values[i] = it->second;
  }
  return evaluate(prog, values, limits);
}

}  // namespace evoopt::dsl
