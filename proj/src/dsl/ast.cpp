#include "evoopt/dsl/ast.hpp"

#include <cmath>

namespace evoopt::dsl {

int node_count(const AstNode& n) {
  struct Counter {
    int operator()(const AstNode::Const&) const { return 1; }
    int operator()(const AstNode::Var&) const { return 1; }
    int operator()(const AstNode::Unary& u) const {
      return 1 + node_count(*u.child);
    }
    int operator()(const AstNode::Binary& b) const {
      return 1 + node_count(*b.left) + node_count(*b.right);
    }
    int operator()(const AstNode::If& f) const {
      return 1 + node_count(*f.lhs) + node_count(*f.rhs) +
             node_count(*f.then_branch) + node_count(*f.else_branch);
    }
  };
  return std::visit(Counter{}, n.v);
}

bool structural_equal(const AstNode& a, const AstNode& b) {
  if (a.v.index() != b.v.index()) return false;
  if (const auto* ca = std::get_if<AstNode::Const>(&a.v)) {
    const auto& cb = std::get<AstNode::Const>(b.v);
    // Bit-compare so that 0.0 and -0.0 stay distinguishable; canonical
    // printing round-trips both exactly.
    return ca->value == cb.value &&
           std::signbit(ca->value) == std::signbit(cb.value);
  }
  if (const auto* va = std::get_if<AstNode::Var>(&a.v)) {
    return va->name == std::get<AstNode::Var>(b.v).name;
  }
  if (const auto* ua = std::get_if<AstNode::Unary>(&a.v)) {
    const auto& ub = std::get<AstNode::Unary>(b.v);
    return ua->op == ub.op && structural_equal(*ua->child, *ub.child);
  }
  if (const auto* ba = std::get_if<AstNode::Binary>(&a.v)) {
    const auto& bb = std::get<AstNode::Binary>(b.v);
    return ba->op == bb.op && structural_equal(*ba->left, *bb.left) &&
           structural_equal(*ba->right, *bb.right);
  }
  const auto& fa = std::get<AstNode::If>(a.v);
  const auto& fb = std::get<AstNode::If>(b.v);
  return fa.cmp == fb.cmp && structural_equal(*fa.lhs, *fb.lhs) &&
         structural_equal(*fa.rhs, *fb.rhs) &&
         structural_equal(*fa.then_branch, *fb.then_branch) &&
         structural_equal(*fa.else_branch, *fb.else_branch);
}

const char* binary_op_token(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::SafeDiv: return "/";
    case BinaryOp::Min: return "min";
    case BinaryOp::Max: return "max";
  }
  return "?";
}

const char* unary_op_token(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::SafeLog: return "safe_log";
    case UnaryOp::SafeExp: return "safe_exp";
  }
  return "?";
}

const char* cmp_op_token(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

}  // namespace evoopt::dsl
