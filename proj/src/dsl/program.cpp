#include "evoopt/dsl/program.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "evoopt/common/rng.hpp"
#include "evoopt/dsl/errors.hpp"
#include "evoopt/dsl/parser.hpp"

namespace evoopt::dsl {

const Signature& Signature::schedule() {
  static const Signature sig(
      Kind::Schedule, "SCHEDULE",
      {"req_cpu", "req_mem", "free_cpu", "free_mem", "bin_util"});
  return sig;
}

const Signature& Signature::penalty() {
  static const Signature sig(Kind::Penalty, "PENALTY", {"p", "d", "beta", "k"});
  return sig;
}

const Signature& Signature::by_name(const std::string& name) {
  if (name == "SCHEDULE") return schedule();
  if (name == "PENALTY") return penalty();
  throw std::invalid_argument("unknown signature: " + name);
}

int Signature::slot_of(const std::string& var) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == var) return static_cast<int>(i);
  return -1;
}

std::string format_const(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

namespace {

void print_node(const AstNode& n, std::string& out) {
  if (const auto* c = std::get_if<AstNode::Const>(&n.v)) {
    out += format_const(c->value);
  } else if (const auto* v = std::get_if<AstNode::Var>(&n.v)) {
    out += v->name;
  } else if (const auto* u = std::get_if<AstNode::Unary>(&n.v)) {
    if (u->op == UnaryOp::Neg) {
      out += "(-";
      print_node(*u->child, out);
      out += ')';
    } else {
      out += unary_op_token(u->op);
      out += '(';
      print_node(*u->child, out);
      out += ')';
    }
  } else if (const auto* b = std::get_if<AstNode::Binary>(&n.v)) {
    if (b->op == BinaryOp::Min || b->op == BinaryOp::Max) {
      out += binary_op_token(b->op);
      out += '(';
      print_node(*b->left, out);
      out += ", ";
      print_node(*b->right, out);
      out += ')';
    } else {
      out += '(';
      print_node(*b->left, out);
      out += ' ';
      out += binary_op_token(b->op);
      out += ' ';
      print_node(*b->right, out);
      out += ')';
    }
  } else {
    const auto& f = std::get<AstNode::If>(n.v);
    out += "(if ";
    print_node(*f.lhs, out);
    out += ' ';
    out += cmp_op_token(f.cmp);
    out += ' ';
    print_node(*f.rhs, out);
    out += " then ";
    print_node(*f.then_branch, out);
    out += " else ";
    print_node(*f.else_branch, out);
    out += ')';
  }
}

// Validates, resolves slots and normalizes in one pass; returns a fresh tree.
AstPtr check_node(const AstNode& n, const Signature& sig) {
  if (const auto* c = std::get_if<AstNode::Const>(&n.v)) {
    if (!std::isfinite(c->value) || std::abs(c->value) > kMaxConstAbs)
      throw ArityError("constant out of range");
    return make_const(c->value);
  }
  if (const auto* v = std::get_if<AstNode::Var>(&n.v)) {
    int slot = sig.slot_of(v->name);
    if (slot < 0) throw UnboundVariable(v->name);
    return make_var(v->name, slot);
  }
  if (const auto* u = std::get_if<AstNode::Unary>(&n.v)) {
    if (!u->child) throw ArityError("unary node with null child");
    AstPtr child = check_node(*u->child, sig);
    if (u->op == UnaryOp::Neg) {
      if (const auto* cc = std::get_if<AstNode::Const>(&child->v))
        return make_const(-cc->value);
    }
    return make_unary(u->op, std::move(child));
  }
  if (const auto* b = std::get_if<AstNode::Binary>(&n.v)) {
    if (!b->left || !b->right) throw ArityError("binary node with null child");
    return make_binary(b->op, check_node(*b->left, sig),
                       check_node(*b->right, sig));
  }
  const auto& f = std::get<AstNode::If>(n.v);
  if (!f.lhs || !f.rhs || !f.then_branch || !f.else_branch)
    throw ArityError("if node with null child");
  return make_if(f.cmp, check_node(*f.lhs, sig), check_node(*f.rhs, sig),
                 check_node(*f.then_branch, sig),
                 check_node(*f.else_branch, sig));
}

}  // namespace

std::string canonical_print(const AstNode& ast) {
  std::string out;
  print_node(ast, out);
  return out;
}

Program typecheck(const AstPtr& ast, const Signature& sig) {
  if (!ast) throw ArityError("null ast");
  AstPtr checked = check_node(*ast, sig);
  int n = node_count(checked);
  if (n > kMaxNodes)
    throw LimitError("expression exceeds " + std::to_string(kMaxNodes) +
                     " nodes");
  Program p;
  p.ast = std::move(checked);
  p.signature = &sig;
  p.canonical_text = canonical_print(*p.ast);
  if (p.canonical_text.size() > kMaxSourceBytes)
    throw LimitError("canonical form exceeds " +
                     std::to_string(kMaxSourceBytes) + " bytes");
  p.canonical_hash = fnv1a64(p.canonical_text);
  return p;
}

}  // namespace evoopt::dsl
