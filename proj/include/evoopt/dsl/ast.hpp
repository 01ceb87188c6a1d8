#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>

namespace evoopt::dsl {

// Hard limits shared by parser, typecheck and the generators.
inline constexpr int kMaxNodes = 256;
inline constexpr std::size_t kMaxSourceBytes = 4096;
inline constexpr double kMaxConstAbs = 1e12;

enum class UnaryOp : std::uint8_t { Neg, Abs, SafeLog, SafeExp };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, SafeDiv, Min, Max };
// Comparisons exist only as the condition of an If node, never as values.
enum class CmpOp : std::uint8_t { Lt, Le, Gt, Ge };

struct AstNode;
using AstPtr = std::shared_ptr<const AstNode>;

struct AstNode {
  struct Const {
    double value;
  };
  struct Var {
    std::string name;
    int slot = -1;  // signature index, filled by typecheck; -1 = unresolved
  };
  struct Unary {
    UnaryOp op;
    AstPtr child;
  };
  struct Binary {
    BinaryOp op;
    AstPtr left, right;
  };
  struct If {
    CmpOp cmp;
    AstPtr lhs, rhs;  // condition operands
    AstPtr then_branch, else_branch;
  };

  std::variant<Const, Var, Unary, Binary, If> v;
};

inline AstPtr make_const(double value) {
  return std::make_shared<AstNode>(AstNode{AstNode::Const{value}});
}
inline AstPtr make_var(std::string name, int slot = -1) {
  return std::make_shared<AstNode>(AstNode{AstNode::Var{std::move(name), slot}});
}
inline AstPtr make_unary(UnaryOp op, AstPtr child) {
  return std::make_shared<AstNode>(AstNode{AstNode::Unary{op, std::move(child)}});
}
inline AstPtr make_binary(BinaryOp op, AstPtr left, AstPtr right) {
  return std::make_shared<AstNode>(
      AstNode{AstNode::Binary{op, std::move(left), std::move(right)}});
}
inline AstPtr make_if(CmpOp cmp, AstPtr lhs, AstPtr rhs, AstPtr then_branch,
                      AstPtr else_branch) {
  return std::make_shared<AstNode>(
      AstNode{AstNode::If{cmp, std::move(lhs), std::move(rhs),
                          std::move(then_branch), std::move(else_branch)}});
}

int node_count(const AstNode& n);
inline int node_count(const AstPtr& p) { return node_count(*p); }

// Structural equality; Var slots are ignored (they are a typecheck artifact,
// not part of the genome identity).
bool structural_equal(const AstNode& a, const AstNode& b);
inline bool structural_equal(const AstPtr& a, const AstPtr& b) {
  return structural_equal(*a, *b);
}

const char* binary_op_token(BinaryOp op);  // "+", "-", "*", "/", "min", "max"
const char* unary_op_token(UnaryOp op);    // "-", "abs", "safe_log", "safe_exp"
const char* cmp_op_token(CmpOp op);        // "<", "<=", ">", ">="

}  // namespace evoopt::dsl
