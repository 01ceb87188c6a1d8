#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evoopt/dsl/ast.hpp"

namespace evoopt::dsl {

// The two fixed variable sets programs can be written against.
class Signature {
 public:
  enum class Kind { Schedule, Penalty };

  static const Signature& schedule();  // req_cpu req_mem free_cpu free_mem bin_util
  static const Signature& penalty();   // p d beta k
  static const Signature& by_name(const std::string& name);  // "SCHEDULE"/"PENALTY"

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::span<const std::string> variables() const { return vars_; }
  int slot_of(const std::string& var) const;  // -1 if absent

 private:
  Signature(Kind kind, std::string name, std::vector<std::string> vars)
      : kind_(kind), name_(std::move(name)), vars_(std::move(vars)) {}
  Kind kind_;
  std::string name_;
  std::vector<std::string> vars_;
};

// A typechecked genome. The ast is normalized (no Neg around a Const, slots
// resolved), the canonical text reparses to a structurally equal tree, and the
// hash is FNV-1a64 of that text. Immutable after construction.
struct Program {
  AstPtr ast;
  const Signature* signature = nullptr;
  std::string canonical_text;
  std::uint64_t canonical_hash = 0;
};

// Validates every node (ArityError on malformed ones), resolves variables
// against the signature (UnboundVariable), enforces the node cap (LimitError),
// folds Neg(Const) into negative constants, and computes the canonical form.
Program typecheck(const AstPtr& ast, const Signature& sig);

std::string canonical_print(const AstNode& ast);
inline std::string canonical_print(const AstPtr& p) { return canonical_print(*p); }
inline const std::string& canonical_print(const Program& p) {
  return p.canonical_text;
}

inline int complexity(const Program& p) { return node_count(p.ast); }

// Shortest round-trip decimal, with ".0" appended when the result would
// otherwise read as an integer.
std::string format_const(double value);

}  // namespace evoopt::dsl
