#pragma once

#include <string_view>

#include "evoopt/dsl/ast.hpp"

namespace evoopt::dsl {

// Grammar (see docs/dsl.md):
//
//   expr        := "if" comparison "then" expr "else" expr | additive
//   comparison  := additive ("<" | "<=" | ">" | ">=") additive
//   additive    := multiplicative (("+" | "-") multiplicative)*
//   multiplicative := unary (("*" | "/") unary)*
//   unary       := "-" unary | primary
//   primary     := NUMBER | IDENT | FUNC "(" expr ("," expr)? ")" | "(" expr ")"
//   FUNC        := "min" | "max" | "abs" | "safe_log" | "safe_exp"
//
// "/" is safe division. Comparisons appear only as if-conditions. A unary
// minus directly on a literal folds into a negative constant, so parsed trees
// never contain Neg(Const).
//
// Throws SyntaxError (with byte offset) or LimitError (source > 4096 bytes,
// node count > 256). The produced tree is unresolved: use typecheck() to get a
// Program.
AstPtr parse(std::string_view source);

}  // namespace evoopt::dsl
