#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evoopt::dsl {

struct DslError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Byte offset of the offending token in the source text.
struct SyntaxError : DslError {
  SyntaxError(std::size_t position, const std::string& message)
      : DslError("syntax error at offset " + std::to_string(position) + ": " +
                 message),
        position(position) {}
  std::size_t position;
};

// Source too long or the tree would exceed the node cap.
struct LimitError : DslError {
  using DslError::DslError;
};

struct UnboundVariable : DslError {
  explicit UnboundVariable(const std::string& name)
      : DslError("unbound variable: " + name), name(name) {}
  std::string name;
};

// Malformed hand-built node (null child, non-finite or out-of-range constant).
struct ArityError : DslError {
  using DslError::DslError;
};

struct StepBudgetExceeded : DslError {
  using DslError::DslError;
};

// Bindings passed to evaluate do not cover the signature exactly.
struct BindingError : DslError {
  using DslError::DslError;
};

}  // namespace evoopt::dsl
