#include <optional>
#include <stdexcept>
#include <vector>

#include "evoopt/common/rng.hpp"
#include "evoopt/dsl/errors.hpp"
#include "evoopt/dsl/parser.hpp"
#include "evoopt/generator/generator.hpp"

namespace evoopt::gen {
namespace {

constexpr int kMaxAttempts = 8;

void validate(const GenerationRequest& req) {
  if (req.signature == nullptr)
    throw std::invalid_argument("generation request without a signature");
  if (req.exemplars.empty())
    throw std::invalid_argument("generation request without exemplars");
  if (req.num_candidates < 1)
    throw std::invalid_argument("num_candidates must be positive");
  for (std::size_t i = 1; i < req.exemplars.size(); ++i)
    if (req.exemplars[i - 1].fitness > req.exemplars[i].fitness)
      throw std::invalid_argument("exemplars must be sorted by fitness");
}

void preorder(const dsl::AstPtr& node, std::vector<dsl::AstPtr>& out) {
  out.push_back(node);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, dsl::AstNode::Unary>) {
          preorder(n.child, out);
        } else if constexpr (std::is_same_v<T, dsl::AstNode::Binary>) {
          preorder(n.left, out);
          preorder(n.right, out);
        } else if constexpr (std::is_same_v<T, dsl::AstNode::If>) {
          preorder(n.lhs, out);
          preorder(n.rhs, out);
          preorder(n.then_branch, out);
          preorder(n.else_branch, out);
        }
      },
      node->v);
}

// New tree with the subtree at preorder position `target` swapped out;
// untouched branches stay shared with the original.
dsl::AstPtr splice(const dsl::AstPtr& node, int target, int& next,
                   const dsl::AstPtr& replacement) {
  int here = next++;
  if (here == target) return replacement;
  return std::visit(
      [&](const auto& n) -> dsl::AstPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, dsl::AstNode::Unary>) {
          return dsl::make_unary(n.op, splice(n.child, target, next, replacement));
        } else if constexpr (std::is_same_v<T, dsl::AstNode::Binary>) {
          auto left = splice(n.left, target, next, replacement);
          auto right = splice(n.right, target, next, replacement);
          return dsl::make_binary(n.op, std::move(left), std::move(right));
        } else if constexpr (std::is_same_v<T, dsl::AstNode::If>) {
          auto lhs = splice(n.lhs, target, next, replacement);
          auto rhs = splice(n.rhs, target, next, replacement);
          auto then_branch = splice(n.then_branch, target, next, replacement);
          auto else_branch = splice(n.else_branch, target, next, replacement);
          return dsl::make_if(n.cmp, std::move(lhs), std::move(rhs),
                              std::move(then_branch), std::move(else_branch));
        } else {
          return node;  // leaf other than the target
        }
      },
      node->v);
}

dsl::AstPtr splice(const dsl::AstPtr& root, int target,
                   const dsl::AstPtr& replacement) {
  int next = 0;
  return splice(root, target, next, replacement);
}

struct ExemplarPool {
  const GenerationRequest& req;
  std::vector<std::optional<dsl::Program>> parsed;

  explicit ExemplarPool(const GenerationRequest& req)
      : req(req), parsed(req.exemplars.size()) {}

  // nullptr when the exemplar text does not survive parse + typecheck
  const dsl::Program* program(std::size_t i) {
    if (!parsed[i].has_value()) {
      try {
        parsed[i] =
            dsl::typecheck(dsl::parse(req.exemplars[i].source), *req.signature);
      } catch (const dsl::DslError&) {
        parsed[i] = dsl::Program{};  // sentinel: null ast
      }
    }
    const dsl::Program& p = *parsed[i];
    return p.ast ? &p : nullptr;
  }
};

// index drawn over everyone-but-parent
std::size_t pick_other(Rng& rng, std::size_t n, std::size_t parent) {
  std::size_t t = rng.below(static_cast<std::uint64_t>(n - 1));
  return t >= parent ? t + 1 : t;
}

dsl::AstPtr mutate_constant(Rng& rng, const std::vector<dsl::AstPtr>& nodes,
                            bool scale) {
  std::vector<int> spots;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (std::holds_alternative<dsl::AstNode::Const>(nodes[i]->v))
      spots.push_back(static_cast<int>(i));
  if (spots.empty()) return nullptr;
  int at = spots[rng.below(spots.size())];
  double value = std::get<dsl::AstNode::Const>(nodes[at]->v).value;
  double factor = scale ? (rng.coin() ? 2.0 : 0.5) : (rng.coin() ? 1.1 : 0.9);
  return splice(nodes[0], at, dsl::make_const(value * factor));
}

dsl::AstPtr mutate_binary_op(Rng& rng, const std::vector<dsl::AstPtr>& nodes) {
  std::vector<int> spots;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (std::holds_alternative<dsl::AstNode::Binary>(nodes[i]->v))
      spots.push_back(static_cast<int>(i));
  if (spots.empty()) return nullptr;
  int at = spots[rng.below(spots.size())];
  const auto& bin = std::get<dsl::AstNode::Binary>(nodes[at]->v);
  auto current = static_cast<std::uint64_t>(bin.op);
  std::uint64_t pick = rng.below(5);
  if (pick >= current) ++pick;
  return splice(nodes[0], at,
                dsl::make_binary(static_cast<dsl::BinaryOp>(pick), bin.left,
                                 bin.right));
}

}  // namespace

std::vector<std::string> mock_generate(const GenerationRequest& req) {
  validate(req);
  Rng rng(req.seed);
  ExemplarPool pool(req);
  const std::size_t n = req.exemplars.size();
  auto vars = req.signature->variables();

  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(req.num_candidates));
  for (int c = 0; c < req.num_candidates; ++c) {
    // Rank weights are flat except the best exemplar, which counts double.
    std::uint64_t t = rng.below(static_cast<std::uint64_t>(n) + 1);
    std::size_t parent_idx = t < n - 1 ? static_cast<std::size_t>(t) : n - 1;

    std::string emitted;
    for (int attempt = 0; attempt < kMaxAttempts && emitted.empty();
         ++attempt) {
      std::uint64_t kind = rng.below(5);
      if (kind == 3 && n < 2) {
        static constexpr std::uint64_t remap[4] = {0, 1, 2, 4};
        kind = remap[rng.below(4)];
      }

      const dsl::Program* parent = pool.program(parent_idx);
      if (parent == nullptr) continue;
      std::vector<dsl::AstPtr> nodes;
      preorder(parent->ast, nodes);

      dsl::AstPtr candidate;
      switch (kind) {
        case 0:
          candidate = mutate_constant(rng, nodes, /*scale=*/true);
          break;
        case 1:
          candidate = mutate_constant(rng, nodes, /*scale=*/false);
          break;
        case 2:
          candidate = mutate_binary_op(rng, nodes);
          break;
        case 3: {
          const dsl::Program* partner =
              pool.program(pick_other(rng, n, parent_idx));
          if (partner == nullptr) break;
          std::vector<dsl::AstPtr> donor;
          preorder(partner->ast, donor);
          int at = static_cast<int>(rng.below(nodes.size()));
          candidate = splice(parent->ast, at, donor[rng.below(donor.size())]);
          break;
        }
        case 4: {
          auto cmp = static_cast<dsl::CmpOp>(rng.below(4));
          auto lhs = dsl::make_var(std::string(vars[rng.below(vars.size())]));
          auto rhs = dsl::make_var(std::string(vars[rng.below(vars.size())]));
          dsl::AstPtr other = dsl::make_const(1.0);
          if (n >= 2) {
            const dsl::Program* donor =
                pool.program(pick_other(rng, n, parent_idx));
            if (donor == nullptr) break;
            other = donor->ast;
          }
          candidate = dsl::make_if(cmp, std::move(lhs), std::move(rhs),
                                   parent->ast, std::move(other));
          break;
        }
        default:
          break;
      }
      if (!candidate) continue;
      try {
        emitted = dsl::typecheck(candidate, *req.signature).canonical_text;
      } catch (const dsl::DslError&) {
        // over a cap or out-of-range constant: burn the attempt
      }
    }

    if (emitted.empty()) {
      const dsl::Program* parent = pool.program(parent_idx);
      emitted =
          parent ? parent->canonical_text : req.exemplars[parent_idx].source;
    }
    out.push_back(std::move(emitted));
  }
  return out;
}

}  // namespace evoopt::gen
