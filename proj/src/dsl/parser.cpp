#include "evoopt/dsl/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "evoopt/dsl/errors.hpp"

namespace evoopt::dsl {
namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

struct Parser {
  std::string_view src;
  std::size_t pos = 0;
  int nodes = 0;

  [[noreturn]] void fail(std::size_t at, const std::string& msg) {
    throw SyntaxError(at, msg);
  }

  void bump_nodes() {
    if (++nodes > kMaxNodes)
      throw LimitError("expression exceeds " + std::to_string(kMaxNodes) +
                       " nodes");
  }

  void skip_ws() {
    while (pos < src.size() &&
           (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' ||
            src[pos] == '\r'))
      ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= src.size();
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  // Keyword / identifier lookahead with word-boundary awareness.
  bool peek_word(std::string_view w) {
    skip_ws();
    if (src.size() - pos < w.size() || src.substr(pos, w.size()) != w)
      return false;
    std::size_t after = pos + w.size();
    return after >= src.size() || !ident_char(src[after]);
  }

  bool eat_word(std::string_view w) {
    if (!peek_word(w)) return false;
    pos += w.size();
    return true;
  }

  void expect_word(std::string_view w) {
    skip_ws();
    if (!eat_word(w)) fail(pos, "expected '" + std::string(w) + "'");
  }

  void expect_char(char c) {
    skip_ws();
    if (pos >= src.size() || src[pos] != c)
      fail(pos, std::string("expected '") + c + "'");
    ++pos;
  }

  AstPtr parse_expr() {
    if (eat_word("if")) {
      auto [cmp, lhs, rhs] = parse_comparison();
      expect_word("then");
      AstPtr then_branch = parse_expr();
      expect_word("else");
      AstPtr else_branch = parse_expr();
      bump_nodes();
      return make_if(cmp, std::move(lhs), std::move(rhs),
                     std::move(then_branch), std::move(else_branch));
    }
    return parse_additive();
  }

  std::tuple<CmpOp, AstPtr, AstPtr> parse_comparison() {
    AstPtr lhs = parse_additive();
    skip_ws();
    CmpOp op;
    if (pos < src.size() && src[pos] == '<') {
      ++pos;
      op = (pos < src.size() && src[pos] == '=') ? (++pos, CmpOp::Le) : CmpOp::Lt;
    } else if (pos < src.size() && src[pos] == '>') {
      ++pos;
      op = (pos < src.size() && src[pos] == '=') ? (++pos, CmpOp::Ge) : CmpOp::Gt;
    } else {
      fail(pos, "expected comparison operator");
    }
    AstPtr rhs = parse_additive();
    return {op, std::move(lhs), std::move(rhs)};
  }

  AstPtr parse_additive() {
    AstPtr left = parse_multiplicative();
    for (;;) {
      skip_ws();
      if (pos >= src.size()) break;
      char c = src[pos];
      if (c != '+' && c != '-') break;
      ++pos;
      AstPtr right = parse_multiplicative();
      bump_nodes();
      left = make_binary(c == '+' ? BinaryOp::Add : BinaryOp::Sub,
                         std::move(left), std::move(right));
    }
    return left;
  }

  AstPtr parse_multiplicative() {
    AstPtr left = parse_unary();
    for (;;) {
      skip_ws();
      if (pos >= src.size()) break;
      char c = src[pos];
      if (c != '*' && c != '/') break;
      ++pos;
      AstPtr right = parse_unary();
      bump_nodes();
      left = make_binary(c == '*' ? BinaryOp::Mul : BinaryOp::SafeDiv,
                         std::move(left), std::move(right));
    }
    return left;
  }

  AstPtr parse_unary() {
    skip_ws();
    if (pos < src.size() && src[pos] == '-') {
      ++pos;
      AstPtr operand = parse_unary();
      // Fold a literal's sign into the constant so canonical text round-trips
      // to an identical tree.
      if (const auto* c = std::get_if<AstNode::Const>(&operand->v))
        return make_const(-c->value);
      bump_nodes();
      return make_unary(UnaryOp::Neg, std::move(operand));
    }
    return parse_primary();
  }

  AstPtr parse_number() {
    std::size_t start = pos;
    double value = 0.0;
    auto res = std::from_chars(src.data() + pos, src.data() + src.size(), value,
                               std::chars_format::general);
    if (res.ec != std::errc()) fail(start, "malformed number");
    pos = static_cast<std::size_t>(res.ptr - src.data());
    if (!std::isfinite(value) || std::abs(value) > kMaxConstAbs)
      fail(start, "constant out of range");
    bump_nodes();
    return make_const(value);
  }

  AstPtr parse_call(UnaryOp op) {
    expect_char('(');
    AstPtr arg = parse_expr();
    expect_char(')');
    bump_nodes();
    return make_unary(op, std::move(arg));
  }

  AstPtr parse_call(BinaryOp op) {
    expect_char('(');
    AstPtr a = parse_expr();
    expect_char(',');
    AstPtr b = parse_expr();
    expect_char(')');
    bump_nodes();
    return make_binary(op, std::move(a), std::move(b));
  }

  AstPtr parse_primary() {
    skip_ws();
    if (pos >= src.size()) fail(pos, "expected expression");
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (c == '(') {
      ++pos;
      AstPtr inner = parse_expr();
      expect_char(')');
      return inner;
    }
    if (ident_start(c)) {
      std::size_t start = pos;
      while (pos < src.size() && ident_char(src[pos])) ++pos;
      std::string_view word = src.substr(start, pos - start);
      if (word == "min") return parse_call(BinaryOp::Min);
      if (word == "max") return parse_call(BinaryOp::Max);
      if (word == "abs") return parse_call(UnaryOp::Abs);
      if (word == "safe_log") return parse_call(UnaryOp::SafeLog);
      if (word == "safe_exp") return parse_call(UnaryOp::SafeExp);
      if (word == "if" || word == "then" || word == "else")
        fail(start, "unexpected keyword '" + std::string(word) + "'");
      bump_nodes();
      return make_var(std::string(word));
    }
    fail(pos, std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

AstPtr parse(std::string_view source) {
  if (source.size() > kMaxSourceBytes)
    throw LimitError("source exceeds " + std::to_string(kMaxSourceBytes) +
                     " bytes");
  Parser p{source};
  if (p.at_end()) throw SyntaxError(p.pos, "empty expression");
  AstPtr root = p.parse_expr();
  if (!p.at_end()) p.fail(p.pos, "unexpected trailing input");
  return root;
}

}  // namespace evoopt::dsl
