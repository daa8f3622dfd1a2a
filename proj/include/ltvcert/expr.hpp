#pragma once

// Closed-form scalar expressions of time (and, for perturbation maps, of the
// state components x1..xn). Trees are immutable once built, so an Expression
// can be shared freely across threads.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltvcert/errors.hpp"

namespace ltvcert {

class Expression {
 public:
  enum class Kind {
    kConstant,
    kTime,
    kState,  // x1..xn, index is zero-based
    kNeg,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,  // integer exponent stored in `exponent`
    kSin,
    kCos,
    kExp,
    kAbs,
    kSqrt,
    kSign,  // only produced by differentiation of abs
  };

  struct Node {
    Kind kind = Kind::kConstant;
    double value = 0.0;
    int index = 0;
    int exponent = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  using NodePtr = std::shared_ptr<const Node>;

  Expression() : root_(make_constant(0.0)) {}
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  static Expression constant(double v) { return Expression(make_constant(v)); }
  static Expression time() {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kTime;
    return Expression(n);
  }

  const NodePtr& root() const { return root_; }

  bool is_constant() const { return root_->kind == Kind::kConstant; }
  bool depends_on_state() const { return uses_state(*root_); }

  /// Evaluates at time t. State symbols read from `state`; an expression that
  /// references x_k with k > state.size() throws EvalDomainError.
  double operator()(double t, std::span<const double> state = {}) const {
    return eval_node(*root_, t, state);
  }

  /// Exact derivative with respect to t. State symbols are treated as
  /// constants. abs(u) differentiates to sign(u)*u'.
  Expression derivative() const { return Expression(diff_node(root_)); }

  /// Infix text that parses back to an expression with identical values.
  /// Derivatives of abs print `sign(...)`, which the parser rejects.
  std::string to_string() const {
    std::string out;
    print_node(*root_, out);
    return out;
  }

 private:
  static NodePtr make_constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kConstant;
    n->value = v;
    return n;
  }
  static NodePtr make_unary(Kind k, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    return n;
  }
  static NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }
  static NodePtr make_pow(NodePtr a, int e) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kPow;
    n->lhs = std::move(a);
    n->exponent = e;
    return n;
  }

  static bool is_const(const NodePtr& n, double v) {
    return n->kind == Kind::kConstant && n->value == v;
  }

  // Folding helpers for derivative construction. Only identities that do
  // not reorder floating-point operations are applied.
  static NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (a->kind == Kind::kConstant && b->kind == Kind::kConstant)
      return make_constant(a->value + b->value);
    return make_binary(Kind::kAdd, std::move(a), std::move(b));
  }
  static NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    if (a->kind == Kind::kConstant && b->kind == Kind::kConstant)
      return make_constant(a->value - b->value);
    return make_binary(Kind::kSub, std::move(a), std::move(b));
  }
  static NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (a->kind == Kind::kConstant && b->kind == Kind::kConstant)
      return make_constant(a->value * b->value);
    return make_binary(Kind::kMul, std::move(a), std::move(b));
  }
  static NodePtr div(NodePtr a, NodePtr b) {
    if (is_const(a, 0.0)) return make_constant(0.0);
    if (is_const(b, 1.0)) return a;
    return make_binary(Kind::kDiv, std::move(a), std::move(b));
  }
  static NodePtr neg(NodePtr a) {
    if (a->kind == Kind::kConstant) return make_constant(-a->value);
    return make_unary(Kind::kNeg, std::move(a));
  }

  static bool uses_state(const Node& n) {
    if (n.kind == Kind::kState) return true;
    if (n.lhs && uses_state(*n.lhs)) return true;
    if (n.rhs && uses_state(*n.rhs)) return true;
    return false;
  }

  static double checked(double v, const char* what) {
    if (!std::isfinite(v))
      throw EvalDomainError(std::string("non-finite result in ") + what);
    return v;
  }

  static double eval_node(const Node& n, double t,
                          std::span<const double> state) {
    switch (n.kind) {
      case Kind::kConstant:
        return n.value;
      case Kind::kTime:
        return t;
      case Kind::kState:
        if (n.index < 0 || static_cast<std::size_t>(n.index) >= state.size())
          throw EvalDomainError("state symbol x" + std::to_string(n.index + 1) +
                                " is not bound");
        return state[static_cast<std::size_t>(n.index)];
      case Kind::kNeg:
        return -eval_node(*n.lhs, t, state);
      case Kind::kAdd:
        return eval_node(*n.lhs, t, state) + eval_node(*n.rhs, t, state);
      case Kind::kSub:
        return eval_node(*n.lhs, t, state) - eval_node(*n.rhs, t, state);
      case Kind::kMul:
        return eval_node(*n.lhs, t, state) * eval_node(*n.rhs, t, state);
      case Kind::kDiv: {
        const double num = eval_node(*n.lhs, t, state);
        const double den = eval_node(*n.rhs, t, state);
        if (den == 0.0) throw EvalDomainError("division by zero");
        return checked(num / den, "division");
      }
      case Kind::kPow: {
        const double base = eval_node(*n.lhs, t, state);
        if (n.exponent < 0 && base == 0.0)
          throw EvalDomainError("zero raised to a negative power");
        return checked(std::pow(base, n.exponent), "power");
      }
      case Kind::kSin:
        return std::sin(eval_node(*n.lhs, t, state));
      case Kind::kCos:
        return std::cos(eval_node(*n.lhs, t, state));
      case Kind::kExp:
        return checked(std::exp(eval_node(*n.lhs, t, state)), "exp");
      case Kind::kAbs:
        return std::fabs(eval_node(*n.lhs, t, state));
      case Kind::kSqrt: {
        const double v = eval_node(*n.lhs, t, state);
        if (v < 0.0) throw EvalDomainError("sqrt of a negative number");
        return std::sqrt(v);
      }
      case Kind::kSign: {
        const double v = eval_node(*n.lhs, t, state);
        return static_cast<double>((v > 0.0) - (v < 0.0));
      }
    }
    throw EvalDomainError("corrupt expression node");
  }

  static NodePtr diff_node(const NodePtr& p) {
    const Node& n = *p;
    switch (n.kind) {
      case Kind::kConstant:
      case Kind::kState:
      case Kind::kSign:
        return make_constant(0.0);
      case Kind::kTime:
        return make_constant(1.0);
      case Kind::kNeg:
        return neg(diff_node(n.lhs));
      case Kind::kAdd:
        return add(diff_node(n.lhs), diff_node(n.rhs));
      case Kind::kSub:
        return sub(diff_node(n.lhs), diff_node(n.rhs));
      case Kind::kMul:
        return add(mul(diff_node(n.lhs), n.rhs), mul(n.lhs, diff_node(n.rhs)));
      case Kind::kDiv: {
        NodePtr du = diff_node(n.lhs);
        NodePtr dv = diff_node(n.rhs);
        if (is_const(dv, 0.0)) return div(du, n.rhs);
        return div(sub(mul(du, n.rhs), mul(n.lhs, dv)), make_pow(n.rhs, 2));
      }
      case Kind::kPow: {
        NodePtr du = diff_node(n.lhs);
        if (n.exponent == 0) return make_constant(0.0);
        if (n.exponent == 1) return du;
        NodePtr reduced = n.exponent == 2 ? n.lhs : make_pow(n.lhs, n.exponent - 1);
        return mul(mul(make_constant(static_cast<double>(n.exponent)), reduced),
                   du);
      }
      case Kind::kSin:
        return mul(make_unary(Kind::kCos, n.lhs), diff_node(n.lhs));
      case Kind::kCos:
        return mul(neg(make_unary(Kind::kSin, n.lhs)), diff_node(n.lhs));
      case Kind::kExp:
        return mul(p, diff_node(n.lhs));
      case Kind::kAbs:
        return mul(make_unary(Kind::kSign, n.lhs), diff_node(n.lhs));
      case Kind::kSqrt:
        return div(diff_node(n.lhs), mul(make_constant(2.0), p));
    }
    return make_constant(0.0);
  }

  static void print_number(double v, std::string& out) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (v < 0.0 || std::signbit(v)) {
      out += '(';
      out += buf;
      out += ')';
    } else {
      out += buf;
    }
  }

  static const char* function_name(Kind k) {
    switch (k) {
      case Kind::kSin: return "sin";
      case Kind::kCos: return "cos";
      case Kind::kExp: return "exp";
      case Kind::kAbs: return "abs";
      case Kind::kSqrt: return "sqrt";
      case Kind::kSign: return "sign";
      default: return "?";
    }
  }

  static void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
      case Kind::kConstant:
        print_number(n.value, out);
        return;
      case Kind::kTime:
        out += 't';
        return;
      case Kind::kState:
        out += 'x';
        out += std::to_string(n.index + 1);
        return;
      case Kind::kNeg:
        out += "(-";
        print_node(*n.lhs, out);
        out += ')';
        return;
      case Kind::kAdd:
      case Kind::kSub:
      case Kind::kMul:
      case Kind::kDiv: {
        const char op = n.kind == Kind::kAdd   ? '+'
                        : n.kind == Kind::kSub ? '-'
                        : n.kind == Kind::kMul ? '*'
                                               : '/';
        out += '(';
        print_node(*n.lhs, out);
        out += op;
        print_node(*n.rhs, out);
        out += ')';
        return;
      }
      case Kind::kPow:
        out += '(';
        print_node(*n.lhs, out);
        out += ")^";
        out += std::to_string(n.exponent);
        return;
      default:
        out += function_name(n.kind);
        out += '(';
        print_node(*n.lhs, out);
        out += ')';
        return;
    }
  }

  NodePtr root_;

  friend class ExpressionParser;
};

/// Recursive-descent parser for the closed grammar
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' ['-'] integer)?
///   primary := number | 't' | 'x'k | func '(' expr ')' | '(' expr ')'
///   func    := sin | cos | exp | abs | sqrt
///
/// State symbols x1..xn are accepted only when state_dim >= k.
class ExpressionParser {
 public:
  ExpressionParser(std::string_view src, int state_dim)
      : src_(src), state_dim_(state_dim) {}

  Expression parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_, {"expression"});
    Expression::NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected trailing input", pos_,
                       {"operator", "end of input"});
    return Expression(std::move(e));
  }

 private:
  using Kind = Expression::Kind;
  using NodePtr = Expression::NodePtr;

  void skip_ws() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
            src_[pos_] == '\r'))
      ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }
  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = Expression::make_binary(Kind::kAdd, lhs, parse_term());
      } else if (accept('-')) {
        lhs = Expression::make_binary(Kind::kSub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expression::make_binary(Kind::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expression::make_binary(Kind::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return Expression::make_unary(Kind::kNeg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (!accept('^')) return base;
    skip_ws();
    bool negative = false;
    if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
      negative = src_[pos_] == '-';
      ++pos_;
      skip_ws();
    }
    const std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
    if (start == pos_ ||
        (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' ||
                                src_[pos_] == 'E')))
      throw ParseError("exponent must be an integer literal", start,
                       {"integer"});
    int e = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, e);
    if (ec != std::errc()) throw ParseError("exponent out of range", start, {"integer"});
    (void)ptr;
    return Expression::make_pow(std::move(base), negative ? -e : e);
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           ((src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && src_[p] >= '0' && src_[p] <= '9') {
        pos_ = p;
        while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_)
      throw ParseError("malformed number", start, {"number"});
    return Expression::make_constant(v);
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("unexpected end of input", pos_,
                       {"number", "t", "function", "("});
    const char c = src_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      if (!accept(')')) throw ParseError("unbalanced parentheses", pos_, {")"});
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      const std::string_view name = src_.substr(start, pos_ - start);
      if (name == "t") {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::kTime;
        return n;
      }
      if (name.size() > 1 && name[0] == 'x' &&
          name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
        int k = 0;
        std::from_chars(name.data() + 1, name.data() + name.size(), k);
        if (k >= 1 && k <= state_dim_) {
          auto n = std::make_shared<Expression::Node>();
          n->kind = Kind::kState;
          n->index = k - 1;
          return n;
        }
      }
      Kind fn;
      if (name == "sin") fn = Kind::kSin;
      else if (name == "cos") fn = Kind::kCos;
      else if (name == "exp") fn = Kind::kExp;
      else if (name == "abs") fn = Kind::kAbs;
      else if (name == "sqrt") fn = Kind::kSqrt;
      else
        throw ParseError("unknown identifier '" + std::string(name) + "'", start,
                         expected_identifiers());
      if (!accept('('))
        throw ParseError("function call requires parentheses", pos_, {"("});
      NodePtr arg = parse_expr();
      if (!accept(')')) throw ParseError("unbalanced parentheses", pos_, {")"});
      return Expression::make_unary(fn, std::move(arg));
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_,
                     {"number", "t", "function", "("});
  }

  std::vector<std::string> expected_identifiers() const {
    std::vector<std::string> out{"t", "sin", "cos", "exp", "abs", "sqrt"};
    if (state_dim_ > 0) out.push_back("x1..x" + std::to_string(state_dim_));
    return out;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int state_dim_;
};

/// Parses `source`. State symbols x1..x<state_dim> are accepted only for
/// perturbation maps; matrix entries and envelopes use state_dim = 0.
inline Expression parse(std::string_view source, int state_dim = 0) {
  return ExpressionParser(source, state_dim).parse();
}

inline double eval(const Expression& e, double t) { return e(t); }

inline Expression differentiate(const Expression& e) { return e.derivative(); }

}  // namespace ltvcert
