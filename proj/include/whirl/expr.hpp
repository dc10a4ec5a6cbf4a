#pragma once

#include <cctype>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "whirl/dual.hpp"

namespace whirl {

struct ParseError : std::runtime_error {
  size_t offset;
  ParseError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

/// Expression tree over the variables {r, s, xi}.
/// Grammar (^ right-associative, binding tighter than unary minus):
///   expr    := term (('+'|'-') term)*
///   term    := factor (('*'|'/') factor)*
///   factor  := '-' factor | power
///   power   := atom ('^' factor)?
///   atom    := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
struct ExprNode {
  enum class Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind;
  double num = 0;
  std::string name;  // Var: one of r/s/xi; Call: function name
  std::vector<std::unique_ptr<ExprNode>> args;
};

using ExprPtr = std::unique_ptr<ExprNode>;

namespace expr_detail {

inline const std::vector<std::pair<std::string, int>>& functions() {
  static const std::vector<std::pair<std::string, int>> fns = {
      {"exp", 1}, {"log", 1}, {"sqrt", 1}, {"sin", 1}, {"cos", 1}, {"pow", 2}};
  return fns;
}

struct Parser {
  const std::string& src;
  size_t pos = 0;

  explicit Parser(const std::string& s) : src(s) {}

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  ExprPtr parse() {
    ExprPtr e = expr();
    skip_ws();
    if (pos != src.size()) throw ParseError("trailing input", pos);
    return e;
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (true) {
      if (eat('+'))
        lhs = binary(ExprNode::Kind::Add, std::move(lhs), term());
      else if (eat('-'))
        lhs = binary(ExprNode::Kind::Sub, std::move(lhs), term());
      else
        return lhs;
    }
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    while (true) {
      if (eat('*'))
        lhs = binary(ExprNode::Kind::Mul, std::move(lhs), factor());
      else if (eat('/'))
        lhs = binary(ExprNode::Kind::Div, std::move(lhs), factor());
      else
        return lhs;
    }
  }

  ExprPtr factor() {
    if (eat('-')) {
      auto n = std::make_unique<ExprNode>();
      n->kind = ExprNode::Kind::Neg;
      n->args.push_back(factor());
      return n;
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = atom();
    if (eat('^')) return binary(ExprNode::Kind::Pow, std::move(base), factor());
    return base;
  }

  ExprPtr atom() {
    skip_ws();
    const size_t start = pos;
    if (pos >= src.size()) throw ParseError("unexpected end of input", pos);
    const char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double val = 0;
      try {
        val = std::stod(src.substr(pos), &used);
      } catch (const std::exception&) {
        throw ParseError("malformed number", pos);
      }
      pos += used;
      auto n = std::make_unique<ExprNode>();
      n->kind = ExprNode::Kind::Num;
      n->num = val;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
        id += src[pos++];
      if (peek() == '(') {
        int arity = -1;
        for (const auto& [f, a] : functions())
          if (f == id) arity = a;
        if (arity < 0) throw ParseError("unknown function '" + id + "'", start);
        eat('(');
        auto n = std::make_unique<ExprNode>();
        n->kind = ExprNode::Kind::Call;
        n->name = id;
        n->args.push_back(expr());
        while (eat(',')) n->args.push_back(expr());
        if (!eat(')')) throw ParseError("expected ')'", pos);
        if (static_cast<int>(n->args.size()) != arity)
          throw ParseError("arity mismatch for '" + id + "'", start);
        return n;
      }
      if (id != "r" && id != "s" && id != "xi")
        throw ParseError("unknown identifier '" + id + "'", start);
      auto n = std::make_unique<ExprNode>();
      n->kind = ExprNode::Kind::Var;
      n->name = id;
      return n;
    }
    if (eat('(')) {
      ExprPtr e = expr();
      if (!eat(')')) throw ParseError("expected ')'", pos);
      return e;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos);
  }

  static ExprPtr binary(ExprNode::Kind k, ExprPtr a, ExprPtr b) {
    auto n = std::make_unique<ExprNode>();
    n->kind = k;
    n->args.push_back(std::move(a));
    n->args.push_back(std::move(b));
    return n;
  }
};

}  // namespace expr_detail

inline ExprPtr parse_expr(const std::string& src) {
  if (src.empty()) throw ParseError("empty expression", 0);
  return expr_detail::Parser(src).parse();
}

/// Fully parenthesized rendering; parse(unparse(t)) reproduces t.
inline std::string unparse(const ExprNode& n) {
  using K = ExprNode::Kind;
  std::ostringstream os;
  switch (n.kind) {
    case K::Num: {
      os.precision(17);
      os << n.num;
      break;
    }
    case K::Var:
      os << n.name;
      break;
    case K::Neg:
      os << "(-" << unparse(*n.args[0]) << ")";
      break;
    case K::Add:
      os << "(" << unparse(*n.args[0]) << " + " << unparse(*n.args[1]) << ")";
      break;
    case K::Sub:
      os << "(" << unparse(*n.args[0]) << " - " << unparse(*n.args[1]) << ")";
      break;
    case K::Mul:
      os << "(" << unparse(*n.args[0]) << " * " << unparse(*n.args[1]) << ")";
      break;
    case K::Div:
      os << "(" << unparse(*n.args[0]) << " / " << unparse(*n.args[1]) << ")";
      break;
    case K::Pow:
      os << "(" << unparse(*n.args[0]) << " ^ " << unparse(*n.args[1]) << ")";
      break;
    case K::Call: {
      os << n.name << "(";
      for (size_t i = 0; i < n.args.size(); ++i) {
        if (i) os << ", ";
        os << unparse(*n.args[i]);
      }
      os << ")";
      break;
    }
  }
  return os.str();
}

inline bool expr_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind || a.name != b.name || a.num != b.num ||
      a.args.size() != b.args.size())
    return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

/// Evaluate with any scalar supporting arithmetic plus exp/log/sqrt/sin/cos/pow.
template <class T>
T eval_expr(const ExprNode& n, const T& r, const T& s, const T& xi) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::Num:
      return T(n.num);
    case K::Var:
      return n.name == "r" ? r : (n.name == "s" ? s : xi);
    case K::Neg:
      return -eval_expr(*n.args[0], r, s, xi);
    case K::Add:
      return eval_expr(*n.args[0], r, s, xi) + eval_expr(*n.args[1], r, s, xi);
    case K::Sub:
      return eval_expr(*n.args[0], r, s, xi) - eval_expr(*n.args[1], r, s, xi);
    case K::Mul:
      return eval_expr(*n.args[0], r, s, xi) * eval_expr(*n.args[1], r, s, xi);
    case K::Div:
      return eval_expr(*n.args[0], r, s, xi) / eval_expr(*n.args[1], r, s, xi);
    case K::Pow:
      return pow(eval_expr(*n.args[0], r, s, xi), eval_expr(*n.args[1], r, s, xi));
    case K::Call: {
      const T a0 = eval_expr(*n.args[0], r, s, xi);
      if (n.name == "exp") return exp(a0);
      if (n.name == "log") return log(a0);
      if (n.name == "sqrt") return sqrt(a0);
      if (n.name == "sin") return sin(a0);
      if (n.name == "cos") return cos(a0);
      if (n.name == "pow") return pow(a0, eval_expr(*n.args[1], r, s, xi));
      throw std::logic_error("unreachable function " + n.name);
    }
  }
  throw std::logic_error("unreachable expression kind");
}

inline void free_vars(const ExprNode& n, std::vector<std::string>& out) {
  if (n.kind == ExprNode::Kind::Var) {
    for (const auto& v : out)
      if (v == n.name) return;
    out.push_back(n.name);
  }
  for (const auto& a : n.args) free_vars(*a, out);
}

}  // namespace whirl
