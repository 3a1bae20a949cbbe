#pragma once

#include <string>

#include "fuzzyc/lang/ast.hpp"

namespace fuzzyc::lang {

namespace detail {

inline bool needs_quotes(const std::string& name) {
  static const char* reserved[] = {"forall", "exists", "in", "not", "and", "or", "implies", "iff"};
  for (const char* word : reserved) {
    if (name == word) return true;
  }
  return false;
}

inline std::string ident(const std::string& name) { return needs_quotes(name) ? "`" + name + "`" : name; }

// Binding strength: higher binds tighter.
inline int strength(const Formula& f) {
  if (f.is<Quantified>()) return 0;
  if (!f.is<Connective>()) return 6;
  switch (f.as<Connective>().op) {
    case ConnectiveOp::Iff: return 1;
    case ConnectiveOp::Implies: return 2;
    case ConnectiveOp::Or: return 3;
    case ConnectiveOp::And: return 4;
    case ConnectiveOp::Not: return 5;
  }
  return 6;
}

}  // namespace detail

inline std::string print(const Term& t) {
  if (t.is_var()) return detail::ident(t.var().name);
  const auto& fn = t.app();
  std::string out = detail::ident(fn.symbol) + "(";
  for (std::size_t i = 0; i < fn.args.size(); ++i) {
    if (i) out += ", ";
    out += print(fn.args[i]);
  }
  return out + ")";
}

/// Renders a formula with the fewest parentheses that reparse to the same
/// tree. With `fully_parenthesized`, every connective and quantifier that is
/// not the root is wrapped.
inline std::string print(const Formula& f, bool fully_parenthesized = false) {
  using detail::strength;
  auto wrap = [&](const Formula& child, bool parens) {
    std::string s = print(child, fully_parenthesized);
    return parens ? "(" + s + ")" : s;
  };
  auto child_parens = [&](const Formula& child, int min_strength) {
    if (child.is<Quantified>()) return true;
    if (fully_parenthesized && child.is<Connective>()) return true;
    return strength(child) < min_strength;
  };

  if (f.is<Quantified>()) {
    const auto& q = f.as<Quantified>();
    std::string out = std::string(to_string(q.kind)) + " " + detail::ident(q.variable);
    if (q.domain) out += " in " + detail::ident(*q.domain);
    return out + ": " + print(*q.body, fully_parenthesized);
  }
  if (f.is<PredicateAtom>()) {
    const auto& a = f.as<PredicateAtom>();
    std::string out = detail::ident(a.symbol) + "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ", ";
      out += print(a.args[i]);
    }
    return out + ")";
  }
  if (f.is<EqualityAtom>()) {
    const auto& e = f.as<EqualityAtom>();
    return print(e.left) + " = " + print(e.right);
  }
  const auto& c = f.as<Connective>();
  const int s = strength(f);
  if (c.op == ConnectiveOp::Not) return "not " + wrap(c.children[0], child_parens(c.children[0], s));
  // and/or/iff associate to the left, implies to the right
  const bool right_assoc = c.op == ConnectiveOp::Implies;
  const bool left_parens = child_parens(c.children[0], right_assoc ? s + 1 : s);
  const bool right_parens = child_parens(c.children[1], right_assoc ? s : s + 1);
  return wrap(c.children[0], left_parens) + " " + std::string(to_string(c.op)) + " " +
         wrap(c.children[1], right_parens);
}

}  // namespace fuzzyc::lang
