#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fuzzyc/error.hpp"

namespace fuzzyc::lang {

/// Owning pointer with value semantics (deep copy, structural equality).
template <class T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT: implicit by design of the AST builders
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

struct Term;

struct Var {
  std::string name;
  friend bool operator==(const Var&, const Var&) = default;
};

struct FunctionApp {
  std::string symbol;
  std::vector<Term> args;
  friend bool operator==(const FunctionApp&, const FunctionApp&) = default;
};

struct Term {
  std::variant<Var, FunctionApp> node;
  Position pos;

  bool is_var() const { return std::holds_alternative<Var>(node); }
  const Var& var() const { return std::get<Var>(node); }
  const FunctionApp& app() const { return std::get<FunctionApp>(node); }

  // Positions are provenance, not structure.
  friend bool operator==(const Term& a, const Term& b) { return a.node == b.node; }
};

enum class QuantifierKind { Forall, Exists };
enum class ConnectiveOp { Not, And, Or, Implies, Iff };

inline std::string_view to_string(QuantifierKind k) { return k == QuantifierKind::Forall ? "forall" : "exists"; }

inline std::string_view to_string(ConnectiveOp op) {
  switch (op) {
    case ConnectiveOp::Not: return "not";
    case ConnectiveOp::And: return "and";
    case ConnectiveOp::Or: return "or";
    case ConnectiveOp::Implies: return "implies";
    case ConnectiveOp::Iff: return "iff";
  }
  return "?";
}

inline std::size_t arity(ConnectiveOp op) { return op == ConnectiveOp::Not ? 1 : 2; }

struct Formula;

struct Quantified {
  QuantifierKind kind = QuantifierKind::Forall;
  std::string variable;
  std::optional<std::string> domain;  // explicit `in D`, or filled in by validation
  Box<Formula> body;
  friend bool operator==(const Quantified&, const Quantified&) = default;
};

struct Connective {
  ConnectiveOp op = ConnectiveOp::And;
  std::vector<Formula> children;
  friend bool operator==(const Connective&, const Connective&) = default;
};

struct PredicateAtom {
  std::string symbol;
  std::vector<Term> args;
  friend bool operator==(const PredicateAtom&, const PredicateAtom&) = default;
};

struct EqualityAtom {
  Term left;
  Term right;
  friend bool operator==(const EqualityAtom&, const EqualityAtom&) = default;
};

struct Formula {
  std::variant<PredicateAtom, EqualityAtom, Connective, Quantified> node;
  Position pos;

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(node);
  }
  template <class T>
  T& as() {
    return std::get<T>(node);
  }

  friend bool operator==(const Formula& a, const Formula& b) { return a.node == b.node; }
};

// Builders, mostly for tests and programmatic construction.
inline Term var(std::string name, Position pos = {}) { return Term{Var{std::move(name)}, pos}; }
inline Term app(std::string symbol, std::vector<Term> args, Position pos = {}) {
  return Term{FunctionApp{std::move(symbol), std::move(args)}, pos};
}
inline Formula atom(std::string symbol, std::vector<Term> args, Position pos = {}) {
  return Formula{PredicateAtom{std::move(symbol), std::move(args)}, pos};
}
inline Formula equals(Term l, Term r, Position pos = {}) { return Formula{EqualityAtom{std::move(l), std::move(r)}, pos}; }
inline Formula connective(ConnectiveOp op, std::vector<Formula> children, Position pos = {}) {
  return Formula{Connective{op, std::move(children)}, pos};
}
inline Formula negation(Formula f) {
  auto pos = f.pos;
  return connective(ConnectiveOp::Not, {std::move(f)}, pos);
}
inline Formula quantified(QuantifierKind kind, std::string variable, Formula body,
                          std::optional<std::string> domain = std::nullopt, Position pos = {}) {
  return Formula{Quantified{kind, std::move(variable), std::move(domain), Box<Formula>(std::move(body))}, pos};
}

}  // namespace fuzzyc::lang
