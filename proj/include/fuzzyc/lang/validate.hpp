#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/ast.hpp"
#include "fuzzyc/lang/signature.hpp"

namespace fuzzyc::lang {

/// A closed, well-typed formula whose quantifiers all carry their domain.
struct TypedFormula {
  Formula formula;
};

namespace detail {

class Validator {
 public:
  explicit Validator(const Signature& sig) : sig_(sig) {}

  Formula run(Formula f) {
    check(f);
    return f;
  }

 private:
  struct Binding {
    std::string variable;
    std::optional<std::string> domain;  // unset until the first use fixes it
  };

  Binding* lookup(const std::string& name) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->variable == name) return &*it;
    }
    return nullptr;
  }

  void check(Formula& f) {
    if (f.is<Quantified>()) {
      auto& q = f.as<Quantified>();
      if (lookup(q.variable)) {
        throw Error(ErrorCode::ShadowedVariable, "variable '" + q.variable + "' is already bound", f.pos);
      }
      if (q.domain && !sig_.domain(*q.domain)) {
        throw Error(ErrorCode::UnknownSymbol, "domain '" + *q.domain + "'", f.pos);
      }
      scope_.push_back({q.variable, q.domain});
      check(*q.body);
      const auto inferred = scope_.back().domain;
      scope_.pop_back();
      if (!inferred) {
        throw Error(ErrorCode::DomainMismatch,
                    "cannot infer the domain of '" + q.variable + "'; write 'in <Domain>'", f.pos);
      }
      q.domain = inferred;
      return;
    }
    if (f.is<Connective>()) {
      auto& c = f.as<Connective>();
      if (c.children.size() != arity(c.op)) {
        throw Error(ErrorCode::ArityMismatch,
                    std::string(to_string(c.op)) + " expects " + std::to_string(arity(c.op)) + " operand(s), got " +
                        std::to_string(c.children.size()),
                    f.pos);
      }
      for (auto& child : c.children) check(child);
      return;
    }
    if (f.is<PredicateAtom>()) {
      const auto& a = f.as<PredicateAtom>();
      const auto* pred = sig_.predicate(a.symbol);
      if (!pred) {
        const std::string why = sig_.function(a.symbol) ? "' is a function, not a predicate" : "' is not declared";
        throw Error(ErrorCode::UnknownSymbol, "predicate '" + a.symbol + why, f.pos);
      }
      if (pred->arity() != a.args.size()) {
        throw Error(ErrorCode::ArityMismatch,
                    a.symbol + " expects " + std::to_string(pred->arity()) + ", got " + std::to_string(a.args.size()),
                    f.pos);
      }
      for (std::size_t i = 0; i < a.args.size(); ++i) check_term(a.args[i], pred->arg_domains[i]);
      return;
    }
    const auto& e = f.as<EqualityAtom>();
    auto left = check_term(e.left, std::nullopt);
    if (left) {
      check_term(e.right, left);
    } else if (auto right = check_term(e.right, std::nullopt)) {
      check_term(e.left, right);
    }
  }

  // Returns the term's domain, or nullopt for a variable not yet typed.
  std::optional<std::string> check_term(const Term& t, const std::optional<std::string>& expected) {
    std::optional<std::string> domain;
    if (t.is_var()) {
      auto* b = lookup(t.var().name);
      if (!b) throw Error(ErrorCode::UnboundVariable, "'" + t.var().name + "'", t.pos);
      if (!b->domain && expected) b->domain = expected;
      domain = b->domain;
    } else {
      const auto& call = t.app();
      const auto* fn = sig_.function(call.symbol);
      if (!fn) {
        const std::string why = sig_.predicate(call.symbol) ? "' is a predicate, not a function" : "' is not declared";
        throw Error(ErrorCode::UnknownSymbol, "function '" + call.symbol + why, t.pos);
      }
      if (fn->arity() != call.args.size()) {
        throw Error(ErrorCode::ArityMismatch,
                    call.symbol + " expects " + std::to_string(fn->arity()) + ", got " + std::to_string(call.args.size()),
                    t.pos);
      }
      for (std::size_t i = 0; i < call.args.size(); ++i) check_term(call.args[i], fn->arg_domains[i]);
      domain = fn->output_domain;
    }
    if (expected && domain && *domain != *expected) {
      throw Error(ErrorCode::DomainMismatch, "term has domain '" + *domain + "', expected '" + *expected + "'", t.pos);
    }
    return domain;
  }

  const Signature& sig_;
  std::vector<Binding> scope_;
};

}  // namespace detail

/// Checks closedness, symbol existence, arities and domains; annotates every
/// quantifier with its domain. Throws the first error found.
inline TypedFormula validate(Formula ast, const Signature& sig) {
  return TypedFormula{detail::Validator(sig).run(std::move(ast))};
}

}  // namespace fuzzyc::lang
