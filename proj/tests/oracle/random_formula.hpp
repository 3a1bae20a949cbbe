#pragma once

// Random closed formulas over a small fixed vocabulary, plus a matching
// world (domains, models, given tables) to evaluate them in.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fuzzyc/grounding/domain.hpp"
#include "fuzzyc/lang/ast.hpp"
#include "fuzzyc/lang/signature.hpp"
#include "fuzzyc/models/model.hpp"
#include "fuzzyc/models/registry.hpp"
#include "fuzzyc/random.hpp"

namespace oracle {

struct RandomWorld {
  fuzzyc::lang::Signature sig;
  fuzzyc::grounding::DomainMap domains;
  fuzzyc::models::ModelRegistry registry;
};

/// Domains D (3-vectors) and E (2-vectors) with at most `max_size`
/// elements each. Learnable P(D), Q(E), R(D, D), S(D, E); given G(D),
/// H(D, D), K(E); functions f: D -> D, h: E -> D.
inline RandomWorld make_world(fuzzyc::Rng& rng, std::size_t max_size = 6) {
  using namespace fuzzyc;
  using lang::PredicateKind;
  RandomWorld w;
  w.sig.add_domain("D", lang::DomainShape::vector(3));
  w.sig.add_domain("E", lang::DomainShape::vector(2));
  w.sig.add_predicate("P", {"D"}, PredicateKind::Learnable);
  w.sig.add_predicate("Q", {"E"}, PredicateKind::Learnable);
  w.sig.add_predicate("R", {"D", "D"}, PredicateKind::Learnable);
  w.sig.add_predicate("S", {"D", "E"}, PredicateKind::Learnable);
  w.sig.add_predicate("G", {"D"}, PredicateKind::Given);
  w.sig.add_predicate("H", {"D", "D"}, PredicateKind::Given);
  w.sig.add_predicate("K", {"E"}, PredicateKind::Given);
  w.sig.add_function("f", {"D"}, "D");
  w.sig.add_function("h", {"E"}, "D");

  const std::size_t nd = 1 + uniform_index(rng, max_size), ne = 1 + uniform_index(rng, max_size);
  auto fill = [&](std::size_t n, std::size_t d) {
    Tensor t = Tensor::zeros({n, d});
    for (auto& v : t.data) v = uniform(rng, -1.0, 1.0);
    return t;
  };
  w.domains["D"] = grounding::Domain("D", lang::DomainShape::vector(3), fill(nd, 3));
  w.domains["E"] = grounding::Domain("E", lang::DomainShape::vector(2), fill(ne, 2));

  auto mlp = [&](const std::string& name, std::size_t in, std::size_t out, models::Head head) {
    models::Mlp::Options o;
    o.input = in;
    o.hidden = {4};
    o.output = out;
    o.head = head;
    auto m = std::make_shared<models::Mlp>(name, o, rng);
    // spread the outputs away from 0.5
    for (const auto& p : m->params()) {
      for (auto& v : p->value.data) v = uniform(rng, -2.0, 2.0);
    }
    w.registry.add_model(m);
  };
  mlp("mP", 3, 1, models::Head::Sigmoid);
  mlp("mQ", 2, 1, models::Head::Sigmoid);
  mlp("mR", 6, 1, models::Head::Sigmoid);
  mlp("mS", 5, 2, models::Head::Softmax);
  mlp("mf", 3, 3, models::Head::Sigmoid);
  mlp("mh", 2, 3, models::Head::Linear);
  w.registry.bind("P", "mP");
  w.registry.bind("Q", "mQ");
  w.registry.bind("R", "mR");
  w.registry.bind("S", "mS", 1);
  w.registry.bind("f", "mf");
  w.registry.bind("h", "mh");

  auto& g = w.registry.givens();
  g.declare("G", {nd});
  g.declare("H", {nd, nd});
  g.declare("K", {ne});
  for (std::size_t i = 0; i < nd; ++i) {
    const std::size_t e[1] = {i};
    g.set("G", e, uniform(rng) < 0.5 ? 1.0 : 0.0);
    for (std::size_t j = 0; j < nd; ++j) {
      const std::size_t ij[2] = {i, j};
      g.set("H", ij, uniform(rng) < 0.5 ? 1.0 : 0.0);
    }
  }
  for (std::size_t i = 0; i < ne; ++i) {
    const std::size_t e[1] = {i};
    g.set("K", e, uniform(rng) < 0.5 ? 1.0 : 0.0);
  }
  for (const auto* s : {"G", "H", "K"}) w.registry.bind_given(s);
  return w;
}

/// Random closed formula of depth <= `max_depth` with 1..`max_quantifiers`
/// quantifiers over the vocabulary of make_world.
class FormulaGenerator {
 public:
  FormulaGenerator(fuzzyc::Rng& rng, std::size_t max_depth = 4, std::size_t max_quantifiers = 2)
      : rng_(rng), max_depth_(max_depth), max_quantifiers_(max_quantifiers) {}

  fuzzyc::lang::Formula next() {
    used_ = 0;
    scope_.clear();
    return quantifier(1);
  }

 private:
  using Formula = fuzzyc::lang::Formula;
  using Term = fuzzyc::lang::Term;
  struct Var {
    std::string name;
    std::string domain;
  };

  std::size_t pick(std::size_t n) { return fuzzyc::uniform_index(rng_, n); }

  Formula quantifier(std::size_t depth) {
    const std::string name = "v" + std::to_string(used_++);
    const std::string domain = pick(3) == 0 ? "E" : "D";
    const auto kind = pick(2) == 0 ? fuzzyc::lang::QuantifierKind::Forall : fuzzyc::lang::QuantifierKind::Exists;
    scope_.push_back({name, domain});
    auto body = formula(depth + 1);
    scope_.pop_back();
    // explicit domain, since a body may not mention the variable
    return fuzzyc::lang::quantified(kind, name, std::move(body), domain);
  }

  std::vector<const Var*> vars_of(const std::string& domain) const {
    std::vector<const Var*> out;
    for (const auto& v : scope_) {
      if (v.domain == domain) out.push_back(&v);
    }
    return out;
  }

  // A D-valued term: a D variable, f(D term) or h(E variable).
  std::optional<Term> d_term(int budget) {
    const auto ds = vars_of("D");
    const auto es = vars_of("E");
    std::vector<int> options;
    if (!ds.empty()) options.insert(options.end(), {0, 0});
    if (budget > 0 && !ds.empty()) options.push_back(1);
    if (!es.empty()) options.push_back(2);
    if (options.empty()) return std::nullopt;
    switch (options[pick(options.size())]) {
      case 0: return fuzzyc::lang::var(ds[pick(ds.size())]->name);
      case 1: return fuzzyc::lang::app("f", {*d_term(budget - 1)});
      default: return fuzzyc::lang::app("h", {fuzzyc::lang::var(es[pick(es.size())]->name)});
    }
  }

  std::optional<Formula> atom() {
    using namespace fuzzyc::lang;
    const auto ds = vars_of("D");
    const auto es = vars_of("E");
    std::vector<int> options;
    if (d_term(1)) options.insert(options.end(), {0, 1, 2});
    if (!es.empty()) options.insert(options.end(), {3, 4});
    if (!ds.empty()) options.insert(options.end(), {5, 6});
    if (!es.empty() && d_term(1)) options.push_back(7);
    if (options.empty()) return std::nullopt;
    switch (options[pick(options.size())]) {
      case 0: return fuzzyc::lang::atom("P", {*d_term(1)});
      case 1: return fuzzyc::lang::atom("R", {*d_term(1), *d_term(1)});
      case 2: return equals(*d_term(1), *d_term(1));
      case 3: return fuzzyc::lang::atom("Q", {var(es[pick(es.size())]->name)});
      case 4: return fuzzyc::lang::atom("K", {var(es[pick(es.size())]->name)});
      case 5: return fuzzyc::lang::atom("G", {var(ds[pick(ds.size())]->name)});
      case 6: return fuzzyc::lang::atom("H", {var(ds[pick(ds.size())]->name), var(ds[pick(ds.size())]->name)});
      default: return fuzzyc::lang::atom("S", {*d_term(1), var(es[pick(es.size())]->name)});
    }
  }

  Formula formula(std::size_t depth) {
    using fuzzyc::lang::ConnectiveOp;
    const bool can_quantify = used_ < max_quantifiers_ && depth < max_depth_;
    // scope is never empty below the root quantifier, so an atom always fits
    if (depth >= max_depth_ || pick(4) == 0) return *atom();
    if (can_quantify && pick(4) == 0) return quantifier(depth);
    static const ConnectiveOp ops[] = {ConnectiveOp::Not, ConnectiveOp::And, ConnectiveOp::Or, ConnectiveOp::Implies,
                                       ConnectiveOp::Iff};
    const auto op = ops[pick(5)];
    if (op == ConnectiveOp::Not) return fuzzyc::lang::negation(formula(depth + 1));
    auto left = formula(depth + 1);
    auto right = formula(depth + 1);
    return fuzzyc::lang::connective(op, {std::move(left), std::move(right)});
  }

  fuzzyc::Rng& rng_;
  std::size_t max_depth_;
  std::size_t max_quantifiers_;
  std::size_t used_ = 0;
  std::vector<Var> scope_;
};

}  // namespace oracle
