#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fuzzyc/autodiff/graph.hpp"
#include "fuzzyc/error.hpp"
#include "fuzzyc/grounding/domain.hpp"
#include "fuzzyc/grounding/table.hpp"
#include "fuzzyc/models/registry.hpp"
#include "fuzzyc/models/similarity.hpp"
#include "fuzzyc/semantics/compile.hpp"
#include "fuzzyc/semantics/tnorm.hpp"

namespace fuzzyc::grounding {

using ad::Graph;
using ad::NodeId;

/// Graph nodes produced for one constraint.
struct ConstraintEval {
  NodeId truth = 0;  // truth degree over the whole table, shape [1]
  /// Truths of the body under the leading universal quantifiers, one per
  /// row of their groundings (the truth itself when there are none).
  NodeId rows = 0;
  /// Sum of log row truths, scaled by domain/batch size for every sampled
  /// variable. Present when all leading quantifiers fold with the product.
  std::optional<NodeId> log_truth;
  double log_scale = 1.0;
};

namespace detail {

using semantics::AtomSlot;
using semantics::CompiledConstraint;
using semantics::CompiledTerm;
using semantics::TemplateNode;

/// Scope-indexed batched evaluation. A value "at scope S" (a sorted list
/// of quantifier ids) has one row per combination of the index lists of
/// S, the last quantifier varying fastest.
class Evaluator {
 public:
  Evaluator(Graph& g, const CompiledConstraint& c, const GroundingTable& t, const DomainMap& domains,
            const models::ModelRegistry& registry)
      : g_(g), c_(c), t_(t), domains_(domains), registry_(registry), node_values_(c.nodes.size()) {
    if (t.indices.size() != c.plan.size()) throw Error(ErrorCode::ShapeMismatch, "grounding table does not match '" + c.name + "'");
  }

  ConstraintEval run() {
    ConstraintEval out;
    out.truth = node(c_.root, {});
    std::size_t body = c_.root;
    std::vector<std::size_t> chain;
    bool product = true;
    while (c_.nodes[body].kind == TemplateNode::Kind::Quantifier &&
           c_.plan[c_.nodes[body].quantifier].kind == semantics::QuantifierKind::Forall) {
      const auto q = c_.nodes[body].quantifier;
      chain.push_back(q);
      product = product && c_.plan[q].aggregation == semantics::TNorm::Product;
      body = c_.nodes[body].children[0];
    }
    if (chain.empty()) {
      out.rows = out.truth;
      return out;
    }
    out.rows = *node_values_[body];
    if (product) {
      double scale = 1.0;
      for (auto q : chain) {
        if (t_.sampled[q]) {
          scale *= static_cast<double>(domains_.at(c_.plan[q].domain).size()) / static_cast<double>(t_.indices[q].size());
        }
      }
      NodeId s = g_.sum(g_.log(out.rows));
      if (scale != 1.0) s = g_.mul(s, g_.scalar(scale));
      out.log_truth = s;
      out.log_scale = scale;
    }
    return out;
  }

 private:
  std::size_t rows_of(const std::vector<std::size_t>& scope) const {
    std::size_t n = 1;
    for (auto q : scope) n *= t_.indices[q].size();
    return n;
  }

  /// Re-indexes a value at scope `from` to the finer scope `to`.
  NodeId expand(NodeId value, const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
    if (from == to) return value;
    const std::size_t n = rows_of(to);
    std::vector<std::size_t> pos(to.size());
    for (std::size_t k = 0; k < to.size(); ++k) {
      auto it = std::find(from.begin(), from.end(), to[k]);
      pos[k] = it == from.end() ? from.size() : static_cast<std::size_t>(it - from.begin());
    }
    for (auto q : from) {
      if (std::find(to.begin(), to.end(), q) == to.end()) {
        throw Error(ErrorCode::ShapeMismatch, "variable '" + c_.plan[q].variable + "' used outside its quantifier");
      }
    }
    std::vector<std::size_t> src(n);
    std::vector<std::size_t> digits(to.size(), 0);
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t idx = 0;
      for (std::size_t k = 0; k < to.size(); ++k) {
        if (pos[k] < from.size()) idx = idx * t_.indices[to[k]].size() + digits[k];
      }
      src[r] = idx;
      for (std::size_t k = to.size(); k-- > 0;) {
        if (++digits[k] < t_.indices[to[k]].size()) break;
        digits[k] = 0;
      }
    }
    return g_.gather(value, std::move(src));
  }

  NodeId domain_node(const std::string& name) {
    auto it = domain_nodes_.find(name);
    if (it != domain_nodes_.end()) return it->second;
    auto d = domains_.find(name);
    if (d == domains_.end()) throw Error(ErrorCode::UnboundSymbol, "no data for domain '" + name + "'");
    const auto id = g_.constant(d->second.data);
    domain_nodes_[name] = id;
    return id;
  }

  const models::SymbolBinding& model_binding(const std::string& symbol) const {
    const auto* b = registry_.binding(symbol);
    if (!b) throw Error(ErrorCode::UnboundSymbol, "symbol '" + symbol + "' in constraint '" + c_.name + "' has no binding");
    return *b;
  }

  NodeId model_input(const std::vector<std::size_t>& args, const std::vector<std::size_t>& scope) {
    std::vector<NodeId> parts;
    for (auto a : args) parts.push_back(expand(term(a), c_.terms[a].scope, scope));
    return g_.concat(std::move(parts));
  }

  /// Term value at its own scope: [rows, element size].
  NodeId term(std::size_t id) {
    if (auto it = term_values_.find(id); it != term_values_.end()) return it->second;
    const auto& t = c_.terms[id];
    NodeId v;
    if (t.kind == CompiledTerm::Kind::Variable) {
      v = g_.gather(domain_node(c_.plan[t.quantifier].domain), t_.indices[t.quantifier]);
    } else {
      const auto& b = model_binding(t.symbol);
      if (b.kind != models::SymbolBinding::Kind::Model) {
        throw Error(ErrorCode::UnboundSymbol, "function '" + t.symbol + "' is bound to a table");
      }
      v = registry_.model(b.model)->forward(g_, model_input(t.args, t.scope));
    }
    term_values_[id] = v;
    return v;
  }

  /// Atom truths at the slot's own scope: [rows].
  NodeId slot(std::size_t id) {
    if (auto it = slot_values_.find(id); it != slot_values_.end()) return it->second;
    const auto& s = c_.slots[id];
    NodeId v;
    if (s.kind == AtomSlot::Kind::Equality) {
      v = equality(s);
    } else {
      const auto& b = model_binding(s.symbol);
      if (b.kind == models::SymbolBinding::Kind::Given) {
        v = given(s);
      } else {
        const auto out = registry_.model(b.model)->forward(g_, model_input(s.args, s.scope));
        const auto rows = g_.value(out).shape[0];
        v = b.column ? g_.column(out, *b.column) : g_.reshape(out, {rows});
      }
    }
    slot_values_[id] = v;
    return v;
  }

  NodeId equality(const AtomSlot& s) {
    const auto& left = c_.terms[s.args[0]];
    const auto& right = c_.terms[s.args[1]];
    auto before = [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
      return !a.empty() && !b.empty() && a.back() < b.front();
    };
    const std::size_t n = rows_of(s.scope);
    if (before(left.scope, right.scope)) {
      return g_.reshape(models::similarity_pairwise(g_, s.equality, term(s.args[0]), term(s.args[1])), {n});
    }
    if (before(right.scope, left.scope)) {
      // both similarities are symmetric
      return g_.reshape(models::similarity_pairwise(g_, s.equality, term(s.args[1]), term(s.args[0])), {n});
    }
    return models::similarity_rows(g_, s.equality, expand(term(s.args[0]), left.scope, s.scope),
                                   expand(term(s.args[1]), right.scope, s.scope));
  }

  NodeId given(const AtomSlot& s) {
    const auto& entry = registry_.givens().entry(s.symbol);
    std::vector<std::size_t> arg_q;
    for (auto a : s.args) {
      const auto& t = c_.terms[a];
      if (t.kind != CompiledTerm::Kind::Variable) {
        throw Error(ErrorCode::UnknownElement, "given predicate '" + s.symbol + "' applied to a computed term");
      }
      arg_q.push_back(t.quantifier);
    }
    const std::size_t n = rows_of(s.scope);
    Tensor values = Tensor::zeros({n});
    std::vector<std::size_t> digits(s.scope.size(), 0);
    std::vector<std::size_t> element(arg_q.size());
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < arg_q.size(); ++k) {
        const auto pos = static_cast<std::size_t>(std::find(s.scope.begin(), s.scope.end(), arg_q[k]) - s.scope.begin());
        element[k] = t_.indices[arg_q[k]][digits[pos]];
      }
      std::size_t flat = 0;
      for (std::size_t k = 0; k < element.size(); ++k) {
        if (element[k] >= entry.domain_sizes[k]) {
          throw Error(ErrorCode::UnknownElement, "element " + std::to_string(element[k]) + " is outside the table of '" + s.symbol + "'");
        }
        flat = flat * entry.domain_sizes[k] + element[k];
      }
      values[r] = entry.values[flat];
      for (std::size_t k = s.scope.size(); k-- > 0;) {
        if (++digits[k] < t_.indices[s.scope[k]].size()) break;
        digits[k] = 0;
      }
    }
    return g_.constant(std::move(values));
  }

  NodeId node(std::size_t id, const std::vector<std::size_t>& path) {
    const auto& n = c_.nodes[id];
    NodeId v = 0;
    switch (n.kind) {
      case TemplateNode::Kind::Slot:
        v = expand(slot(n.slot), c_.slots[n.slot].scope, path);
        break;
      case TemplateNode::Kind::Connective: {
        std::vector<NodeId> args;
        for (auto child : n.children) args.push_back(node(child, path));
        v = semantics::connective_node(g_, n.op, args, c_.tnorm);
        break;
      }
      case TemplateNode::Kind::Quantifier: {
        auto inner = path;
        inner.push_back(n.quantifier);
        const auto body = node(n.children[0], inner);
        const auto& step = c_.plan[n.quantifier];
        const auto m = g_.reshape(body, {rows_of(path), t_.indices[n.quantifier].size()});
        v = semantics::quantifier_node(g_, step.kind, m, step.aggregation);
        break;
      }
    }
    node_values_[id] = v;
    return v;
  }

  Graph& g_;
  const CompiledConstraint& c_;
  const GroundingTable& t_;
  const DomainMap& domains_;
  const models::ModelRegistry& registry_;
  std::vector<std::optional<NodeId>> node_values_;
  std::map<std::size_t, NodeId> term_values_;
  std::map<std::size_t, NodeId> slot_values_;
  std::map<std::string, NodeId> domain_nodes_;
};

}  // namespace detail

/// Builds the truth of `c` over `table` into `g`. Each distinct term and
/// atom is computed once for all rows that share its variables.
inline ConstraintEval evaluate_constraint(Graph& g, const semantics::CompiledConstraint& c, const GroundingTable& table,
                                          const DomainMap& domains, const models::ModelRegistry& registry) {
  return detail::Evaluator(g, c, table, domains, registry).run();
}

/// Convenience: a fresh graph and the scalar truth.
inline double constraint_truth(const semantics::CompiledConstraint& c, const GroundingTable& table, const DomainMap& domains,
                               const models::ModelRegistry& registry) {
  Graph g;
  const auto e = evaluate_constraint(g, c, table, domains, registry);
  return g.value(e.truth).item();
}

}  // namespace fuzzyc::grounding
