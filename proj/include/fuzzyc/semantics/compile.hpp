#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/ast.hpp"
#include "fuzzyc/lang/constraint_file.hpp"
#include "fuzzyc/lang/signature.hpp"
#include "fuzzyc/lang/validate.hpp"
#include "fuzzyc/semantics/tnorm.hpp"

namespace fuzzyc::semantics {

enum class EqualityKind { PixelSimilarity, SquaredExponential };

inline std::string_view to_string(EqualityKind k) {
  return k == EqualityKind::PixelSimilarity ? "pixel" : "sqexp";
}

inline EqualityKind require_equality_kind(std::string_view s) {
  if (s == "pixel" || s == "pixel_similarity") return EqualityKind::PixelSimilarity;
  if (s == "sqexp" || s == "squared_exponential") return EqualityKind::SquaredExponential;
  throw Error(ErrorCode::ConfigError, "unknown equality '" + std::string(s) + "' (pixel | sqexp)");
}

/// Chooses the fuzzy predicate that interprets `=` between two terms of a
/// domain. An empty binding resolves nothing.
struct EqualityBinding {
  std::optional<EqualityKind> fixed;
  std::map<std::string, EqualityKind> per_domain;
  bool by_shape = false;  // images -> pixel similarity, vectors -> squared exponential

  static EqualityBinding shape_defaults() {
    EqualityBinding b;
    b.by_shape = true;
    return b;
  }

  std::optional<EqualityKind> resolve(const std::string& domain, const lang::DomainShape& shape) const {
    if (fixed) return fixed;
    if (auto it = per_domain.find(domain); it != per_domain.end()) return it->second;
    if (by_shape) return shape.is_image() ? EqualityKind::PixelSimilarity : EqualityKind::SquaredExponential;
    return std::nullopt;
  }
};

struct QuantifierStep {
  std::string variable;
  std::string domain;
  QuantifierKind kind = QuantifierKind::Forall;
  TNorm aggregation = TNorm::Product;
  std::optional<std::size_t> parent;  // enclosing quantifier, if any
};

/// Hash-consed term. `scope` lists the quantifiers whose variables occur in
/// the term, in plan order.
struct CompiledTerm {
  enum class Kind { Variable, Apply };
  Kind kind = Kind::Variable;
  std::size_t quantifier = 0;  // Variable
  std::string symbol;          // Apply
  std::vector<std::size_t> args;
  std::vector<std::size_t> scope;
  std::string domain;
};

struct AtomSlot {
  enum class Kind { Predicate, Equality };
  Kind kind = Kind::Predicate;
  std::string symbol;  // predicate name; empty for equality
  std::vector<std::size_t> args;  // term ids (two for equality)
  EqualityKind equality = EqualityKind::PixelSimilarity;
  std::vector<std::size_t> scope;
};

struct TemplateNode {
  enum class Kind { Slot, Connective, Quantifier };
  Kind kind = Kind::Slot;
  std::size_t slot = 0;
  ConnectiveOp op = ConnectiveOp::And;
  std::size_t quantifier = 0;
  std::vector<std::size_t> children;
};

/// The algebraic translation of one closed formula: a template tree with
/// one slot per distinct atom, a quantifier plan in nesting (pre-)order and
/// the per-constraint weight and training group.
struct CompiledConstraint {
  std::string name;
  std::string source;
  TNorm tnorm = TNorm::Product;
  double weight = 1.0;
  std::string group = "main";
  std::map<std::string, std::string> options;

  std::vector<TemplateNode> nodes;
  std::size_t root = 0;
  std::vector<AtomSlot> slots;
  std::vector<CompiledTerm> terms;
  std::vector<QuantifierStep> plan;

  /// Enclosing quantifiers of `q` (outermost first), including `q`.
  std::vector<std::size_t> path_to(std::size_t q) const {
    std::vector<std::size_t> path;
    for (std::optional<std::size_t> cur = q; cur; cur = plan[*cur].parent) path.push_back(*cur);
    std::reverse(path.begin(), path.end());
    return path;
  }

  /// Scalar evaluation over an exhaustive grounding. `slot_value(slot,
  /// assignment)` supplies the atom truth where `assignment[q]` is the
  /// element index bound by quantifier q.
  double evaluate(const std::function<double(std::size_t, const std::vector<std::size_t>&)>& slot_value,
                  const std::function<std::size_t(const std::string&)>& domain_size) const {
    std::vector<std::size_t> assignment(plan.size(), 0);
    return eval_node(root, assignment, slot_value, domain_size);
  }

  std::string print_template() const { return print_node(root); }

  std::string print_term(std::size_t id) const {
    const auto& t = terms[id];
    if (t.kind == CompiledTerm::Kind::Variable) return plan[t.quantifier].variable;
    std::string out = t.symbol + "(";
    for (std::size_t i = 0; i < t.args.size(); ++i) out += (i ? ", " : "") + print_term(t.args[i]);
    return out + ")";
  }

  std::string print_slot(std::size_t id) const {
    const auto& s = slots[id];
    if (s.kind == AtomSlot::Kind::Equality) {
      return print_term(s.args[0]) + " = " + print_term(s.args[1]) + " [" + std::string(to_string(s.equality)) + "]";
    }
    std::string out = s.symbol + "(";
    for (std::size_t i = 0; i < s.args.size(); ++i) out += (i ? ", " : "") + print_term(s.args[i]);
    return out + ")";
  }

  std::string summary() const {
    std::ostringstream out;
    out << name << "  tnorm=" << to_string(tnorm) << " weight=" << weight << " group=" << group << "\n";
    for (std::size_t q = 0; q < plan.size(); ++q) {
      out << "  q" << q << ": " << lang::to_string(plan[q].kind) << " " << plan[q].variable << " in " << plan[q].domain
          << " (" << to_string(plan[q].aggregation) << ")\n";
    }
    for (std::size_t s = 0; s < slots.size(); ++s) out << "  s" << s << ": " << print_slot(s) << "\n";
    out << "  template: " << print_template() << "\n";
    return out.str();
  }

 private:
  double eval_node(std::size_t id, std::vector<std::size_t>& assignment,
                   const std::function<double(std::size_t, const std::vector<std::size_t>&)>& slot_value,
                   const std::function<std::size_t(const std::string&)>& domain_size) const {
    const auto& n = nodes[id];
    switch (n.kind) {
      case TemplateNode::Kind::Slot:
        return slot_value(n.slot, assignment);
      case TemplateNode::Kind::Connective: {
        std::vector<double> args;
        for (auto c : n.children) args.push_back(eval_node(c, assignment, slot_value, domain_size));
        return eval_connective(n.op, args, tnorm);
      }
      case TemplateNode::Kind::Quantifier: {
        const auto& q = plan[n.quantifier];
        std::vector<double> values;
        const std::size_t size = domain_size(q.domain);
        for (std::size_t e = 0; e < size; ++e) {
          assignment[n.quantifier] = e;
          values.push_back(eval_node(n.children[0], assignment, slot_value, domain_size));
        }
        return eval_quantifier(q.kind, values, q.aggregation);
      }
    }
    return 0.0;
  }

  std::string print_node(std::size_t id) const {
    const auto& n = nodes[id];
    switch (n.kind) {
      case TemplateNode::Kind::Slot:
        return "s" + std::to_string(n.slot);
      case TemplateNode::Kind::Connective:
        if (n.op == ConnectiveOp::Not) return "not " + print_node(n.children[0]);
        return "(" + print_node(n.children[0]) + " " + std::string(lang::to_string(n.op)) + " " +
               print_node(n.children[1]) + ")";
      case TemplateNode::Kind::Quantifier:
        return std::string(lang::to_string(plan[n.quantifier].kind)) + "[" + plan[n.quantifier].variable + "] " +
               print_node(n.children[0]);
    }
    return "";
  }
};

/// Per-constraint compilation choices.
struct CompileOptions {
  TNorm tnorm = TNorm::Product;
  std::optional<TNorm> forall;  // aggregation overrides
  std::optional<TNorm> exists;
  EqualityBinding equality = EqualityBinding::shape_defaults();
};

namespace detail {

class Compiler {
 public:
  Compiler(const lang::Signature& sig, const CompileOptions& opts, CompiledConstraint& out)
      : sig_(sig), opts_(opts), out_(out) {}

  std::size_t formula(const lang::Formula& f, std::optional<std::size_t> parent) {
    using namespace lang;
    if (f.is<Quantified>()) {
      const auto& q = f.as<Quantified>();
      if (!q.domain) throw Error(ErrorCode::DomainMismatch, "quantifier over '" + q.variable + "' is untyped", f.pos);
      QuantifierStep step;
      step.variable = q.variable;
      step.domain = *q.domain;
      step.kind = q.kind;
      const auto& override_agg = q.kind == QuantifierKind::Forall ? opts_.forall : opts_.exists;
      step.aggregation = override_agg.value_or(opts_.tnorm);
      step.parent = parent;
      out_.plan.push_back(step);
      const std::size_t qid = out_.plan.size() - 1;
      scope_.push_back({q.variable, qid});
      const std::size_t body = formula(*q.body, qid);
      scope_.pop_back();
      TemplateNode n;
      n.kind = TemplateNode::Kind::Quantifier;
      n.quantifier = qid;
      n.children = {body};
      return push(n);
    }
    if (f.is<Connective>()) {
      const auto& c = f.as<Connective>();
      TemplateNode n;
      n.kind = TemplateNode::Kind::Connective;
      n.op = c.op;
      for (const auto& child : c.children) n.children.push_back(formula(child, parent));
      return push(n);
    }
    AtomSlot slot;
    std::string key;
    if (f.is<PredicateAtom>()) {
      const auto& a = f.as<PredicateAtom>();
      slot.kind = AtomSlot::Kind::Predicate;
      slot.symbol = a.symbol;
      key = "P:" + a.symbol + "(";
      for (const auto& arg : a.args) {
        slot.args.push_back(term(arg));
        key += std::to_string(slot.args.back()) + ",";
      }
    } else {
      const auto& e = f.as<EqualityAtom>();
      slot.kind = AtomSlot::Kind::Equality;
      slot.args = {term(e.left), term(e.right)};
      const auto& domain = out_.terms[slot.args[0]].domain;
      const auto* shape = sig_.domain(domain);
      std::optional<EqualityKind> kind = shape ? opts_.equality.resolve(domain, *shape) : std::nullopt;
      if (!kind) {
        throw Error(ErrorCode::MissingEqualityBinding, "no equality semantics for domain '" + domain + "'", f.pos);
      }
      slot.equality = *kind;
      key = "E:" + std::to_string(slot.args[0]) + "=" + std::to_string(slot.args[1]) + ":" +
            std::string(to_string(*kind));
    }
    for (auto t : slot.args) merge_scope(slot.scope, out_.terms[t].scope);
    std::size_t sid;
    if (auto it = slot_ids_.find(key); it != slot_ids_.end()) {
      sid = it->second;
    } else {
      out_.slots.push_back(slot);
      sid = out_.slots.size() - 1;
      slot_ids_[key] = sid;
    }
    TemplateNode n;
    n.kind = TemplateNode::Kind::Slot;
    n.slot = sid;
    return push(n);
  }

 private:
  struct Bound {
    std::string variable;
    std::size_t quantifier;
  };

  static void merge_scope(std::vector<std::size_t>& into, const std::vector<std::size_t>& from) {
    for (auto q : from) {
      if (std::find(into.begin(), into.end(), q) == into.end()) into.push_back(q);
    }
    std::sort(into.begin(), into.end());
  }

  std::size_t term(const lang::Term& t) {
    CompiledTerm ct;
    std::string key;
    if (t.is_var()) {
      const Bound* b = nullptr;
      for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
        if (it->variable == t.var().name) {
          b = &*it;
          break;
        }
      }
      if (!b) throw Error(ErrorCode::UnboundVariable, "'" + t.var().name + "'", t.pos);
      ct.kind = CompiledTerm::Kind::Variable;
      ct.quantifier = b->quantifier;
      ct.scope = {b->quantifier};
      ct.domain = out_.plan[b->quantifier].domain;
      key = "v" + std::to_string(b->quantifier);
    } else {
      const auto& call = t.app();
      const auto* fn = sig_.function(call.symbol);
      if (!fn) throw Error(ErrorCode::UnknownSymbol, "function '" + call.symbol + "'", t.pos);
      ct.kind = CompiledTerm::Kind::Apply;
      ct.symbol = call.symbol;
      ct.domain = fn->output_domain;
      key = call.symbol + "(";
      for (const auto& arg : call.args) {
        ct.args.push_back(term(arg));
        merge_scope(ct.scope, out_.terms[ct.args.back()].scope);
        key += std::to_string(ct.args.back()) + ",";
      }
    }
    if (auto it = term_ids_.find(key); it != term_ids_.end()) return it->second;
    out_.terms.push_back(std::move(ct));
    term_ids_[key] = out_.terms.size() - 1;
    return out_.terms.size() - 1;
  }

  std::size_t push(TemplateNode n) {
    out_.nodes.push_back(std::move(n));
    return out_.nodes.size() - 1;
  }

  const lang::Signature& sig_;
  const CompileOptions& opts_;
  CompiledConstraint& out_;
  std::vector<Bound> scope_;
  std::map<std::string, std::size_t> term_ids_;
  std::map<std::string, std::size_t> slot_ids_;
};

}  // namespace detail

/// Translates a validated formula into a differentiable template. The
/// template tree mirrors the formula tree node for node.
inline CompiledConstraint compile(const lang::TypedFormula& typed, const lang::Signature& sig,
                                  const CompileOptions& opts) {
  CompiledConstraint out;
  out.tnorm = opts.tnorm;
  out.source = lang::print(typed.formula);
  out.name = "constraint";
  detail::Compiler compiler(sig, opts, out);
  out.root = compiler.formula(typed.formula, std::nullopt);
  return out;
}

inline CompiledConstraint compile(const lang::TypedFormula& typed, const lang::Signature& sig, TNorm tnorm,
                                  const EqualityBinding& equality = EqualityBinding::shape_defaults()) {
  CompileOptions opts;
  opts.tnorm = tnorm;
  opts.equality = equality;
  return compile(typed, sig, opts);
}

/// Validates and compiles one constraint-file entry. Bracket tags
/// (`tnorm`, `forall`, `exists`, `eq`) override the defaults in `base`.
inline CompiledConstraint compile(const lang::ConstraintSpec& spec, const lang::Signature& sig,
                                  CompileOptions base = {}) {
  for (const auto& [key, value] : spec.options) {
    if (key == "tnorm") {
      base.tnorm = require_tnorm(value);
    } else if (key == "forall") {
      base.forall = require_tnorm(value);
    } else if (key == "exists") {
      base.exists = require_tnorm(value);
    } else if (key == "eq") {
      base.equality.fixed = require_equality_kind(value);
    } else if (key != "mapping") {
      throw Error(ErrorCode::ConfigError, "unknown tag [" + key + "=...] on constraint " + spec.name);
    }
  }
  auto typed = lang::validate(spec.formula, sig);
  CompiledConstraint out = compile(typed, sig, base);
  out.name = spec.name;
  out.source = spec.source;
  out.weight = spec.weight;
  out.group = spec.group;
  out.options = spec.options;
  return out;
}

}  // namespace fuzzyc::semantics
