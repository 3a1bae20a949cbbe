#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fuzzyc/autodiff/graph.hpp"
#include "fuzzyc/error.hpp"
#include "fuzzyc/grounding/evaluate.hpp"
#include "fuzzyc/semantics/compile.hpp"
#include "fuzzyc/semantics/tnorm.hpp"

namespace fuzzyc::loss {

using ad::Graph;
using ad::NodeId;

enum class LossMapping { Linear, NegLog };

inline std::string_view to_string(LossMapping m) { return m == LossMapping::Linear ? "linear" : "neglog"; }

inline LossMapping parse_mapping(std::string_view s) {
  if (s == "linear") return LossMapping::Linear;
  if (s == "neglog" || s == "log") return LossMapping::NegLog;
  throw Error(ErrorCode::ConfigError, "unknown loss mapping '" + std::string(s) + "' (linear | neglog)");
}

/// NegLog for Product constraints, Linear otherwise.
inline LossMapping default_mapping(semantics::TNorm t) {
  return t == semantics::TNorm::Product ? LossMapping::NegLog : LossMapping::Linear;
}

/// The mapping of a compiled constraint: its `[mapping=...]` tag, else the
/// default for its t-norm.
inline LossMapping mapping_for(const semantics::CompiledConstraint& c, std::optional<LossMapping> fallback = std::nullopt) {
  if (auto it = c.options.find("mapping"); it != c.options.end()) return parse_mapping(it->second);
  return fallback.value_or(default_mapping(c.tnorm));
}

/// 1 - truth, or -log(max(truth, 1e-12)).
inline double map_loss(double truth, LossMapping m) {
  const double t = semantics::check_truth(truth);
  if (m == LossMapping::Linear) return 1.0 - t;
  return -std::log(std::max(t, ad::kLogEpsilon));
}

/// The unprotected value: -log(0) is +inf.
inline double raw_loss(double truth, LossMapping m) {
  if (m == LossMapping::Linear) return 1.0 - truth;
  return truth <= 0.0 ? std::numeric_limits<double>::infinity() : -std::log(truth);
}

inline NodeId map_loss(Graph& g, NodeId truth, LossMapping m) {
  if (m == LossMapping::Linear) return g.sub(g.scalar(1.0), truth);
  return g.neg(g.log(truth));
}

/// Uses the row-wise log sum when the evaluation provides one, which
/// avoids underflow of long products.
inline NodeId map_loss(Graph& g, const grounding::ConstraintEval& e, LossMapping m) {
  if (m == LossMapping::NegLog && e.log_truth) return g.neg(*e.log_truth);
  return map_loss(g, e.truth, m);
}

/// Sum of weight * loss.
inline double total_cost(std::span<const std::pair<double, double>> weighted) {
  double total = 0.0;
  for (const auto& [w, l] : weighted) {
    if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(w));
    total += w * l;
  }
  return total;
}

inline NodeId total_cost(Graph& g, std::span<const std::pair<double, NodeId>> weighted) {
  std::optional<NodeId> total;
  for (const auto& [w, l] : weighted) {
    if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(w));
    const auto term = w == 1.0 ? l : g.mul(g.scalar(w), l);
    total = total ? g.add(*total, term) : term;
  }
  return total ? *total : g.scalar(0.0);
}

/// One player of the (possibly adversarial) training scheme.
struct ObjectiveSpec {
  std::string name;
  std::vector<std::string> groups;
  std::vector<std::string> trainable;  // symbols whose parameters this objective updates
  double learning_rate = 1e-4;
  std::size_t steps = 1;  // optimisation steps per round
};

struct Objective {
  ObjectiveSpec spec;
  std::vector<std::size_t> constraints;  // indices into the compiled list
};

/// Assigns constraints to objectives by group. Every constraint group must
/// be claimed by some objective and every objective must receive at least
/// one constraint.
inline std::vector<Objective> partition(const std::vector<semantics::CompiledConstraint>& constraints,
                                        const std::vector<ObjectiveSpec>& specs) {
  std::set<std::string> claimed;
  for (const auto& s : specs) claimed.insert(s.groups.begin(), s.groups.end());
  for (const auto& c : constraints) {
    if (!claimed.count(c.group)) {
      throw Error(ErrorCode::UnknownGroup, "constraint '" + c.name + "' has group '" + c.group + "' which no objective trains");
    }
  }
  std::vector<Objective> out;
  for (const auto& s : specs) {
    Objective o{s, {}};
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      if (std::find(s.groups.begin(), s.groups.end(), constraints[i].group) != s.groups.end()) o.constraints.push_back(i);
    }
    if (o.constraints.empty()) throw Error(ErrorCode::EmptyObjective, "objective '" + s.name + "' has no constraints");
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace fuzzyc::loss
