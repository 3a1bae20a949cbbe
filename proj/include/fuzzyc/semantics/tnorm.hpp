#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzyc/autodiff/graph.hpp"
#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/ast.hpp"

namespace fuzzyc::semantics {

using lang::ConnectiveOp;
using lang::QuantifierKind;

enum class TNorm { Goedel, Lukasiewicz, Product };

inline std::string_view to_string(TNorm t) {
  switch (t) {
    case TNorm::Goedel: return "goedel";
    case TNorm::Lukasiewicz: return "lukasiewicz";
    case TNorm::Product: return "product";
  }
  return "?";
}

inline std::optional<TNorm> parse_tnorm(std::string_view s) {
  if (s == "goedel" || s == "godel" || s == "g") return TNorm::Goedel;
  if (s == "lukasiewicz" || s == "l") return TNorm::Lukasiewicz;
  if (s == "product" || s == "p") return TNorm::Product;
  return std::nullopt;
}

inline TNorm require_tnorm(std::string_view s) {
  if (auto t = parse_tnorm(s)) return *t;
  throw Error(ErrorCode::ConfigError, "unknown t-norm '" + std::string(s) + "' (goedel | lukasiewicz | product)");
}

inline constexpr TNorm kAllTNorms[] = {TNorm::Goedel, TNorm::Lukasiewicz, TNorm::Product};

/// Product residuum is min(1, y / max(x, eps)) off the x <= y branch.
inline constexpr double kImplicationEpsilon = 1e-7;
/// Truth values this far outside [0,1] are clamped; further is a DomainError.
inline constexpr double kTruthTolerance = 1e-9;

inline double check_truth(double v) {
  if (!(v >= -kTruthTolerance && v <= 1.0 + kTruthTolerance)) {
    throw Error(ErrorCode::DomainError, "truth value " + std::to_string(v) + " outside [0,1]");
  }
  return std::clamp(v, 0.0, 1.0);
}

namespace detail {

inline double implies(double x, double y, TNorm t) {
  switch (t) {
    case TNorm::Goedel: return x <= y ? 1.0 : y;
    case TNorm::Lukasiewicz: return std::min(1.0, 1.0 - x + y);
    case TNorm::Product: return x <= y ? 1.0 : std::min(1.0, y / std::max(x, kImplicationEpsilon));
  }
  return 0.0;
}

}  // namespace detail

/// Connective semantics of the three fundamental t-norm logics. Negation is
/// 1 - x in all of them.
inline double eval_connective(ConnectiveOp op, std::span<const double> args, TNorm t) {
  if (args.size() != lang::arity(op)) {
    throw Error(ErrorCode::ArityMismatch, std::string(lang::to_string(op)) + " expects " +
                                              std::to_string(lang::arity(op)) + " argument(s)");
  }
  const double x = check_truth(args[0]);
  if (op == ConnectiveOp::Not) return 1.0 - x;
  const double y = check_truth(args[1]);
  switch (op) {
    case ConnectiveOp::And:
      switch (t) {
        case TNorm::Goedel: return std::min(x, y);
        case TNorm::Lukasiewicz: return std::max(0.0, x + y - 1.0);
        case TNorm::Product: return x * y;
      }
      break;
    case ConnectiveOp::Or:
      switch (t) {
        case TNorm::Goedel: return std::max(x, y);
        case TNorm::Lukasiewicz: return std::min(1.0, x + y);
        case TNorm::Product: return x + y - x * y;
      }
      break;
    case ConnectiveOp::Implies:
      return detail::implies(x, y, t);
    case ConnectiveOp::Iff:
      switch (t) {
        case TNorm::Goedel: return x == y ? 1.0 : std::min(x, y);
        case TNorm::Lukasiewicz: return 1.0 - std::abs(x - y);
        case TNorm::Product: return x == y ? 1.0 : std::min(detail::implies(x, y, t), detail::implies(y, x, t));
      }
      break;
    case ConnectiveOp::Not:
      break;
  }
  return 0.0;
}

/// forall folds with the t-norm, exists with its dual t-conorm. Empty
/// forall is 1, empty exists is 0.
inline double eval_quantifier(QuantifierKind kind, std::span<const double> values, TNorm t) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) v.push_back(check_truth(x));
  const double n = static_cast<double>(v.size());
  if (kind == QuantifierKind::Forall) {
    if (v.empty()) return 1.0;
    switch (t) {
      case TNorm::Goedel: return *std::min_element(v.begin(), v.end());
      case TNorm::Product: {
        double p = 1.0;
        for (double x : v) p *= x;
        return p;
      }
      case TNorm::Lukasiewicz: {
        double s = 0.0;
        for (double x : v) s += x;
        return std::max(0.0, s - (n - 1.0));
      }
    }
  } else {
    if (v.empty()) return 0.0;
    switch (t) {
      case TNorm::Goedel: return *std::max_element(v.begin(), v.end());
      case TNorm::Product: {
        double p = 1.0;
        for (double x : v) p *= 1.0 - x;
        return 1.0 - p;
      }
      case TNorm::Lukasiewicz: {
        double s = 0.0;
        for (double x : v) s += x;
        return std::min(1.0, s);
      }
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// The same semantics as graph builders. Operands are same-shaped tensors of
// truth values (or scalars); min/max route ties to their first argument.

namespace detail {

inline ad::NodeId graph_implies(ad::Graph& g, ad::NodeId x, ad::NodeId y, TNorm t) {
  const auto one = g.scalar(1.0);
  switch (t) {
    case TNorm::Goedel:
      return g.if_le(x, y, one, y);
    case TNorm::Lukasiewicz:
      return g.min(one, g.add(g.sub(one, x), y));
    case TNorm::Product:
      return g.if_le(x, y, one, g.min(one, g.div(y, g.max(x, g.scalar(kImplicationEpsilon)))));
  }
  return one;
}

}  // namespace detail

inline ad::NodeId connective_node(ad::Graph& g, ConnectiveOp op, std::span<const ad::NodeId> args, TNorm t) {
  if (args.size() != lang::arity(op)) {
    throw Error(ErrorCode::ArityMismatch, std::string(lang::to_string(op)) + " expects " +
                                              std::to_string(lang::arity(op)) + " argument(s)");
  }
  const auto x = args[0];
  if (op == ConnectiveOp::Not) return g.sub(g.scalar(1.0), x);
  const auto y = args[1];
  switch (op) {
    case ConnectiveOp::And:
      switch (t) {
        case TNorm::Goedel: return g.min(x, y);
        case TNorm::Lukasiewicz: return g.max(g.sub(g.add(x, y), g.scalar(1.0)), g.scalar(0.0));
        case TNorm::Product: return g.mul(x, y);
      }
      break;
    case ConnectiveOp::Or:
      switch (t) {
        case TNorm::Goedel: return g.max(x, y);
        case TNorm::Lukasiewicz: return g.min(g.add(x, y), g.scalar(1.0));
        case TNorm::Product: return g.sub(g.add(x, y), g.mul(x, y));
      }
      break;
    case ConnectiveOp::Implies:
      return detail::graph_implies(g, x, y, t);
    case ConnectiveOp::Iff:
      if (t == TNorm::Lukasiewicz) return g.sub(g.scalar(1.0), g.abs(g.sub(x, y)));
      // x = y ? 1 : min{..} is the meet of both residua for Goedel and Product
      return g.min(detail::graph_implies(g, x, y, t), detail::graph_implies(g, y, x, t));
    case ConnectiveOp::Not:
      break;
  }
  return x;
}

/// Folds each row of an [rows, n] matrix of truths into one truth per row.
inline ad::NodeId quantifier_node(ad::Graph& g, QuantifierKind kind, ad::NodeId matrix, TNorm t) {
  const auto& shape = g.value(matrix).shape;
  if (shape.size() != 2) throw Error(ErrorCode::ShapeMismatch, "quantifier fold expects a matrix");
  const double n = static_cast<double>(shape[1]);
  if (kind == QuantifierKind::Forall) {
    switch (t) {
      case TNorm::Goedel: return g.row_min(matrix);
      case TNorm::Product: return g.row_prod(matrix);
      case TNorm::Lukasiewicz: return g.max(g.sub(g.row_sum(matrix), g.scalar(n - 1.0)), g.scalar(0.0));
    }
  }
  switch (t) {
    case TNorm::Goedel: return g.row_max(matrix);
    case TNorm::Product: {
      const auto one = g.scalar(1.0);
      return g.sub(one, g.row_prod(g.sub(one, matrix)));
    }
    case TNorm::Lukasiewicz: return g.min(g.row_sum(matrix), g.scalar(1.0));
  }
  return matrix;
}

}  // namespace fuzzyc::semantics
