#pragma once

#include <cmath>

#include "fuzzyc/autodiff/graph.hpp"
#include "fuzzyc/error.hpp"
#include "fuzzyc/semantics/compile.hpp"
#include "fuzzyc/tensor.hpp"

namespace fuzzyc::models {

using semantics::EqualityKind;

/// 1 - tanh(mean_p |x_p - y_p|).
inline double pixel_similarity(const Tensor& x, const Tensor& y) {
  if (x.shape != y.shape) {
    throw Error(ErrorCode::ShapeMismatch, "pixel similarity of " + shape_str(x.shape) + " and " + shape_str(y.shape));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return 1.0 - std::tanh(s / static_cast<double>(x.size()));
}

/// exp(-|x - y|^2).
inline double sqexp_similarity(const Tensor& x, const Tensor& y) {
  if (x.shape != y.shape) {
    throw Error(ErrorCode::ShapeMismatch, "similarity of " + shape_str(x.shape) + " and " + shape_str(y.shape));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::exp(-s);
}

inline double similarity(EqualityKind kind, const Tensor& x, const Tensor& y) {
  return kind == EqualityKind::PixelSimilarity ? pixel_similarity(x, y) : sqexp_similarity(x, y);
}

/// Row-wise similarity of two [n, d] batches -> [n].
inline ad::NodeId similarity_rows(ad::Graph& g, EqualityKind kind, ad::NodeId x, ad::NodeId y) {
  const auto diff = g.sub(x, y);
  if (kind == EqualityKind::PixelSimilarity) {
    return g.sub(g.scalar(1.0), g.tanh(g.row_mean(g.abs(diff))));
  }
  return g.exp(g.neg(g.row_sum(g.mul(diff, diff))));
}

/// Similarity of every row of x [n, d] with every row of y [m, d] -> [n, m].
inline ad::NodeId similarity_pairwise(ad::Graph& g, EqualityKind kind, ad::NodeId x, ad::NodeId y) {
  if (kind == EqualityKind::PixelSimilarity) {
    return g.sub(g.scalar(1.0), g.tanh(g.pairwise_mean_abs(x, y)));
  }
  return g.exp(g.neg(g.sqdist(x, y)));
}

}  // namespace fuzzyc::models
