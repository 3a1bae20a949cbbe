#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "fuzzyc/autodiff/graph.hpp"
#include "fuzzyc/error.hpp"
#include "fuzzyc/tensor.hpp"

namespace fuzzyc::train {

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  struct Moments {
    Tensor first;
    Tensor second;
  };
  std::map<const ad::Parameter*, Moments> moments;
};

/// One bias-corrected Adam update of `params` with `grads` (same order).
inline void adam_step(const std::vector<ad::ParameterPtr>& params, const std::vector<Tensor>& grads, AdamState& state) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "adam: one gradient per parameter");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape != grads[i].shape) {
      throw Error(ErrorCode::ShapeMismatch, "adam: gradient of '" + params[i]->name + "' is " + shape_str(grads[i].shape) +
                                                ", parameter is " + shape_str(params[i]->value.shape));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto [it, fresh] = state.moments.try_emplace(&p);
    if (fresh) it->second = {Tensor::zeros(p.value.shape), Tensor::zeros(p.value.shape)};
    auto& m = it->second.first;
    auto& v = it->second.second;
    const auto& g = grads[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p.value[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace fuzzyc::train
