#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fuzzyc/error.hpp"

namespace fuzzyc {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

/// Dense row-major tensor of doubles. A tensor with exactly one element is a
/// scalar regardless of its rank.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() : shape{}, data(1, 0.0) {}
  Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != shape_size(shape)) {
      throw Error(ErrorCode::ShapeMismatch,
                  "tensor " + shape_str(shape) + " given " + std::to_string(data.size()) + " values");
    }
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }
  static Tensor filled(Shape s, double v) {
    const auto n = shape_size(s);
    return Tensor(std::move(s), std::vector<double>(n, v));
  }
  static Tensor zeros(Shape s) { return filled(std::move(s), 0.0); }
  static Tensor vector(std::vector<double> v) {
    const auto n = v.size();
    return Tensor({n}, std::move(v));
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_scalar() const { return data.size() == 1; }

  /// Leading dimension and the element count behind each leading index.
  std::size_t lead() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t stride() const { return lead() == 0 ? 0 : data.size() / lead(); }

  double item() const { return data.at(0); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * stride(), stride());
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace fuzzyc
