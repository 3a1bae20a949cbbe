#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/tensor.hpp"

namespace fuzzyc::ad {

/// A learnable tensor owned by a model. Graphs reference parameters by
/// pointer; several models may share one Parameter.
struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;  // false for fixed buffers such as RBF widths

  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}
};
using ParameterPtr = std::shared_ptr<Parameter>;

enum class Op {
  Const,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Min,
  Max,
  Log,
  Exp,
  Tanh,
  Abs,
  Sum,
  Mean,
  MatMul,
  Relu,
  LeakyRelu,
  Sigmoid,
  Softmax,
  Clamp,
  // structural ops needed by batched grounding and the model zoo
  BiasAdd,
  ScaleColumns,
  Gather,
  Concat,
  Column,
  Reshape,
  RowSum,
  RowMean,
  RowProd,
  RowMin,
  RowMax,
  SqDist,
  PairwiseMeanAbs,
  IfLe,
};

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Param: return "param";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Min: return "min";
    case Op::Max: return "max";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Tanh: return "tanh";
    case Op::Abs: return "abs";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::MatMul: return "matmul";
    case Op::Relu: return "relu";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softmax: return "softmax";
    case Op::Clamp: return "clamp";
    case Op::BiasAdd: return "bias_add";
    case Op::ScaleColumns: return "scale_columns";
    case Op::Gather: return "gather";
    case Op::Concat: return "concat";
    case Op::Column: return "column";
    case Op::Reshape: return "reshape";
    case Op::RowSum: return "row_sum";
    case Op::RowMean: return "row_mean";
    case Op::RowProd: return "row_prod";
    case Op::RowMin: return "row_min";
    case Op::RowMax: return "row_max";
    case Op::SqDist: return "sqdist";
    case Op::PairwiseMeanAbs: return "pairwise_mean_abs";
    case Op::IfLe: return "if_le";
  }
  return "?";
}

using NodeId = std::size_t;

/// Floor applied inside `log`; the value is log(max(x, kLogEpsilon)).
inline constexpr double kLogEpsilon = 1e-12;

struct Node {
  Op op = Op::Const;
  std::vector<NodeId> inputs;
  Tensor value;
  Tensor grad;
  double a = 0.0;  // clamp lower bound, leaky slope, log floor
  double b = 0.0;  // clamp upper bound
  std::vector<std::size_t> index;  // gather rows, column index, reshape target
  ParameterPtr param;
  bool needs_grad = false;
};

struct ParamGrad {
  ParameterPtr param;
  Tensor grad;
};

/// Append-only reverse-mode computation graph. Values are computed eagerly
/// when a node is appended; `forward()` recomputes every node from the
/// current constant and parameter values.
class Graph {
 public:
  static constexpr std::size_t kDefaultBudget = std::size_t{1} << 20;

  explicit Graph(std::size_t max_nodes = kDefaultBudget) : max_nodes_(max_nodes) {}

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  const Tensor& grad(NodeId id) const { return nodes_.at(id).grad; }

  NodeId constant(Tensor t) {
    Node n;
    n.op = Op::Const;
    n.value = std::move(t);
    return push(std::move(n), false);
  }
  NodeId scalar(double v) { return constant(Tensor::scalar(v)); }

  /// Each parameter maps to exactly one node per graph.
  NodeId param(const ParameterPtr& p) {
    for (auto id : param_nodes_) {
      if (nodes_[id].param == p) return id;
    }
    Node n;
    n.op = Op::Param;
    n.param = p;
    const auto id = push(std::move(n));
    param_nodes_.push_back(id);
    return id;
  }

  NodeId add(NodeId x, NodeId y) { return binary(Op::Add, x, y); }
  NodeId sub(NodeId x, NodeId y) { return binary(Op::Sub, x, y); }
  NodeId mul(NodeId x, NodeId y) { return binary(Op::Mul, x, y); }
  NodeId div(NodeId x, NodeId y) { return binary(Op::Div, x, y); }
  NodeId min(NodeId x, NodeId y) { return binary(Op::Min, x, y); }
  NodeId max(NodeId x, NodeId y) { return binary(Op::Max, x, y); }
  NodeId neg(NodeId x) { return unary(Op::Neg, x); }
  NodeId log(NodeId x) { return unary(Op::Log, x, kLogEpsilon); }
  NodeId exp(NodeId x) { return unary(Op::Exp, x); }
  NodeId tanh(NodeId x) { return unary(Op::Tanh, x); }
  NodeId abs(NodeId x) { return unary(Op::Abs, x); }
  NodeId sum(NodeId x) { return unary(Op::Sum, x); }
  NodeId mean(NodeId x) { return unary(Op::Mean, x); }
  NodeId relu(NodeId x) { return unary(Op::Relu, x); }
  NodeId leaky_relu(NodeId x, double slope = 0.01) { return unary(Op::LeakyRelu, x, slope); }
  NodeId sigmoid(NodeId x) { return unary(Op::Sigmoid, x); }
  NodeId softmax(NodeId x) { return unary(Op::Softmax, x); }
  NodeId clamp(NodeId x, double lo, double hi) { return unary(Op::Clamp, x, lo, hi); }
  NodeId row_sum(NodeId x) { return unary(Op::RowSum, x); }
  NodeId row_mean(NodeId x) { return unary(Op::RowMean, x); }
  NodeId row_prod(NodeId x) { return unary(Op::RowProd, x); }
  NodeId row_min(NodeId x) { return unary(Op::RowMin, x); }
  NodeId row_max(NodeId x) { return unary(Op::RowMax, x); }

  NodeId matmul(NodeId x, NodeId y) { return binary(Op::MatMul, x, y); }
  NodeId bias_add(NodeId m, NodeId bias) { return binary(Op::BiasAdd, m, bias); }
  NodeId scale_columns(NodeId m, NodeId scale) { return binary(Op::ScaleColumns, m, scale); }
  NodeId sqdist(NodeId x, NodeId y) { return binary(Op::SqDist, x, y); }
  NodeId pairwise_mean_abs(NodeId x, NodeId y) { return binary(Op::PairwiseMeanAbs, x, y); }

  /// Elementwise `x <= y ? then : otherwise`; no gradient reaches x or y.
  NodeId if_le(NodeId x, NodeId y, NodeId then, NodeId otherwise) {
    Node n;
    n.op = Op::IfLe;
    n.inputs = {x, y, then, otherwise};
    return push(std::move(n));
  }

  NodeId gather(NodeId x, std::vector<std::size_t> rows) {
    Node n;
    n.op = Op::Gather;
    n.inputs = {x};
    n.index = std::move(rows);
    return push(std::move(n));
  }

  NodeId concat(std::vector<NodeId> parts) {
    if (parts.size() == 1) return parts.front();
    Node n;
    n.op = Op::Concat;
    n.inputs = std::move(parts);
    return push(std::move(n));
  }

  NodeId column(NodeId x, std::size_t j) {
    Node n;
    n.op = Op::Column;
    n.inputs = {x};
    n.index = {j};
    return push(std::move(n));
  }

  NodeId reshape(NodeId x, Shape shape) {
    Node n;
    n.op = Op::Reshape;
    n.inputs = {x};
    n.index = std::move(shape);
    return push(std::move(n));
  }

  /// Recomputes every node in insertion order.
  void forward() {
    branches_.clear();
    for (NodeId id = 0; id < nodes_.size(); ++id) compute(id);
  }

  /// Records the discrete branch taken by every non-smooth op during the
  /// next `forward()` (used by the gradient checker).
  void set_record_branches(bool on) { record_branches_ = on; }
  const std::vector<std::uint64_t>& branch_signature() const { return branches_; }

  void backward(NodeId seed) {
    if (seed >= nodes_.size()) throw Error(ErrorCode::SeedNotScalar, "unknown seed node");
    if (!nodes_[seed].value.is_scalar()) {
      throw Error(ErrorCode::SeedNotScalar,
                  "seed node " + std::to_string(seed) + " has shape " + shape_str(nodes_[seed].value.shape));
    }
    for (auto& n : nodes_) {
      if (n.needs_grad) {
        n.grad = Tensor::zeros(n.value.shape);
      } else {
        n.grad = Tensor();
        n.grad.data.clear();
      }
    }
    if (!nodes_[seed].needs_grad) return;
    nodes_[seed].grad.data[0] = 1.0;
    for (NodeId id = seed + 1; id-- > 0;) {
      if (nodes_[id].needs_grad) propagate(id);
    }
  }

  /// Gradients of every parameter node after `backward()`, in node order.
  std::vector<ParamGrad> param_grads() const {
    std::vector<ParamGrad> out;
    for (auto id : param_nodes_) {
      const auto& n = nodes_[id];
      Tensor g = n.grad.data.empty() ? Tensor::zeros(n.value.shape) : n.grad;
      out.push_back({n.param, std::move(g)});
    }
    return out;
  }

  const std::vector<NodeId>& param_nodes() const { return param_nodes_; }

 private:
  NodeId unary(Op op, NodeId x, double a = 0.0, double b = 0.0) {
    Node n;
    n.op = op;
    n.inputs = {x};
    n.a = a;
    n.b = b;
    return push(std::move(n));
  }

  NodeId binary(Op op, NodeId x, NodeId y) {
    Node n;
    n.op = op;
    n.inputs = {x, y};
    return push(std::move(n));
  }

  NodeId push(Node n, bool compute_now = true) {
    if (nodes_.size() >= max_nodes_) {
      throw Error(ErrorCode::GraphBudgetExceeded, "node budget " + std::to_string(max_nodes_) + " exhausted");
    }
    for (auto in : n.inputs) {
      if (in >= nodes_.size()) throw Error(ErrorCode::ShapeMismatch, "input node does not exist");
      n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
    }
    if (n.op == Op::Param) n.needs_grad = true;
    if (n.op == Op::IfLe) n.needs_grad = nodes_[n.inputs[2]].needs_grad || nodes_[n.inputs[3]].needs_grad;
    nodes_.push_back(std::move(n));
    const NodeId id = nodes_.size() - 1;
    if (compute_now) {
      try {
        compute(id);
      } catch (...) {
        nodes_.pop_back();
        throw;
      }
    }
    return id;
  }

  void branch(std::uint64_t v) {
    if (record_branches_) branches_.push_back(v);
  }

  [[noreturn]] void shape_error(NodeId id, const std::string& what) const {
    throw Error(ErrorCode::ShapeMismatch, "node " + std::to_string(id) + " (" + std::string(op_name(nodes_[id].op)) + "): " + what);
  }

  // one-element operands broadcast; among two of them the higher rank wins
  static const Shape& broadcast_shape(const Tensor& x, const Tensor& y) {
    if (x.is_scalar() && (!y.is_scalar() || y.rank() > x.rank())) return y.shape;
    return x.shape;
  }

  void require_matrix(NodeId id, const Tensor& t) const {
    if (t.rank() != 2) shape_error(id, "expected a matrix, got " + shape_str(t.shape));
  }

  void compute(NodeId id) {
    Node& n = nodes_[id];
    auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };
    switch (n.op) {
      case Op::Const:
        break;
      case Op::Param:
        n.value = n.param->value;
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Min:
      case Op::Max: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        if (x.shape != y.shape && !x.is_scalar() && !y.is_scalar()) {
          shape_error(id, shape_str(x.shape) + " vs " + shape_str(y.shape));
        }
        Tensor out = Tensor::zeros(broadcast_shape(x, y));
        const bool sx = x.is_scalar(), sy = y.is_scalar();
        auto zip = [&](auto f) {
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(sx ? x[0] : x[i], sy ? y[0] : y[i]);
        };
        switch (n.op) {
          case Op::Add: zip([](double a, double b) { return a + b; }); break;
          case Op::Sub: zip([](double a, double b) { return a - b; }); break;
          case Op::Mul: zip([](double a, double b) { return a * b; }); break;
          case Op::Div: zip([](double a, double b) { return a / b; }); break;
          case Op::Min: zip([](double a, double b) { return a <= b ? a : b; }); break;
          case Op::Max: zip([](double a, double b) { return a >= b ? a : b; }); break;
          default: break;
        }
        if (record_branches_ && (n.op == Op::Min || n.op == Op::Max)) {
          for (std::size_t i = 0; i < out.size(); ++i) {
            const double a = sx ? x[0] : x[i], b = sy ? y[0] : y[i];
            branch(n.op == Op::Min ? a <= b : a >= b);
          }
        }
        n.value = std::move(out);
        break;
      }
      case Op::Neg:
      case Op::Log:
      case Op::Exp:
      case Op::Tanh:
      case Op::Abs:
      case Op::Relu:
      case Op::LeakyRelu:
      case Op::Sigmoid:
      case Op::Clamp: {
        Tensor out = in(0);
        for (auto& v : out.data) {
          switch (n.op) {
            case Op::Neg: v = -v; break;
            case Op::Log: branch(v >= n.a); v = std::log(std::max(v, n.a)); break;
            case Op::Exp: v = std::exp(v); break;
            case Op::Tanh: v = std::tanh(v); break;
            case Op::Abs: branch(v > 0 ? 2 : (v < 0 ? 0 : 1)); v = std::abs(v); break;
            case Op::Relu: branch(v > 0); v = v > 0 ? v : 0.0; break;
            case Op::LeakyRelu: branch(v > 0); v = v > 0 ? v : n.a * v; break;
            case Op::Sigmoid:
              v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
              break;
            case Op::Clamp:
              branch(v < n.a ? 0 : (v > n.b ? 2 : 1));
              v = std::clamp(v, n.a, n.b);
              break;
            default: break;
          }
        }
        n.value = std::move(out);
        break;
      }
      case Op::Sum:
      case Op::Mean: {
        const Tensor& x = in(0);
        double s = 0.0;
        for (double v : x.data) s += v;
        if (n.op == Op::Mean) s /= static_cast<double>(x.size());
        n.value = Tensor::scalar(s);
        break;
      }
      case Op::MatMul: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        require_matrix(id, x);
        require_matrix(id, y);
        const std::size_t r = x.shape[0], k = x.shape[1], c = y.shape[1];
        if (y.shape[0] != k) shape_error(id, shape_str(x.shape) + " x " + shape_str(y.shape));
        Tensor out = Tensor::zeros({r, c});
        for (std::size_t i = 0; i < r; ++i) {
          double* orow = &out.data[i * c];
          for (std::size_t p = 0; p < k; ++p) {
            const double xv = x.data[i * k + p];
            if (xv == 0.0) continue;
            const double* yrow = &y.data[p * c];
            for (std::size_t j = 0; j < c; ++j) orow[j] += xv * yrow[j];
          }
        }
        n.value = std::move(out);
        break;
      }
      case Op::Softmax: {
        Tensor out = in(0);
        const std::size_t c = out.shape.empty() ? 1 : out.shape.back();
        for (std::size_t base = 0; base < out.size(); base += c) {
          double m = -std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < c; ++j) m = std::max(m, out[base + j]);
          double z = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            out[base + j] = std::exp(out[base + j] - m);
            z += out[base + j];
          }
          for (std::size_t j = 0; j < c; ++j) out[base + j] /= z;
        }
        n.value = std::move(out);
        break;
      }
      case Op::BiasAdd:
      case Op::ScaleColumns: {
        const Tensor& x = in(0);
        const Tensor& v = in(1);
        require_matrix(id, x);
        const std::size_t c = x.shape[1];
        if (v.size() != c) shape_error(id, "vector of " + std::to_string(v.size()) + " for " + shape_str(x.shape));
        Tensor out = x;
        for (std::size_t i = 0; i < out.size(); ++i) {
          if (n.op == Op::BiasAdd) {
            out[i] += v[i % c];
          } else {
            out[i] *= v[i % c];
          }
        }
        n.value = std::move(out);
        break;
      }
      case Op::Gather: {
        const Tensor& x = in(0);
        if (x.rank() == 0) shape_error(id, "cannot gather from a rank-0 tensor");
        const std::size_t stride = x.stride();
        Shape shape = x.shape;
        shape[0] = n.index.size();
        Tensor out = Tensor::zeros(shape);
        for (std::size_t r = 0; r < n.index.size(); ++r) {
          if (n.index[r] >= x.shape[0]) shape_error(id, "row index out of range");
          std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(n.index[r] * stride), stride,
                      out.data.begin() + static_cast<std::ptrdiff_t>(r * stride));
        }
        n.value = std::move(out);
        break;
      }
      case Op::Concat: {
        std::size_t rows = 0, width = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          require_matrix(id, in(k));
          if (k == 0) rows = in(k).shape[0];
          if (in(k).shape[0] != rows) shape_error(id, "row counts differ");
          width += in(k).shape[1];
        }
        Tensor out = Tensor::zeros({rows, width});
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Tensor& part = in(k);
          const std::size_t w = part.shape[1];
          for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(part.data.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                        out.data.begin() + static_cast<std::ptrdiff_t>(r * width + off));
          }
          off += w;
        }
        n.value = std::move(out);
        break;
      }
      case Op::Column: {
        const Tensor& x = in(0);
        require_matrix(id, x);
        const std::size_t c = x.shape[1], j = n.index.at(0);
        if (j >= c) shape_error(id, "column out of range");
        Tensor out = Tensor::zeros({x.shape[0]});
        for (std::size_t r = 0; r < x.shape[0]; ++r) out[r] = x.data[r * c + j];
        n.value = std::move(out);
        break;
      }
      case Op::Reshape: {
        if (shape_size(n.index) != in(0).size()) {
          shape_error(id, shape_str(in(0).shape) + " -> " + shape_str(n.index));
        }
        n.value = Tensor(n.index, in(0).data);
        break;
      }
      case Op::RowSum:
      case Op::RowMean:
      case Op::RowProd:
      case Op::RowMin:
      case Op::RowMax: {
        const Tensor& x = in(0);
        require_matrix(id, x);
        const std::size_t rows = x.shape[0], c = x.shape[1];
        Tensor out = Tensor::zeros({rows});
        for (std::size_t r = 0; r < rows; ++r) {
          const double* p = &x.data[r * c];
          double acc = 0.0;
          switch (n.op) {
            case Op::RowSum:
            case Op::RowMean:
              for (std::size_t j = 0; j < c; ++j) acc += p[j];
              if (n.op == Op::RowMean) acc /= static_cast<double>(c);
              break;
            case Op::RowProd:
              acc = 1.0;
              for (std::size_t j = 0; j < c; ++j) acc *= p[j];
              break;
            case Op::RowMin:
            case Op::RowMax: {
              if (c == 0) shape_error(id, "empty row");
              std::size_t best = 0;
              for (std::size_t j = 1; j < c; ++j) {
                if (n.op == Op::RowMin ? p[j] < p[best] : p[j] > p[best]) best = j;
              }
              branch(best);
              acc = p[best];
              break;
            }
            default: break;
          }
          out[r] = acc;
        }
        n.value = std::move(out);
        break;
      }
      case Op::SqDist:
      case Op::PairwiseMeanAbs: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        require_matrix(id, x);
        require_matrix(id, y);
        const std::size_t d = x.shape[1];
        if (y.shape[1] != d) shape_error(id, shape_str(x.shape) + " vs " + shape_str(y.shape));
        const std::size_t rx = x.shape[0], ry = y.shape[0];
        Tensor out = Tensor::zeros({rx, ry});
        for (std::size_t i = 0; i < rx; ++i) {
          const double* a = &x.data[i * d];
          for (std::size_t j = 0; j < ry; ++j) {
            const double* b = &y.data[j * d];
            double acc = 0.0;
            if (n.op == Op::SqDist) {
              for (std::size_t k = 0; k < d; ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
            } else {
              // four partial sums so the loop vectorises
              double part[4] = {0.0, 0.0, 0.0, 0.0};
              std::size_t k = 0;
              for (; k + 4 <= d; k += 4) {
                for (std::size_t u = 0; u < 4; ++u) part[u] += std::abs(a[k + u] - b[k + u]);
              }
              for (; k < d; ++k) part[0] += std::abs(a[k] - b[k]);
              acc = (part[0] + part[1]) + (part[2] + part[3]);
              if (record_branches_) {
                for (std::size_t k = 0; k < d; ++k) branch(a[k] > b[k] ? 2 : (a[k] < b[k] ? 0 : 1));
              }
              acc /= static_cast<double>(d);
            }
            out[i * ry + j] = acc;
          }
        }
        n.value = std::move(out);
        break;
      }
      case Op::IfLe: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        const Tensor& t = in(2);
        const Tensor& f = in(3);
        const Shape* shape = &x.shape;
        for (const Tensor* p : {&x, &y, &t, &f}) {
          if (!p->is_scalar() || (shape_size(*shape) == 1 && p->rank() > shape->size())) shape = &p->shape;
        }
        const std::size_t sz = shape_size(*shape);
        for (const Tensor* p : {&x, &y, &t, &f}) {
          if (!p->is_scalar() && p->size() != sz) shape_error(id, "operand shapes differ");
        }
        Tensor out = Tensor::zeros(*shape);
        auto at = [](const Tensor& v, std::size_t i) { return v.is_scalar() ? v[0] : v[i]; };
        for (std::size_t i = 0; i < sz; ++i) {
          const bool le = at(x, i) <= at(y, i);
          branch(le);
          out[i] = le ? at(t, i) : at(f, i);
        }
        n.value = std::move(out);
        break;
      }
    }
    for (double v : n.value.data) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteValue,
                    "node " + std::to_string(id) + " (" + std::string(op_name(n.op)) + ") produced a non-finite value");
      }
    }
  }

  // Adds `g` (shaped like the output) into input k, reducing when k was broadcast.
  void accumulate(NodeId target, std::size_t i, double g) {
    Node& t = nodes_[target];
    if (!t.needs_grad) return;
    if (t.grad.size() == 1) {
      t.grad.data[0] += g;
    } else {
      t.grad.data[i] += g;
    }
  }

  void propagate(NodeId id) {
    const Node& n = nodes_[id];
    const Tensor& g = n.grad;
    auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };
    auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].needs_grad; };
    auto gin = [&](std::size_t k) -> Tensor& { return nodes_[n.inputs[k]].grad; };

    switch (n.op) {
      case Op::Const:
      case Op::Param:
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Min:
      case Op::Max: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        const bool sx = x.is_scalar(), sy = y.is_scalar();
        const NodeId ix = n.inputs[0], iy = n.inputs[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double a = sx ? x[0] : x[i];
          const double b = sy ? y[0] : y[i];
          switch (n.op) {
            case Op::Add: accumulate(ix, i, gi); accumulate(iy, i, gi); break;
            case Op::Sub: accumulate(ix, i, gi); accumulate(iy, i, -gi); break;
            case Op::Mul: accumulate(ix, i, gi * b); accumulate(iy, i, gi * a); break;
            case Op::Div: accumulate(ix, i, gi / b); accumulate(iy, i, -gi * a / (b * b)); break;
            case Op::Min: accumulate(a <= b ? ix : iy, i, gi); break;
            case Op::Max: accumulate(a >= b ? ix : iy, i, gi); break;
            default: break;
          }
        }
        break;
      }
      case Op::Neg:
      case Op::Log:
      case Op::Exp:
      case Op::Tanh:
      case Op::Abs:
      case Op::Relu:
      case Op::LeakyRelu:
      case Op::Sigmoid:
      case Op::Clamp: {
        const Tensor& x = in(0);
        const Tensor& y = n.value;
        Tensor& gx = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double v = x[i];
          double d = 0.0;
          switch (n.op) {
            case Op::Neg: d = -1.0; break;
            case Op::Log: d = v >= n.a ? 1.0 / v : 0.0; break;
            case Op::Exp: d = y[i]; break;
            case Op::Tanh: d = 1.0 - y[i] * y[i]; break;
            case Op::Abs: d = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); break;
            case Op::Relu: d = v > 0 ? 1.0 : 0.0; break;
            case Op::LeakyRelu: d = v > 0 ? 1.0 : n.a; break;
            case Op::Sigmoid: d = y[i] * (1.0 - y[i]); break;
            case Op::Clamp: d = (v >= n.a && v <= n.b) ? 1.0 : 0.0; break;
            default: break;
          }
          gx[i] += gi * d;
        }
        break;
      }
      case Op::Sum:
      case Op::Mean: {
        Tensor& gx = gin(0);
        const double scale = n.op == Op::Mean ? 1.0 / static_cast<double>(gx.size()) : 1.0;
        for (auto& v : gx.data) v += g[0] * scale;
        break;
      }
      case Op::MatMul: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        const std::size_t r = x.shape[0], k = x.shape[1], c = y.shape[1];
        if (wants(0)) {
          Tensor& gx = gin(0);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < c; ++j) acc += g.data[i * c + j] * y.data[p * c + j];
              gx.data[i * k + p] += acc;
            }
          }
        }
        if (wants(1)) {
          Tensor& gy = gin(1);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double xv = x.data[i * k + p];
              if (xv == 0.0) continue;
              for (std::size_t j = 0; j < c; ++j) gy.data[p * c + j] += xv * g.data[i * c + j];
            }
          }
        }
        break;
      }
      case Op::Softmax: {
        const Tensor& y = n.value;
        Tensor& gx = gin(0);
        const std::size_t c = y.shape.empty() ? 1 : y.shape.back();
        for (std::size_t base = 0; base < y.size(); base += c) {
          double dot = 0.0;
          for (std::size_t j = 0; j < c; ++j) dot += g[base + j] * y[base + j];
          for (std::size_t j = 0; j < c; ++j) gx[base + j] += y[base + j] * (g[base + j] - dot);
        }
        break;
      }
      case Op::BiasAdd:
      case Op::ScaleColumns: {
        const Tensor& x = in(0);
        const Tensor& v = in(1);
        const std::size_t c = x.shape[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double gi = g[i];
          if (n.op == Op::BiasAdd) {
            if (wants(0)) gin(0)[i] += gi;
            if (wants(1)) gin(1)[i % c] += gi;
          } else {
            if (wants(0)) gin(0)[i] += gi * v[i % c];
            if (wants(1)) gin(1)[i % c] += gi * x[i];
          }
        }
        break;
      }
      case Op::Gather: {
        Tensor& gx = gin(0);
        const std::size_t stride = in(0).stride();
        for (std::size_t r = 0; r < n.index.size(); ++r) {
          const std::size_t src = n.index[r] * stride;
          for (std::size_t k = 0; k < stride; ++k) gx[src + k] += g[r * stride + k];
        }
        break;
      }
      case Op::Concat: {
        const std::size_t rows = g.shape[0], width = g.shape[1];
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const std::size_t w = in(k).shape[1];
          if (wants(k)) {
            Tensor& gp = gin(k);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < w; ++j) gp[r * w + j] += g[r * width + off + j];
            }
          }
          off += w;
        }
        break;
      }
      case Op::Column: {
        Tensor& gx = gin(0);
        const std::size_t c = in(0).shape[1], j = n.index[0];
        for (std::size_t r = 0; r < g.size(); ++r) gx[r * c + j] += g[r];
        break;
      }
      case Op::Reshape: {
        Tensor& gx = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        break;
      }
      case Op::RowSum:
      case Op::RowMean:
      case Op::RowProd:
      case Op::RowMin:
      case Op::RowMax: {
        const Tensor& x = in(0);
        Tensor& gx = gin(0);
        const std::size_t rows = x.shape[0], c = x.shape[1];
        std::vector<double> prefix, suffix;
        for (std::size_t r = 0; r < rows; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          const double* p = &x.data[r * c];
          double* q = &gx.data[r * c];
          switch (n.op) {
            case Op::RowSum:
              for (std::size_t j = 0; j < c; ++j) q[j] += gr;
              break;
            case Op::RowMean:
              for (std::size_t j = 0; j < c; ++j) q[j] += gr / static_cast<double>(c);
              break;
            case Op::RowProd: {
              // product of the other entries, exact in the presence of zeros
              prefix.assign(c + 1, 1.0);
              suffix.assign(c + 1, 1.0);
              for (std::size_t j = 0; j < c; ++j) prefix[j + 1] = prefix[j] * p[j];
              for (std::size_t j = c; j-- > 0;) suffix[j] = suffix[j + 1] * p[j];
              for (std::size_t j = 0; j < c; ++j) q[j] += gr * prefix[j] * suffix[j + 1];
              break;
            }
            case Op::RowMin:
            case Op::RowMax: {
              std::size_t best = 0;
              for (std::size_t j = 1; j < c; ++j) {
                if (n.op == Op::RowMin ? p[j] < p[best] : p[j] > p[best]) best = j;
              }
              q[best] += gr;
              break;
            }
            default: break;
          }
        }
        break;
      }
      case Op::SqDist:
      case Op::PairwiseMeanAbs: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        const std::size_t d = x.shape[1], rx = x.shape[0], ry = y.shape[0];
        const bool wx = wants(0), wy = wants(1);
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t i = 0; i < rx; ++i) {
          const double* a = &x.data[i * d];
          for (std::size_t j = 0; j < ry; ++j) {
            const double gij = g[i * ry + j];
            if (gij == 0.0) continue;
            const double* b = &y.data[j * d];
            for (std::size_t k = 0; k < d; ++k) {
              const double diff = a[k] - b[k];
              const double dk = n.op == Op::SqDist ? 2.0 * diff
                                                   : (diff > 0 ? inv_d : (diff < 0 ? -inv_d : 0.0));
              if (wx) gin(0)[i * d + k] += gij * dk;
              if (wy) gin(1)[j * d + k] -= gij * dk;
            }
          }
        }
        break;
      }
      case Op::IfLe: {
        const Tensor& x = in(0);
        const Tensor& y = in(1);
        auto at = [](const Tensor& v, std::size_t i) { return v.is_scalar() ? v[0] : v[i]; };
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (g[i] == 0.0) continue;
          accumulate(at(x, i) <= at(y, i) ? n.inputs[2] : n.inputs[3], i, g[i]);
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<NodeId> param_nodes_;
  std::vector<std::uint64_t> branches_;
  std::size_t max_nodes_;
  bool record_branches_ = false;
};

}  // namespace fuzzyc::ad
