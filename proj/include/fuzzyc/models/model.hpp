#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fuzzyc/autodiff/graph.hpp"
#include "fuzzyc/error.hpp"
#include "fuzzyc/random.hpp"
#include "fuzzyc/tensor.hpp"

namespace fuzzyc::models {

using ad::Graph;
using ad::NodeId;
using ad::ParameterPtr;

/// A differentiable map from a batch of flat inputs [B, input_size] to a
/// batch of outputs [B, output_size].
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_size() const = 0;
  virtual std::size_t output_size() const = 0;
  virtual std::vector<ParameterPtr> params() const = 0;
  virtual NodeId forward(Graph& g, NodeId input) const = 0;

  const std::string& name() const { return name_; }

  /// Forward pass outside of training.
  Tensor apply(const Tensor& batch) const {
    Graph g;
    const auto out = forward(g, g.constant(batch));
    return g.value(out);
  }

 protected:
  explicit Model(std::string name) : name_(std::move(name)) {}

  void check_input(const Graph& g, NodeId input) const {
    const auto& v = g.value(input);
    if (v.rank() != 2 || v.shape[1] != input_size()) {
      throw Error(ErrorCode::ShapeMismatch, name_ + " expects [B, " + std::to_string(input_size()) + "], got " +
                                                shape_str(v.shape));
    }
  }

 private:
  std::string name_;
};

using ModelPtr = std::shared_ptr<Model>;

enum class Head { Sigmoid, Softmax, Linear };

inline std::string_view to_string(Head h) {
  switch (h) {
    case Head::Sigmoid: return "sigmoid";
    case Head::Softmax: return "softmax";
    case Head::Linear: return "linear";
  }
  return "?";
}

inline Head parse_head(std::string_view s) {
  if (s == "sigmoid") return Head::Sigmoid;
  if (s == "softmax") return Head::Softmax;
  if (s == "linear") return Head::Linear;
  throw Error(ErrorCode::ConfigError, "unknown head '" + std::string(s) + "' (sigmoid | softmax | linear)");
}

/// Glorot-uniform matrix [fan_in, fan_out].
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros({fan_in, fan_out});
  for (auto& v : t.data) v = uniform(rng, -limit, limit);
  return t;
}

struct Layer {
  ParameterPtr weight;  // [in, out]
  ParameterPtr bias;    // [out]
};

/// Fully connected network with leaky-ReLU hidden layers.
class Mlp : public Model {
 public:
  struct Options {
    std::size_t input = 1;
    std::vector<std::size_t> hidden = {50};
    std::size_t output = 1;
    Head head = Head::Sigmoid;
    double leaky_slope = 0.01;
  };

  Mlp(std::string name, Options opts, Rng& rng) : Model(std::move(name)), opts_(std::move(opts)) {
    if (opts_.input == 0 || opts_.output == 0) throw Error(ErrorCode::ConfigError, "mlp '" + this->name() + "' needs positive sizes");
    std::size_t fan_in = opts_.input;
    std::vector<std::size_t> widths = opts_.hidden;
    widths.push_back(opts_.output);
    for (std::size_t l = 0; l < widths.size(); ++l) {
      const std::string prefix = this->name() + ".layer" + std::to_string(l);
      layers_.push_back({std::make_shared<ad::Parameter>(prefix + ".weight", glorot_uniform(fan_in, widths[l], rng)),
                         std::make_shared<ad::Parameter>(prefix + ".bias", Tensor::zeros({widths[l]}))});
      fan_in = widths[l];
    }
  }

  std::string kind() const override { return "mlp"; }
  std::size_t input_size() const override { return opts_.input; }
  std::size_t output_size() const override { return opts_.output; }
  const Options& options() const { return opts_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::vector<ParameterPtr> params() const override {
    std::vector<ParameterPtr> out;
    for (const auto& l : layers_) {
      out.push_back(l.weight);
      out.push_back(l.bias);
    }
    return out;
  }

  /// Makes this network use `other`'s first layer (same tensors, same updates).
  void share_first_layer(const Mlp& other) {
    const auto& src = other.layers_.front();
    if (src.weight->value.shape != layers_.front().weight->value.shape) {
      throw Error(ErrorCode::ShapeMismatch, "cannot share the first layer of '" + other.name() + "' with '" + name() + "'");
    }
    layers_.front() = src;
  }

  NodeId forward(Graph& g, NodeId input) const override {
    check_input(g, input);
    NodeId h = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      h = g.bias_add(g.matmul(h, g.param(layers_[l].weight)), g.param(layers_[l].bias));
      if (l + 1 < layers_.size()) h = g.leaky_relu(h, opts_.leaky_slope);
    }
    switch (opts_.head) {
      case Head::Sigmoid: return g.sigmoid(h);
      case Head::Softmax: return g.softmax(h);
      case Head::Linear: return h;
    }
    return h;
  }

 private:
  Options opts_;
  std::vector<Layer> layers_;
};

/// Radial-basis classifier: Gaussian units exp(-|x - c_k|^2 / sigma_k^2)
/// feeding a bias-free linear layer and a softmax. Far from every centre
/// all units vanish and the memberships become uniform.
class Rbf : public Model {
 public:
  Rbf(std::string name, const Tensor& centers, std::vector<double> widths, std::size_t classes, Rng& rng)
      : Model(std::move(name)), classes_(classes) {
    if (centers.rank() != 2 || centers.shape[0] == 0) throw Error(ErrorCode::ShapeMismatch, "rbf centres must be [K, d]");
    if (widths.size() != centers.shape[0]) throw Error(ErrorCode::ShapeMismatch, "one width per rbf centre");
    Tensor inv = Tensor::zeros({widths.size()});
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (!(widths[k] > 0.0)) throw Error(ErrorCode::ConfigError, "rbf widths must be positive");
      inv[k] = 1.0 / (widths[k] * widths[k]);
    }
    centers_ = std::make_shared<ad::Parameter>(this->name() + ".centers", centers);
    inv_width_ = std::make_shared<ad::Parameter>(this->name() + ".inv_width2", std::move(inv));
    inv_width_->trainable = false;
    weight_ = std::make_shared<ad::Parameter>(this->name() + ".weight", glorot_uniform(centers.shape[0], classes, rng));
  }

  /// Centres sampled from `data` rows; width = median pairwise centre
  /// distance. `groups` lists candidate rows per class (one group when
  /// unlabeled), and `per_group` centres are drawn from each.
  static std::shared_ptr<Rbf> from_data(std::string name, const Tensor& data,
                                        const std::vector<std::vector<std::size_t>>& groups, std::size_t per_group,
                                        std::size_t classes, Rng& rng) {
    const std::size_t d = data.stride();
    std::vector<std::size_t> rows;
    for (const auto& grp : groups) {
      if (grp.empty()) throw Error(ErrorCode::EmptyDomain, "no samples to place rbf centres for '" + name + "'");
      std::vector<std::size_t> pool = grp;
      for (std::size_t k = 0; k < per_group; ++k) {
        // without replacement while the pool lasts
        if (pool.empty()) pool = grp;
        const auto pick = uniform_index(rng, pool.size());
        rows.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      }
    }
    Tensor centers = Tensor::zeros({rows.size(), d});
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::copy_n(data.row(rows[k]).begin(), d, centers.data.begin() + static_cast<std::ptrdiff_t>(k * d));
    }
    std::vector<double> dists;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
          const double diff = centers.data[i * d + p] - centers.data[j * d + p];
          s += diff * diff;
        }
        dists.push_back(std::sqrt(s));
      }
    }
    double sigma = 1.0;
    if (!dists.empty()) {
      std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2), dists.end());
      sigma = dists[dists.size() / 2];
      if (!(sigma > 0.0)) sigma = 1.0;
    }
    return std::make_shared<Rbf>(std::move(name), centers, std::vector<double>(rows.size(), sigma), classes, rng);
  }

  std::string kind() const override { return "rbf"; }
  std::size_t input_size() const override { return centers_->value.shape[1]; }
  std::size_t output_size() const override { return classes_; }
  std::size_t units() const { return centers_->value.shape[0]; }
  const ParameterPtr& centers() const { return centers_; }
  const ParameterPtr& weight() const { return weight_; }

  std::vector<ParameterPtr> params() const override { return {centers_, inv_width_, weight_}; }

  NodeId forward(Graph& g, NodeId input) const override {
    check_input(g, input);
    const auto d2 = g.sqdist(input, g.param(centers_));
    const auto act = g.exp(g.neg(g.scale_columns(d2, g.param(inv_width_))));
    return g.softmax(g.matmul(act, g.param(weight_)));
  }

 private:
  std::size_t classes_;
  ParameterPtr centers_;
  ParameterPtr inv_width_;
  ParameterPtr weight_;
};

}  // namespace fuzzyc::models
