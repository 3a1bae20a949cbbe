#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/signature.hpp"
#include "fuzzyc/models/given.hpp"
#include "fuzzyc/models/model.hpp"

namespace fuzzyc::models {

/// What a predicate or function symbol evaluates to.
struct SymbolBinding {
  enum class Kind { Model, Given };
  Kind kind = Kind::Model;
  std::string model;
  std::optional<std::size_t> column;  // one output of a multi-output model
};

/// Models, symbol bindings and given tables of one training setup.
class ModelRegistry {
 public:
  void add_model(ModelPtr m) {
    const auto name = m->name();
    if (models_.count(name)) throw Error(ErrorCode::ConfigError, "model '" + name + "' defined twice");
    models_[name] = std::move(m);
  }

  const ModelPtr& model(const std::string& name) const {
    auto it = models_.find(name);
    if (it == models_.end()) throw Error(ErrorCode::UnknownSymbol, "model '" + name + "'");
    return it->second;
  }
  const std::map<std::string, ModelPtr>& models() const { return models_; }

  void bind(const std::string& symbol, const std::string& model_name, std::optional<std::size_t> column = std::nullopt) {
    const auto& m = model(model_name);
    if (column && *column >= m->output_size()) {
      throw Error(ErrorCode::ShapeMismatch, "'" + symbol + "' bound to column " + std::to_string(*column) + " of '" +
                                                model_name + "' with " + std::to_string(m->output_size()) + " outputs");
    }
    bindings_[symbol] = SymbolBinding{SymbolBinding::Kind::Model, model_name, column};
  }

  void bind_given(const std::string& symbol) {
    if (!givens_.has(symbol)) throw Error(ErrorCode::UnboundSymbol, "no given table for '" + symbol + "'");
    bindings_[symbol] = SymbolBinding{SymbolBinding::Kind::Given, "", std::nullopt};
  }

  const SymbolBinding* binding(const std::string& symbol) const {
    auto it = bindings_.find(symbol);
    return it == bindings_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, SymbolBinding>& bindings() const { return bindings_; }

  GivenTable& givens() { return givens_; }
  const GivenTable& givens() const { return givens_; }

  /// Every distinct parameter, models in name order.
  std::vector<ParameterPtr> params() const {
    std::vector<ParameterPtr> out;
    for (const auto& [name, m] : models_) append_unique(out, m->params());
    return out;
  }

  /// Parameters reachable from the given symbols.
  std::vector<ParameterPtr> params_of(const std::vector<std::string>& symbols) const {
    std::vector<ParameterPtr> out;
    for (const auto& s : symbols) {
      const auto* b = binding(s);
      if (!b) throw Error(ErrorCode::UnknownSymbol, "symbol '" + s + "' is not bound");
      if (b->kind == SymbolBinding::Kind::Model) append_unique(out, model(b->model)->params());
    }
    return out;
  }

  /// Checks that every symbol of the signature is bound with matching
  /// kinds and sizes.
  void check(const lang::Signature& sig) const {
    auto input_width = [&](const std::vector<std::string>& domains) {
      std::size_t w = 0;
      for (const auto& d : domains) w += sig.domain(d)->size();
      return w;
    };
    for (const auto& [name, p] : sig.predicates()) {
      const auto* b = binding(name);
      if (!b) throw Error(ErrorCode::UnboundSymbol, "predicate '" + name + "' has no binding");
      if (p.kind == lang::PredicateKind::Given) {
        if (b->kind != SymbolBinding::Kind::Given) {
          throw Error(ErrorCode::ConfigError, "given predicate '" + name + "' is bound to a model");
        }
        if (givens_.entry(name).domain_sizes.size() != p.arity()) {
          throw Error(ErrorCode::ArityMismatch, "given table for '" + name + "' has the wrong arity");
        }
        continue;
      }
      if (b->kind != SymbolBinding::Kind::Model) throw Error(ErrorCode::ConfigError, "learnable predicate '" + name + "' is bound to a table");
      const auto& m = model(b->model);
      if (m->input_size() != input_width(p.arg_domains)) {
        throw Error(ErrorCode::ShapeMismatch, "'" + name + "' feeds " + std::to_string(input_width(p.arg_domains)) +
                                                  " values into '" + m->name() + "' which expects " +
                                                  std::to_string(m->input_size()));
      }
      if (!b->column && m->output_size() != 1) {
        throw Error(ErrorCode::ShapeMismatch, "predicate '" + name + "' needs a column of multi-output '" + m->name() + "'");
      }
    }
    for (const auto& [name, f] : sig.functions()) {
      const auto* b = binding(name);
      if (!b || b->kind != SymbolBinding::Kind::Model) throw Error(ErrorCode::UnboundSymbol, "function '" + name + "' has no model");
      const auto& m = model(b->model);
      if (m->input_size() != input_width(f.arg_domains) || m->output_size() != sig.domain(f.output_domain)->size()) {
        throw Error(ErrorCode::ShapeMismatch, "function '" + name + "' does not fit model '" + m->name() + "'");
      }
    }
  }

 private:
  static void append_unique(std::vector<ParameterPtr>& out, const std::vector<ParameterPtr>& ps) {
    for (const auto& p : ps) {
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
  }

  std::map<std::string, ModelPtr> models_;
  std::map<std::string, SymbolBinding> bindings_;
  GivenTable givens_;
};

// ---------------------------------------------------------------------------
// Checkpoints: a JSON object of named parameter tensors.

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_json(const std::vector<ParameterPtr>& params) {
  nlohmann::json j;
  j["format"] = "fuzzyc-checkpoint";
  j["version"] = kCheckpointVersion;
  nlohmann::json ps = nlohmann::json::object();
  for (const auto& p : params) {
    if (ps.contains(p->name)) throw Error(ErrorCode::ConfigError, "duplicate parameter name '" + p->name + "'");
    ps[p->name] = {{"shape", p->value.shape}, {"data", p->value.data}};
  }
  j["parameters"] = std::move(ps);
  return j;
}

inline std::string checkpoint_string(const std::vector<ParameterPtr>& params) {
  return checkpoint_json(params).dump(1) + "\n";
}

inline void save_checkpoint(const std::string& path, const std::vector<ParameterPtr>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << checkpoint_string(params);
}

/// Overwrites every parameter from the checkpoint by name.
inline void restore_checkpoint(const nlohmann::json& j, const std::vector<ParameterPtr>& params) {
  if (j.value("format", "") != "fuzzyc-checkpoint") throw Error(ErrorCode::ConfigError, "not a checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) throw Error(ErrorCode::ConfigError, "unsupported checkpoint version");
  const auto& ps = j.at("parameters");
  for (const auto& p : params) {
    if (!ps.contains(p->name)) throw Error(ErrorCode::ConfigError, "checkpoint lacks parameter '" + p->name + "'");
    Tensor t(ps[p->name].at("shape").get<Shape>(), ps[p->name].at("data").get<std::vector<double>>());
    if (t.shape != p->value.shape) {
      throw Error(ErrorCode::ShapeMismatch, "parameter '" + p->name + "' is " + shape_str(p->value.shape) +
                                                ", checkpoint has " + shape_str(t.shape));
    }
    p->value = std::move(t);
  }
}

inline void load_checkpoint(const std::string& path, const std::vector<ParameterPtr>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, "checkpoint '" + path + "': " + e.what());
  }
  restore_checkpoint(j, params);
}

}  // namespace fuzzyc::models
