#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuzzyc/error.hpp"
#include "fuzzyc/grounding/domain.hpp"
#include "fuzzyc/grounding/table.hpp"
#include "fuzzyc/lang/constraint_file.hpp"
#include "fuzzyc/loss/loss.hpp"
#include "fuzzyc/models/model.hpp"
#include "fuzzyc/models/registry.hpp"
#include "fuzzyc/random.hpp"
#include "fuzzyc/scenarios/datasets.hpp"
#include "fuzzyc/semantics/compile.hpp"

namespace fuzzyc::train {

using nlohmann::json;

struct ModelSpec {
  std::string name;
  std::string kind = "mlp";  // mlp | rbf
  std::vector<std::string> inputs;  // domains whose elements are concatenated
  std::optional<std::string> output_domain;
  std::size_t output_size = 1;
  std::vector<std::size_t> hidden = {50};
  models::Head head = models::Head::Sigmoid;
  std::optional<std::string> share_first_layer_with;
  // rbf
  std::size_t classes = 3;
  std::size_t centers_per_class = 30;
  std::vector<std::string> class_predicates;  // given predicates that pick each class's centres
};

struct BindingSpec {
  std::string model;  // empty for a given table
  std::optional<std::size_t> column;
};

struct TrainingOptions {
  std::size_t epochs = 300;
  std::size_t steps_per_epoch = 1;
  std::size_t batch_size = 64;
  bool minibatch = true;
  std::size_t row_cap = grounding::kDefaultRowCap;
  std::optional<double> early_stop = 0.9;  // stop once every mean row truth exceeds this
  std::size_t checkpoint_every = 0;
};

/// Everything `fuzzyc train` reads from a JSON config file.
struct TrainConfig {
  std::string name = "experiment";
  std::string task = "generic";  // generic | married | toy_digits
  std::uint64_t seed = 0;
  std::filesystem::path base_dir = ".";
  std::string constraints;
  semantics::CompileOptions compile;
  std::optional<loss::LossMapping> mapping;
  json dataset;  // {"generator": ..., options}
  std::map<std::string, std::string> domain_files;
  std::map<std::string, std::string> test_domain_files;
  std::string givens_file;
  std::string test_givens_file;
  std::vector<std::pair<std::string, std::string>> complements;  // target = not source
  std::vector<ModelSpec> models;
  std::map<std::string, BindingSpec> bindings;
  std::vector<loss::ObjectiveSpec> objectives;
  std::map<std::string, double> weights;
  std::set<std::string> disabled;
  TrainingOptions training;
  std::string output_dir;
  json raw;

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

inline ModelSpec parse_model(const json& j) {
  ModelSpec m;
  m.name = j.at("name").get<std::string>();
  m.kind = get_or<std::string>(j, "kind", "mlp");
  if (j.at("input").is_string()) {
    m.inputs = {j["input"].get<std::string>()};
  } else {
    m.inputs = j["input"].get<std::vector<std::string>>();
  }
  if (j.contains("output")) {
    if (j["output"].is_string()) {
      m.output_domain = j["output"].get<std::string>();
    } else {
      m.output_size = j["output"].get<std::size_t>();
    }
  }
  m.hidden = get_or<std::vector<std::size_t>>(j, "hidden", {50});
  m.head = models::parse_head(get_or<std::string>(j, "head", "sigmoid"));
  if (j.contains("share_first_layer_with") && !j["share_first_layer_with"].is_null()) {
    m.share_first_layer_with = j["share_first_layer_with"].get<std::string>();
  }
  m.classes = get_or<std::size_t>(j, "classes", 3);
  m.centers_per_class = get_or<std::size_t>(j, "centers_per_class", 30);
  m.class_predicates = get_or<std::vector<std::string>>(j, "class_predicates", {});
  return m;
}

}  // namespace detail

inline TrainConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
  TrainConfig c;
  try {
    c.raw = j;
    c.base_dir = base_dir;
    c.name = detail::get_or<std::string>(j, "name", "experiment");
    c.task = detail::get_or<std::string>(j, "task", "generic");
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    c.constraints = j.at("constraints").get<std::string>();
    c.compile.tnorm = semantics::require_tnorm(detail::get_or<std::string>(j, "tnorm", "product"));
    if (j.contains("forall") && !j["forall"].is_null()) c.compile.forall = semantics::require_tnorm(j["forall"].get<std::string>());
    if (j.contains("exists") && !j["exists"].is_null()) c.compile.exists = semantics::require_tnorm(j["exists"].get<std::string>());
    if (j.contains("mapping") && !j["mapping"].is_null()) c.mapping = loss::parse_mapping(j["mapping"].get<std::string>());
    if (j.contains("equality")) {
      for (const auto& [domain, kind] : j["equality"].items()) {
        c.compile.equality.per_domain[domain] = semantics::require_equality_kind(kind.get<std::string>());
      }
    }
    c.dataset = detail::get_or<json>(j, "dataset", json());
    c.domain_files = detail::get_or<std::map<std::string, std::string>>(j, "domains", {});
    c.test_domain_files = detail::get_or<std::map<std::string, std::string>>(j, "test_domains", {});
    c.givens_file = detail::get_or<std::string>(j, "givens", "");
    c.test_givens_file = detail::get_or<std::string>(j, "test_givens", "");
    for (const auto& pair : detail::get_or<json>(j, "complements", json::array())) {
      c.complements.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    }
    for (const auto& m : detail::get_or<json>(j, "models", json::array())) c.models.push_back(detail::parse_model(m));
    const auto bindings = detail::get_or<json>(j, "bindings", json::object());
    for (const auto& [symbol, b] : bindings.items()) {
      BindingSpec spec;
      if (b.is_string()) {
        spec.model = b.get<std::string>() == "given" ? "" : b.get<std::string>();
      } else {
        spec.model = detail::get_or<std::string>(b, "model", "");
        if (b.contains("column")) spec.column = b["column"].get<std::size_t>();
      }
      c.bindings[symbol] = spec;
    }
    for (const auto& o : j.at("objectives")) {
      loss::ObjectiveSpec spec;
      spec.name = o.at("name").get<std::string>();
      spec.groups = detail::get_or<std::vector<std::string>>(o, "groups", {spec.name});
      spec.trainable = o.at("trainable").get<std::vector<std::string>>();
      spec.learning_rate = detail::get_or<double>(o, "lr", 1e-4);
      spec.steps = detail::get_or<std::size_t>(o, "steps", 1);
      c.objectives.push_back(std::move(spec));
    }
    c.weights = detail::get_or<std::map<std::string, double>>(j, "weights", {});
    for (const auto& [name, w] : c.weights) {
      if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "weight of '" + name + "'");
    }
    const auto disabled = detail::get_or<std::vector<std::string>>(j, "disabled", {});
    c.disabled = {disabled.begin(), disabled.end()};
    const auto t = detail::get_or<json>(j, "training", json::object());
    c.training.epochs = detail::get_or<std::size_t>(t, "epochs", 300);
    c.training.steps_per_epoch = detail::get_or<std::size_t>(t, "steps_per_epoch", 1);
    c.training.batch_size = detail::get_or<std::size_t>(t, "batch_size", 64);
    c.training.minibatch = detail::get_or<std::string>(t, "grounding", "minibatch") == "minibatch";
    c.training.row_cap = detail::get_or<std::size_t>(t, "row_cap", grounding::kDefaultRowCap);
    if (t.contains("early_stop")) {
      c.training.early_stop = t["early_stop"].is_null() ? std::nullopt : std::optional<double>(t["early_stop"].get<double>());
    }
    c.training.checkpoint_every = detail::get_or<std::size_t>(t, "checkpoint_every", 0);
    c.output_dir = detail::get_or<std::string>(j, "output_dir", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  return c;
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "config '" + path + "': " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

/// A fully resolved training setup: compiled constraints, data, models
/// and objectives.
struct Experiment {
  TrainConfig config;
  lang::ConstraintFile file;
  std::vector<semantics::CompiledConstraint> constraints;
  std::vector<loss::LossMapping> mappings;  // per constraint
  scenarios::Dataset data;
  models::ModelRegistry registry;
  std::vector<loss::Objective> objectives;

  bool has_test() const { return !data.test.empty(); }
};

namespace detail {

inline scenarios::Dataset load_dataset(const TrainConfig& c) {
  scenarios::Dataset d;
  if (!c.dataset.is_null()) {
    const auto gen = c.dataset.value("generator", "");
    const auto seed = c.dataset.value("seed", derive_seed(c.seed, {7}));
    if (gen == "glyphs") {
      scenarios::GlyphOptions o;
      o.train_per_class = c.dataset.value("train_per_class", o.train_per_class);
      o.test_per_class = c.dataset.value("test_per_class", o.test_per_class);
      o.max_shift = c.dataset.value("max_shift", o.max_shift);
      o.min_intensity = c.dataset.value("min_intensity", o.min_intensity);
      o.noise = c.dataset.value("noise", o.noise);
      d = scenarios::make_glyph_dataset(seed, o);
    } else if (gen == "married") {
      scenarios::MarriedOptions o;
      o.people = c.dataset.value("people", o.people);
      o.dims = c.dataset.value("dims", o.dims);
      o.separation = c.dataset.value("separation", o.separation);
      o.labeled_fraction = c.dataset.value("labeled_fraction", o.labeled_fraction);
      d = scenarios::make_married_dataset(seed, o);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown dataset generator '" + gen + "' (glyphs | married)");
    }
  }
  for (const auto& [name, path] : c.domain_files) d.train[name] = grounding::load_domain(name, c.resolve(path).string());
  for (const auto& [name, path] : c.test_domain_files) d.test[name] = grounding::load_domain(name, c.resolve(path).string());
  return d;
}

/// Declares a table for every given predicate not yet present.
inline void declare_givens(const lang::Signature& sig, const grounding::DomainMap& domains, models::GivenTable& table) {
  for (const auto& [name, p] : sig.predicates()) {
    if (p.kind != lang::PredicateKind::Given || table.has(name)) continue;
    std::vector<std::size_t> sizes;
    for (const auto& dname : p.arg_domains) {
      auto it = domains.find(dname);
      if (it == domains.end()) throw Error(ErrorCode::UnboundSymbol, "no data for domain '" + dname + "'");
      sizes.push_back(it->second.size());
    }
    table.declare(name, sizes);
  }
}

inline models::ModelPtr build_model(const ModelSpec& m, const lang::Signature& sig, const scenarios::Dataset& data,
                                    const models::ModelRegistry& registry, Rng& rng) {
  std::size_t input = 0;
  for (const auto& d : m.inputs) {
    const auto* shape = sig.domain(d);
    if (!shape) throw Error(ErrorCode::UnknownSymbol, "model '" + m.name + "' reads unknown domain '" + d + "'");
    input += shape->size();
  }
  if (m.kind == "mlp") {
    models::Mlp::Options o;
    o.input = input;
    o.hidden = m.hidden;
    o.head = m.head;
    o.output = m.output_size;
    if (m.output_domain) {
      const auto* shape = sig.domain(*m.output_domain);
      if (!shape) throw Error(ErrorCode::UnknownSymbol, "model '" + m.name + "' writes unknown domain '" + *m.output_domain + "'");
      o.output = shape->size();
    }
    auto mlp = std::make_shared<models::Mlp>(m.name, o, rng);
    if (m.share_first_layer_with) {
      const auto other = std::dynamic_pointer_cast<models::Mlp>(registry.model(*m.share_first_layer_with));
      if (!other) throw Error(ErrorCode::ConfigError, "'" + m.name + "' can only share a layer with an mlp");
      mlp->share_first_layer(*other);
    }
    return mlp;
  }
  if (m.kind == "rbf") {
    if (m.inputs.size() != 1) throw Error(ErrorCode::ConfigError, "rbf '" + m.name + "' takes exactly one input domain");
    auto it = data.train.find(m.inputs[0]);
    if (it == data.train.end()) throw Error(ErrorCode::UnboundSymbol, "no data for domain '" + m.inputs[0] + "'");
    const auto& dom = it->second;
    std::vector<std::vector<std::size_t>> groups;
    if (m.class_predicates.empty()) {
      std::vector<std::size_t> all(dom.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      groups.push_back(std::move(all));
    } else {
      for (const auto& p : m.class_predicates) {
        const auto& entry = registry.givens().entry(p);
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < entry.values.size(); ++i) {
          if (entry.values[i] == 1.0) rows.push_back(i);
        }
        groups.push_back(std::move(rows));
      }
    }
    const std::size_t per_group = m.class_predicates.empty() ? m.centers_per_class * m.classes : m.centers_per_class;
    return models::Rbf::from_data(m.name, dom.data, groups, per_group, m.classes, rng);
  }
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + m.kind + "' (mlp | rbf)");
}

}  // namespace detail

/// Loads data, builds models and bindings, compiles every enabled
/// constraint and partitions them into objectives. All symbol and group
/// errors surface here, before any training.
inline Experiment build_experiment(const TrainConfig& config) {
  Experiment ex;
  ex.config = config;
  ex.file = lang::load_constraint_file(config.resolve(config.constraints).string());
  const auto& sig = ex.file.signature;

  ex.data = detail::load_dataset(config);
  for (const auto& [name, shape] : sig.domains()) {
    auto it = ex.data.train.find(name);
    if (it == ex.data.train.end()) throw Error(ErrorCode::UnboundSymbol, "no data for domain '" + name + "'");
    if (it->second.shape.size() != shape.size()) {
      throw Error(ErrorCode::ShapeMismatch, "domain '" + name + "' data has elements of size " +
                                                std::to_string(it->second.shape.size()) + ", declared " + shape.str());
    }
  }
  detail::declare_givens(sig, ex.data.train, ex.data.train_givens);
  if (!config.givens_file.empty()) ex.data.train_givens.load_csv_file(config.resolve(config.givens_file).string());
  if (ex.has_test()) {
    detail::declare_givens(sig, ex.data.test, ex.data.test_givens);
    if (!config.test_givens_file.empty()) ex.data.test_givens.load_csv_file(config.resolve(config.test_givens_file).string());
  }
  for (const auto& [target, source] : config.complements) {
    ex.data.train_givens.complement(target, source);
    if (ex.has_test()) ex.data.test_givens.complement(target, source);
  }
  ex.registry.givens() = ex.data.train_givens;

  for (std::size_t i = 0; i < config.models.size(); ++i) {
    Rng rng(derive_seed(config.seed, {100, i}));
    ex.registry.add_model(detail::build_model(config.models[i], sig, ex.data, ex.registry, rng));
  }
  for (const auto& [symbol, b] : config.bindings) {
    if (!sig.has_symbol(symbol)) throw Error(ErrorCode::UnknownSymbol, "binding for undeclared symbol '" + symbol + "'");
    if (b.model.empty()) {
      ex.registry.bind_given(symbol);
    } else {
      ex.registry.bind(symbol, b.model, b.column);
    }
  }
  for (const auto& [name, p] : sig.predicates()) {
    if (p.kind == lang::PredicateKind::Given && !ex.registry.binding(name)) ex.registry.bind_given(name);
  }
  ex.registry.check(sig);

  for (const auto& name : config.disabled) {
    if (!ex.file.find(name)) throw Error(ErrorCode::ConfigError, "cannot disable unknown constraint '" + name + "'");
  }
  for (const auto& [name, w] : config.weights) {
    if (!ex.file.find(name)) throw Error(ErrorCode::ConfigError, "weight for unknown constraint '" + name + "'");
  }
  for (const auto& spec : ex.file.constraints) {
    if (config.disabled.count(spec.name)) continue;
    semantics::CompiledConstraint c;
    try {
      c = semantics::compile(spec, sig, config.compile);
    } catch (const Error& e) {
      throw Error(e.code(), "constraint '" + spec.name + "': " + e.detail(), e.position());
    }
    if (auto it = config.weights.find(spec.name); it != config.weights.end()) c.weight = it->second;
    ex.mappings.push_back(loss::mapping_for(c, config.mapping));
    ex.constraints.push_back(std::move(c));
  }

  for (const auto& o : config.objectives) {
    for (const auto& s : o.trainable) {
      if (!sig.has_symbol(s)) throw Error(ErrorCode::UnknownSymbol, "objective '" + o.name + "' trains unknown symbol '" + s + "'");
      const auto* b = ex.registry.binding(s);
      if (!b || b->kind != models::SymbolBinding::Kind::Model) {
        throw Error(ErrorCode::UnknownSymbol, "objective '" + o.name + "' trains '" + s + "', which has no model");
      }
    }
  }
  ex.objectives = loss::partition(ex.constraints, config.objectives);
  return ex;
}

}  // namespace fuzzyc::train
