#pragma once

#include <map>
#include <string>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/tensor.hpp"

namespace fuzzyc::lang {

/// Element shape of a data domain: a flat vector of `size()` reals, or an
/// image (height x width x channels) with pixels in [0,1].
struct DomainShape {
  enum class Kind { Vector, Image };
  Kind kind = Kind::Vector;
  Shape dims;

  static DomainShape vector(std::size_t n) { return {Kind::Vector, {n}}; }
  static DomainShape image(std::size_t h, std::size_t w, std::size_t c = 1) { return {Kind::Image, {h, w, c}}; }

  std::size_t size() const { return shape_size(dims); }
  bool is_image() const { return kind == Kind::Image; }

  std::string str() const {
    if (kind == Kind::Vector) return std::to_string(dims.at(0));
    return std::to_string(dims[0]) + "x" + std::to_string(dims[1]) + "x" + std::to_string(dims[2]);
  }

  friend bool operator==(const DomainShape&, const DomainShape&) = default;
};

enum class PredicateKind { Learnable, Given };

struct PredicateSig {
  std::vector<std::string> arg_domains;
  PredicateKind kind = PredicateKind::Learnable;
  std::size_t arity() const { return arg_domains.size(); }
};

struct FunctionSig {
  std::vector<std::string> arg_domains;
  std::string output_domain;
  std::size_t arity() const { return arg_domains.size(); }
};

/// Symbols a formula may reference. Predicates and functions share one
/// namespace.
class Signature {
 public:
  void add_domain(const std::string& name, DomainShape shape) {
    if (shape.dims.empty() || shape.size() == 0) {
      throw Error(ErrorCode::ConfigError, "domain '" + name + "' must have a positive shape");
    }
    domains_[name] = std::move(shape);
  }

  void add_predicate(const std::string& name, std::vector<std::string> arg_domains, PredicateKind kind) {
    check_new_symbol(name, arg_domains);
    predicates_[name] = PredicateSig{std::move(arg_domains), kind};
  }

  void add_function(const std::string& name, std::vector<std::string> arg_domains, std::string output_domain) {
    check_new_symbol(name, arg_domains);
    require_domain(output_domain);
    functions_[name] = FunctionSig{std::move(arg_domains), std::move(output_domain)};
  }

  const std::map<std::string, DomainShape>& domains() const { return domains_; }
  const std::map<std::string, PredicateSig>& predicates() const { return predicates_; }
  const std::map<std::string, FunctionSig>& functions() const { return functions_; }

  const DomainShape* domain(const std::string& name) const { return find(domains_, name); }
  const PredicateSig* predicate(const std::string& name) const { return find(predicates_, name); }
  const FunctionSig* function(const std::string& name) const { return find(functions_, name); }

  bool has_symbol(const std::string& name) const { return predicate(name) || function(name); }

  /// Adds every declaration of `other`; later declarations win.
  void merge(const Signature& other) {
    for (const auto& [k, v] : other.domains_) domains_[k] = v;
    for (const auto& [k, v] : other.predicates_) predicates_[k] = v;
    for (const auto& [k, v] : other.functions_) functions_[k] = v;
  }

 private:
  template <class Map>
  static const typename Map::mapped_type* find(const Map& m, const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
  }

  void require_domain(const std::string& name) const {
    if (!domains_.count(name)) throw Error(ErrorCode::UnknownSymbol, "domain '" + name + "' is not declared");
  }

  void check_new_symbol(const std::string& name, const std::vector<std::string>& arg_domains) {
    if (arg_domains.empty()) throw Error(ErrorCode::ConfigError, "symbol '" + name + "' must have arity >= 1");
    for (const auto& d : arg_domains) require_domain(d);
    predicates_.erase(name);
    functions_.erase(name);
  }

  std::map<std::string, DomainShape> domains_;
  std::map<std::string, PredicateSig> predicates_;
  std::map<std::string, FunctionSig> functions_;
};

}  // namespace fuzzyc::lang
