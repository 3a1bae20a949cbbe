#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/grounding/domain.hpp"
#include "fuzzyc/random.hpp"
#include "fuzzyc/semantics/compile.hpp"

namespace fuzzyc::grounding {

inline constexpr std::size_t kDefaultRowCap = 1'000'000;

struct GroundingMode {
  enum class Kind { Exhaustive, Minibatch };
  Kind kind = Kind::Exhaustive;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  std::size_t row_cap = kDefaultRowCap;

  static GroundingMode exhaustive(std::size_t cap = kDefaultRowCap) { return {Kind::Exhaustive, 0, 0, cap}; }
  static GroundingMode minibatch(std::size_t batch, std::uint64_t seed, std::size_t cap = kDefaultRowCap) {
    return {Kind::Minibatch, batch, seed, cap};
  }
};

/// Element indices bound to each quantifier of a constraint's plan. Rows
/// are the cartesian product of the index lists in plan order, the last
/// quantifier varying fastest.
struct GroundingTable {
  std::vector<std::string> variables;
  std::vector<std::string> domains;
  std::vector<std::vector<std::size_t>> indices;
  std::vector<bool> sampled;
  GroundingMode mode;

  std::size_t row_count() const {
    std::size_t n = 1;
    for (const auto& ix : indices) n *= ix.size();
    return n;
  }

  /// Element index of every variable in row `r`.
  std::vector<std::size_t> row(std::size_t r) const {
    std::vector<std::size_t> out(indices.size());
    for (std::size_t q = indices.size(); q-- > 0;) {
      out[q] = indices[q][r % indices[q].size()];
      r /= indices[q].size();
    }
    return out;
  }
};

/// Exhaustive mode enumerates every domain element for every variable.
/// Minibatch mode draws `batch` indices with replacement for each
/// universally quantified variable that is not nested under an
/// existential; all other variables keep their full domain.
inline GroundingTable ground(const semantics::CompiledConstraint& c, const DomainMap& domains, const GroundingMode& mode) {
  GroundingTable t;
  t.mode = mode;
  double rows = 1.0;
  for (std::size_t q = 0; q < c.plan.size(); ++q) {
    const auto& step = c.plan[q];
    auto it = domains.find(step.domain);
    if (it == domains.end()) throw Error(ErrorCode::UnboundSymbol, "no data for domain '" + step.domain + "'");
    const std::size_t n = it->second.size();
    if (n == 0) throw Error(ErrorCode::EmptyDomain, "domain '" + step.domain + "' has no elements");
    bool universal_chain = true;
    for (auto a : c.path_to(q)) universal_chain = universal_chain && c.plan[a].kind == semantics::QuantifierKind::Forall;
    std::vector<std::size_t> ix;
    const bool sample = mode.kind == GroundingMode::Kind::Minibatch && universal_chain;
    if (sample) {
      if (mode.batch == 0) throw Error(ErrorCode::ConfigError, "minibatch size must be positive");
      Rng rng(derive_seed(mode.seed, {q}));
      ix.resize(mode.batch);
      for (auto& v : ix) v = uniform_index(rng, n);
    } else {
      ix.resize(n);
      std::iota(ix.begin(), ix.end(), std::size_t{0});
    }
    rows *= static_cast<double>(ix.size());
    t.variables.push_back(step.variable);
    t.domains.push_back(step.domain);
    t.indices.push_back(std::move(ix));
    t.sampled.push_back(sample);
  }
  if (rows > static_cast<double>(mode.row_cap)) {
    throw Error(ErrorCode::BudgetExceeded, "constraint '" + c.name + "' grounds to " + std::to_string(static_cast<std::uint64_t>(rows)) +
                                               " rows, cap is " + std::to_string(mode.row_cap));
  }
  return t;
}

}  // namespace fuzzyc::grounding
