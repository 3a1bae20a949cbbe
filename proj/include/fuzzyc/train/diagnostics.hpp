#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "fuzzyc/autodiff/gradcheck.hpp"
#include "fuzzyc/grounding/evaluate.hpp"
#include "fuzzyc/grounding/table.hpp"
#include "fuzzyc/loss/loss.hpp"
#include "fuzzyc/train/experiment.hpp"

namespace fuzzyc::train {

/// First `n` elements of every domain (all of them when smaller). Given
/// tables stay valid since element indices are kept.
inline grounding::DomainMap truncate_domains(const grounding::DomainMap& domains, std::size_t n) {
  grounding::DomainMap out;
  for (const auto& [name, d] : domains) {
    std::vector<std::size_t> rows(std::min(n, d.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    out[name] = d.subset(rows);
  }
  return out;
}

struct ConstraintGradCheck {
  std::string name;
  ad::GradCheckReport report;
};

/// Finite-difference check of the mapped loss of constraint `index`,
/// grounded exhaustively over `domains`.
inline ConstraintGradCheck gradcheck_constraint(const Experiment& ex, std::size_t index, const grounding::DomainMap& domains,
                                                std::size_t max_per_param = 0, double h = 1e-5) {
  const auto& c = ex.constraints.at(index);
  const auto table = grounding::ground(c, domains, grounding::GroundingMode::exhaustive(ex.config.training.row_cap));
  ad::Graph g;
  const auto e = grounding::evaluate_constraint(g, c, table, domains, ex.registry);
  const auto l = loss::map_loss(g, e, ex.mappings[index]);
  return {c.name, ad::check_gradients(g, l, h, 1e-4, max_per_param)};
}

inline std::vector<ConstraintGradCheck> gradcheck_all(const Experiment& ex, std::size_t elements, std::size_t max_per_param = 8) {
  const auto domains = truncate_domains(ex.data.train, elements);
  std::vector<ConstraintGradCheck> out;
  for (std::size_t i = 0; i < ex.constraints.size(); ++i) out.push_back(gradcheck_constraint(ex, i, domains, max_per_param));
  return out;
}

}  // namespace fuzzyc::train
