#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fuzzyc/autodiff/graph.hpp"

namespace fuzzyc::ad {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbations that crossed a non-smooth branch
  std::size_t parameters = 0;
  NodeId worst_node = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::vector<std::string> notes;

  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps round-off in
/// near-zero derivatives from dominating the ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares reverse-mode gradients of `seed` against central differences
/// for every element of every parameter reachable in `graph`. A parameter
/// element is skipped when either perturbation changes the branch taken by
/// some min/max/abs/relu/clamp/if_le (i.e. the point lies within h of a tie).
/// Parameter values are restored before returning. A nonzero
/// `max_per_param` checks that many evenly spaced elements of each
/// parameter instead of all of them.
inline GradCheckReport check_gradients(Graph& graph, NodeId seed, double h = 1e-5, double floor = 1e-4,
                                       std::size_t max_per_param = 0) {
  GradCheckReport report;
  graph.forward();
  graph.backward(seed);
  const auto grads = graph.param_grads();
  report.parameters = grads.size();

  graph.set_record_branches(true);
  graph.forward();
  const auto reference = graph.branch_signature();

  for (std::size_t p = 0; p < grads.size(); ++p) {
    auto& param = *grads[p].param;
    const std::size_t n = param.value.size();
    const std::size_t count = max_per_param == 0 ? n : std::min(n, max_per_param);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = count == n ? k : k * n / count;
      const double original = param.value[i];
      param.value[i] = original + h;
      graph.forward();
      const double up = graph.value(seed).item();
      const bool up_same = graph.branch_signature() == reference;
      param.value[i] = original - h;
      graph.forward();
      const double down = graph.value(seed).item();
      const bool down_same = graph.branch_signature() == reference;
      param.value[i] = original;
      if (!up_same || !down_same) {
        ++report.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[p].grad[i];
      const double err = relative_error(analytic, numeric, floor);
      ++report.checked;
      if (err >= report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_node = graph.param_nodes()[p];
        report.worst_parameter = param.name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  graph.set_record_branches(false);
  graph.forward();
  if (report.parameters == 0) report.notes.emplace_back("graph has no parameters");
  if (report.skipped > 0) {
    report.notes.push_back(std::to_string(report.skipped) + " point(s) skipped: perturbation crosses a tie");
  }
  return report;
}

}  // namespace fuzzyc::ad
