// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Scenario runs write into a scratch directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "fuzzyc/lang/constraint_file.hpp"
#include "fuzzyc/semantics/compile.hpp"
#include "fuzzyc/train/diagnostics.hpp"
#include "fuzzyc/train/tasks.hpp"
#include "oracle/closed_forms.hpp"
#include "oracle/equivalence.hpp"
#include "oracle/op_cases.hpp"

using namespace fuzzyc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << what << " -- " << detail << std::endl;
}

/// Runs `body`, turning an escaped exception into a failure line.
void criterion(int id, const std::string& what, const std::function<void(std::ostringstream&, bool&)>& body) {
  std::ostringstream detail;
  detail.precision(6);
  bool ok = true;
  try {
    body(detail, ok);
  } catch (const std::exception& e) {
    ok = false;
    detail << "exception: " << e.what();
  }
  report(id, ok, what, detail.str());
}

fs::path scenario(const std::string& rel) { return fs::path(FUZZYC_SCENARIOS_DIR) / rel; }

train::TrainConfig scenario_config(const std::string& rel, const fs::path& out) {
  auto c = train::load_config(scenario(rel).string());
  c.output_dir = out.string();
  return c;
}

double apply(semantics::ConnectiveOp op, double x, double y, semantics::TNorm t) {
  const double args[2] = {x, y};
  return semantics::eval_connective(op, std::span<const double>(args, op == semantics::ConnectiveOp::Not ? 1 : 2), t);
}

constexpr semantics::ConnectiveOp kConnectives[] = {semantics::ConnectiveOp::Not, semantics::ConnectiveOp::And,
                                                    semantics::ConnectiveOp::Or, semantics::ConnectiveOp::Implies,
                                                    semantics::ConnectiveOp::Iff};

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);
  const fs::path scratch = fs::temp_directory_path() / "fuzzyc_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  criterion(1, "t-norm truth tables on the 11x11 grid", [](auto& d, bool& ok) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::size_t points = 0;
    for (auto t : semantics::kAllTNorms) {
      for (auto op : kConnectives) {
        for (int i = 0; i <= 10; ++i) {
          for (int j = 0; j <= 10; ++j) {
            const double x = i / 10.0, y = j / 10.0;
            worst = std::max(worst, std::abs(apply(op, x, y, t) - oracle::closed_form(op, x, y, t)));
            ++points;
          }
        }
      }
    }
    const double secs = seconds_since(t0);
    ok = worst <= 1e-12 && secs < 1.0;
    d << points << " points, max |error| " << worst << ", " << secs << " s";
  });

  criterion(2, "Boolean truth tables on {0,1}", [](auto& d, bool& ok) {
    const auto t0 = Clock::now();
    int cases = 0, wrong = 0;
    for (auto t : semantics::kAllTNorms) {
      for (auto op : kConnectives) {
        for (int x = 0; x <= 1; ++x) {
          for (int y = 0; y <= 1; ++y) {
            if (apply(op, x, y, t) != (oracle::boolean(op, x, y) ? 1.0 : 0.0)) ++wrong;
            ++cases;
          }
        }
      }
    }
    const double secs = seconds_since(t0);
    ok = wrong == 0 && secs < 1.0;
    d << cases << " cases (3 logics x 5 connectives x 4 input pairs), " << wrong << " wrong, " << secs << " s";
  });

  criterion(3, "product + neglog supervision equals cross-entropy", [](auto& d, bool& ok) {
    const auto t0 = Clock::now();
    const double gap = oracle::cross_entropy_gap(2024, 100);
    const double secs = seconds_since(t0);
    ok = gap < 1e-9 && secs < 1.0;
    d << "100 instances, max gap " << gap << ", " << secs << " s";
  });

  criterion(4, "compiled evaluation equals the interpreter", [](auto& d, bool& ok) {
    const auto r = oracle::compiled_vs_interpreter(4242, 500);
    ok = r.formulas == 500 && r.max_gap <= 1e-12;
    d << r.formulas << " formulas x 3 t-norms, max gap " << r.max_gap;
    if (!ok) d << " (" << r.worst << ")";
  });

  criterion(5, "gradient checks of primitive ops and compiled constraints", [&](auto& d, bool& ok) {
    const auto t0 = Clock::now();
    double op_worst = 0.0;
    std::size_t ops = 0;
    for (const auto& op : oracle::primitive_op_cases()) {
      Rng rng(derive_seed(55, {ops}));
      const auto r = oracle::check_op(op, rng, 20);
      op_worst = std::max(op_worst, r.max_relative_error);
      ++ops;
    }
    double c_worst = 0.0;
    std::size_t constraints = 0, checked = 0;
    auto check_config = [&](train::TrainConfig cfg) {
      const auto ex = train::build_experiment(cfg);
      for (const auto& r : train::gradcheck_all(ex, 4, 8)) {
        c_worst = std::max(c_worst, r.report.max_relative_error);
        checked += r.report.checked;
        ++constraints;
      }
    };
    check_config(scenario_config("toy_digits/config.json", ""));
    auto married = scenario_config("married/config.json", "");
    check_config(married);
    married.compile.tnorm = semantics::TNorm::Goedel;
    check_config(married);
    const double secs = seconds_since(t0);
    ok = op_worst < 1e-4 && c_worst < 1e-4 && constraints >= 20 && secs < 30.0;
    d << ops << " ops (max rel. error " << op_worst << "), " << constraints << " constraints over " << checked
      << " entries (max rel. error " << c_worst << "), " << secs << " s";
  });

  train::TaskResult married_with, toy;
  criterion(6, "Married rule improves held-out Republican accuracy", [&](auto& d, bool& ok) {
    const auto t0 = Clock::now();
    married_with = train::run_task(scenario_config("married/config.json", scratch / "married_with"));
    auto without_cfg = scenario_config("married/config.json", scratch / "married_without");
    without_cfg.disabled.insert("married");
    const auto married_without = train::run_task(without_cfg);
    const double secs = seconds_since(t0);
    const double acc_with = married_with.report.metrics.at("heldout_accuracy").get<double>();
    const double acc_without = married_without.report.metrics.at("heldout_accuracy").get<double>();
    const double close = married_with.report.metrics.at("married_pairs_close").get<double>();
    ok = acc_with > acc_without && close >= 0.9 && secs < 120.0;
    d << "held-out accuracy " << acc_with << " with vs " << acc_without << " without, " << close * 100
      << "% of couples within 0.2, " << secs << " s for both runs";
  });

  criterion(7, "toy digit generators", [&](auto& d, bool& ok) {
    const auto t0 = Clock::now();
    toy = train::run_task(scenario_config("toy_digits/config.json", scratch / "toy"));
    const double secs = seconds_since(t0);
    const auto& m = toy.report.metrics;
    const double next_min = m.at("next_accuracy_min").get<double>(), prev_min = m.at("previous_accuracy_min").get<double>();
    const double mae_pn = m.at("cycle_mae_previous_next").get<double>(), mae_np = m.at("cycle_mae_next_previous").get<double>();
    const bool grid = fs::exists(scratch / "toy" / "grid.pgm");
    ok = next_min >= 0.9 && prev_min >= 0.9 && mae_pn < 0.1 && mae_np < 0.1 && grid && secs < 300.0;
    d << "per-class accuracy next >= " << next_min << ", previous >= " << prev_min << "; cycle MAE " << mae_pn << " / " << mae_np
      << "; grid " << (grid ? "written" : "missing") << "; " << secs << " s";
  });

  criterion(8, "face constraint file compiles under every t-norm", [](auto& d, bool& ok) {
    const auto file = lang::load_constraint_file(scenario("faces/faces.fol").string());
    std::size_t compiled = 0;
    for (auto t : semantics::kAllTNorms) {
      semantics::CompileOptions base;
      base.tnorm = t;
      for (const auto& spec : file.constraints) {
        semantics::compile(spec, file.signature, base);
        ++compiled;
      }
    }
    ok = !file.constraints.empty() && compiled == 3 * file.constraints.size();
    d << file.constraints.size() << " constraints x 3 t-norms, 0 errors";
  });

  criterion(9, "repeated runs are bit-identical", [&](auto& d, bool& ok) {
    const auto married_again = train::run_task(scenario_config("married/config.json", scratch / "married_again"));
    const auto toy_again = train::run_task(scenario_config("toy_digits/config.json", scratch / "toy_again"));
    auto same = [](const train::TaskResult& a, const train::TaskResult& b) {
      return models::checkpoint_string(a.experiment.registry.params()) == models::checkpoint_string(b.experiment.registry.params()) &&
             a.report.to_json().dump() == b.report.to_json().dump();
    };
    const bool m_same = same(married_with, married_again), t_same = same(toy, toy_again);
    ok = m_same && t_same;
    d << "married " << (m_same ? "identical" : "differs") << ", toy digits " << (t_same ? "identical" : "differs");
  });

  fs::remove_all(scratch);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
