#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/constraint_file.hpp"
#include "fuzzyc/models/registry.hpp"
#include "fuzzyc/semantics/compile.hpp"
#include "fuzzyc/train/diagnostics.hpp"
#include "fuzzyc/train/tasks.hpp"
#include "fuzzyc/train/trainer.hpp"

namespace {

using namespace fuzzyc;

int cmd_compile(const std::string& path, const std::optional<std::string>& tnorm, bool check_only) {
  const auto file = lang::load_constraint_file(path);
  semantics::CompileOptions base;
  if (tnorm) base.tnorm = semantics::require_tnorm(*tnorm);
  std::size_t count = 0;
  for (const auto& spec : file.constraints) {
    semantics::CompiledConstraint c;
    try {
      c = semantics::compile(spec, file.signature, base);
    } catch (const Error& e) {
      // prefix with the file so editors can jump to it
      std::cerr << path << ":" << spec.line << ": " << e.what() << "\n";
      return 1;
    }
    ++count;
    if (!check_only) std::cout << c.summary() << "\n";
  }
  std::cout << path << ": " << count << " constraint(s) compiled";
  if (tnorm) std::cout << " under " << *tnorm;
  std::cout << "\n";
  return 0;
}

void print_epoch(const train::EpochRecord& r) {
  std::cout << "epoch " << std::setw(4) << r.epoch;
  for (const auto& [name, cost] : r.objectives) std::cout << "  " << name << "=" << std::setprecision(5) << cost;
  double lowest = 1.0;
  for (const auto& [name, c] : r.constraints) lowest = std::min(lowest, c.mean_truth);
  std::cout << "  min_mean_truth=" << std::setprecision(4) << lowest << "\n";
}

int cmd_train(const std::string& config_path, const std::optional<std::string>& out, std::optional<std::size_t> epochs,
              std::size_t log_every) {
  auto cfg = train::load_config(config_path);
  if (out) cfg.output_dir = *out;
  if (epochs) cfg.training.epochs = *epochs;
  train::TrainHooks hooks;
  hooks.on_epoch = [&](const train::EpochRecord& r) {
    if (log_every > 0 && (r.epoch % log_every == 0 || r.epoch == 1)) print_epoch(r);
  };
  const auto result = train::run_task(cfg, hooks);
  std::cout << "epochs run: " << result.report.epochs.size() << (result.report.stopped_early ? " (early stop)" : "") << "\n";
  std::cout << "metrics: " << result.report.metrics.dump(2) << "\n";
  if (!cfg.output_dir.empty()) std::cout << "outputs written to " << cfg.output_dir << "\n";
  std::cout << "wall time: " << std::fixed << std::setprecision(1) << result.report.wall_seconds << " s\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, const std::optional<std::string>& constraints) {
  auto cfg = train::load_config(config_path);
  if (constraints) cfg.constraints = std::filesystem::absolute(*constraints).string();
  auto ex = train::build_experiment(cfg);
  models::load_checkpoint(checkpoint, ex.registry.params());
  const bool held_out = ex.has_test();
  if (held_out) ex.registry.givens() = ex.data.test_givens;
  nlohmann::json j;
  j["split"] = held_out ? "test" : "train";
  for (const auto& e : train::evaluate_all(ex, held_out ? ex.data.test : ex.data.train)) {
    j["constraints"][e.name] = {{"truth", e.truth}, {"mean_truth", e.mean_truth}, {"loss", e.loss}};
  }
  if (cfg.task != "generic") j["metrics"] = train::task_metrics(ex);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_gradcheck(const std::string& config_path, std::size_t elements, std::size_t per_param, double tolerance) {
  const auto cfg = train::load_config(config_path);
  const auto ex = train::build_experiment(cfg);
  int failures = 0;
  for (const auto& r : train::gradcheck_all(ex, elements, per_param)) {
    const bool ok = r.report.passed(tolerance);
    failures += ok ? 0 : 1;
    std::cout << (ok ? "ok   " : "FAIL ") << std::left << std::setw(28) << r.name << std::right
              << " max_rel_err=" << std::scientific << std::setprecision(2) << r.report.max_relative_error
              << std::defaultfloat << " checked=" << r.report.checked << " skipped=" << r.report.skipped;
    if (!ok) std::cout << " worst=" << r.report.worst_parameter << "[" << r.report.worst_index << "]";
    std::cout << "\n";
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fuzzyc: first-order constraints compiled to differentiable fuzzy losses"};
  app.require_subcommand(1);

  auto* compile = app.add_subcommand("compile", "parse, validate and compile a constraint file");
  std::string fol_path;
  std::optional<std::string> tnorm;
  bool check_only = false;
  compile->add_option("file", fol_path, "constraint file")->required();
  compile->add_option("--tnorm", tnorm, "goedel | product | lukasiewicz (overrides the default)");
  compile->add_flag("--check", check_only, "only report success or the first error");

  auto* trainc = app.add_subcommand("train", "train the models of a config");
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::size_t> epochs;
  std::size_t log_every = 25;
  trainc->add_option("--config", config_path, "experiment config (JSON)")->required();
  trainc->add_option("--out", out, "output directory (overrides output_dir)");
  trainc->add_option("--epochs", epochs, "epoch count override");
  trainc->add_option("--log-every", log_every, "print progress every N epochs (0: quiet)");

  auto* eval = app.add_subcommand("eval", "evaluate constraints and task metrics from a checkpoint");
  std::string checkpoint;
  std::optional<std::string> constraints;
  eval->add_option("--config", config_path, "experiment config (JSON)")->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json written by train")->required();
  eval->add_option("--constraints", constraints, "constraint file to evaluate instead of the config's");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every constraint loss");
  std::size_t elements = 4, per_param = 8;
  double tolerance = 1e-4;
  grad->add_option("--config", config_path, "experiment config (JSON)")->required();
  grad->add_option("--elements", elements, "domain elements kept per domain");
  grad->add_option("--per-param", per_param, "entries checked per parameter (0: all)");
  grad->add_option("--tolerance", tolerance, "maximum relative error");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*compile) return cmd_compile(fol_path, tnorm, check_only);
    if (*trainc) return cmd_train(config_path, out, epochs, log_every);
    if (*eval) return cmd_eval(config_path, checkpoint, constraints);
    if (*grad) return cmd_gradcheck(config_path, elements, per_param, tolerance);
  } catch (const fuzzyc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
