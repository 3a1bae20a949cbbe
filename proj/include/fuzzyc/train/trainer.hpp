#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuzzyc/autodiff/graph.hpp"
#include "fuzzyc/grounding/evaluate.hpp"
#include "fuzzyc/grounding/table.hpp"
#include "fuzzyc/loss/loss.hpp"
#include "fuzzyc/models/registry.hpp"
#include "fuzzyc/random.hpp"
#include "fuzzyc/train/adam.hpp"
#include "fuzzyc/train/experiment.hpp"

namespace fuzzyc::train {

struct ConstraintRecord {
  double truth = 0.0;       // fold over the grounding that was evaluated
  double mean_truth = 0.0;  // mean over rows of the leading universal quantifiers
  double loss = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::map<std::string, ConstraintRecord> constraints;
  std::map<std::string, double> objectives;  // cost of the last step
};

struct TrainReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
  nlohmann::json metrics = nlohmann::json::object();
  double wall_seconds = 0.0;  // kept out of to_json so reports are reproducible

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["seed"] = seed;
    j["epochs_run"] = epochs.size();
    j["stopped_early"] = stopped_early;
    auto& list = j["epochs"] = nlohmann::json::array();
    for (const auto& e : epochs) {
      nlohmann::json rec;
      rec["epoch"] = e.epoch;
      for (const auto& [n, c] : e.constraints) {
        rec["constraints"][n] = {{"truth", c.truth}, {"mean_truth", c.mean_truth}, {"loss", c.loss}};
      }
      for (const auto& [n, l] : e.objectives) rec["objectives"][n] = l;
      list.push_back(std::move(rec));
    }
    j["metrics"] = metrics;
    return j;
  }
};

struct Evaluation {
  std::string name;
  double truth = 0.0;
  double mean_truth = 0.0;
  double loss = 0.0;
  double raw_loss = 0.0;
};

/// Truth of every enabled constraint over exhaustive groundings of
/// `domains` with the registry's current given tables.
inline std::vector<Evaluation> evaluate_all(const Experiment& ex, const grounding::DomainMap& domains) {
  std::vector<Evaluation> out;
  for (std::size_t i = 0; i < ex.constraints.size(); ++i) {
    const auto& c = ex.constraints[i];
    const auto table = grounding::ground(c, domains, grounding::GroundingMode::exhaustive(ex.config.training.row_cap));
    ad::Graph g;
    const auto e = grounding::evaluate_constraint(g, c, table, domains, ex.registry);
    const auto loss_node = loss::map_loss(g, e, ex.mappings[i]);
    Evaluation ev;
    ev.name = c.name;
    ev.truth = g.value(e.truth).item();
    const auto& rows = g.value(e.rows);
    for (double v : rows.data) ev.mean_truth += v;
    ev.mean_truth /= static_cast<double>(rows.size());
    ev.loss = g.value(loss_node).item();
    ev.raw_loss = loss::raw_loss(ev.truth, ex.mappings[i]);
    out.push_back(ev);
  }
  return out;
}

/// Parameters updated by objective `o` (trainable ones only).
inline std::vector<ad::ParameterPtr> objective_params(const Experiment& ex, const loss::Objective& o) {
  std::vector<ad::ParameterPtr> out;
  for (const auto& p : ex.registry.params_of(o.spec.trainable)) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace detail

/// Alternating minimisation: every step runs each objective in declared
/// order, building the cost of its constraints on fresh groundings and
/// updating only that objective's parameters with Adam.
inline TrainReport train(Experiment& ex, const TrainHooks& hooks = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = ex.config;
  TrainReport report;
  report.name = cfg.name;
  report.seed = cfg.seed;

  std::vector<AdamState> adam(ex.objectives.size());
  for (std::size_t o = 0; o < ex.objectives.size(); ++o) adam[o].learning_rate = ex.objectives[o].spec.learning_rate;
  std::vector<std::vector<ad::ParameterPtr>> trainable;
  for (const auto& o : ex.objectives) trainable.push_back(objective_params(ex, o));

  std::filesystem::path out_dir;
  if (!cfg.output_dir.empty()) {
    out_dir = cfg.output_dir;
    std::filesystem::create_directories(out_dir);
  }

  for (std::size_t epoch = 1; epoch <= cfg.training.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t step = 0; step < cfg.training.steps_per_epoch; ++step) {
      for (std::size_t oi = 0; oi < ex.objectives.size(); ++oi) {
        const auto& obj = ex.objectives[oi];
        for (std::size_t inner = 0; inner < obj.spec.steps; ++inner) {
          ad::Graph g;
          std::vector<std::pair<double, ad::NodeId>> terms;
          std::vector<std::pair<std::size_t, grounding::ConstraintEval>> evals;
          std::vector<ad::NodeId> losses;
          for (auto ci : obj.constraints) {
            const auto& c = ex.constraints[ci];
            const auto mode = cfg.training.minibatch
                                  ? grounding::GroundingMode::minibatch(cfg.training.batch_size,
                                                                        derive_seed(cfg.seed, {epoch, step, oi, inner, ci}),
                                                                        cfg.training.row_cap)
                                  : grounding::GroundingMode::exhaustive(cfg.training.row_cap);
            try {
              const auto table = grounding::ground(c, ex.data.train, mode);
              const auto e = grounding::evaluate_constraint(g, c, table, ex.data.train, ex.registry);
              const auto l = loss::map_loss(g, e, ex.mappings[ci]);
              terms.emplace_back(c.weight, l);
              evals.emplace_back(ci, e);
              losses.push_back(l);
            } catch (const Error& err) {
              throw Error(err.code(), "constraint '" + c.name + "': " + err.detail(), err.position());
            }
          }
          const auto cost = loss::total_cost(g, terms);
          g.backward(cost);
          std::vector<Tensor> grads;
          const auto all = g.param_grads();
          for (const auto& p : trainable[oi]) {
            Tensor grad = Tensor::zeros(p->value.shape);
            for (const auto& pg : all) {
              if (pg.param == p) grad = pg.grad;
            }
            grads.push_back(std::move(grad));
          }
          adam_step(trainable[oi], grads, adam[oi]);

          rec.objectives[obj.spec.name] = g.value(cost).item();
          for (std::size_t k = 0; k < evals.size(); ++k) {
            const auto& [ci, e] = evals[k];
            ConstraintRecord cr;
            cr.truth = g.value(e.truth).item();
            const auto& rows = g.value(e.rows);
            for (double v : rows.data) cr.mean_truth += v;
            cr.mean_truth /= static_cast<double>(rows.size());
            cr.loss = g.value(losses[k]).item();
            rec.constraints[ex.constraints[ci].name] = cr;
          }
        }
      }
    }
    report.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (!out_dir.empty() && cfg.training.checkpoint_every > 0 && epoch % cfg.training.checkpoint_every == 0) {
      models::save_checkpoint((out_dir / ("checkpoint_epoch" + std::to_string(epoch) + ".json")).string(), ex.registry.params());
    }
    if (cfg.training.early_stop) {
      bool done = !rec.constraints.empty();
      for (const auto& [n, c] : rec.constraints) done = done && c.mean_truth > *cfg.training.early_stop;
      if (done) {
        report.stopped_early = true;
        break;
      }
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// Writes checkpoint.json, report.json and timing.json into `dir`.
inline void write_outputs(const Experiment& ex, const TrainReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  models::save_checkpoint((dir / "checkpoint.json").string(), ex.registry.params());
  detail::write_text(dir / "report.json", report.to_json().dump(1) + "\n");
  detail::write_text(dir / "timing.json", nlohmann::json{{"wall_seconds", report.wall_seconds}}.dump(1) + "\n");
}

}  // namespace fuzzyc::train
