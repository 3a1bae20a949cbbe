#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "fuzzyc/grounding/domain.hpp"
#include "fuzzyc/train/adam.hpp"
#include "fuzzyc/train/tasks.hpp"
#include "fuzzyc/train/trainer.hpp"

using namespace fuzzyc;
using nlohmann::json;

namespace {

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

ad::ParameterPtr make_param(const std::string& name, Tensor t) { return std::make_shared<ad::Parameter>(name, std::move(t)); }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Fresh scratch directory per call.
std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("fuzzyc_trainer_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Two Gaussian blobs in the plane, separated along x0 + x1, with the
/// class labels as given predicates isA / isB.
std::filesystem::path write_blobs(const std::string& tag, std::size_t per_class = 60) {
  const auto dir = scratch_dir(tag);
  Rng rng(404);
  const std::size_t n = 2 * per_class;
  Tensor pts = Tensor::zeros({n, 2});
  std::string givens = "element,predicate,value\n";
  for (std::size_t i = 0; i < n; ++i) {
    const bool a = i < per_class;
    const double centre = a ? 1.5 : -1.5;
    pts[2 * i] = centre + uniform(rng, -1.0, 1.0);
    pts[2 * i + 1] = centre + uniform(rng, -1.0, 1.0);
    givens += std::to_string(i) + (a ? ",isA,1\n" : ",isB,1\n");
  }
  write_file(dir / "points.csv", grounding::domain_to_csv(grounding::Domain("P", lang::DomainShape::vector(2), pts)));
  write_file(dir / "givens.csv", givens);
  write_file(dir / "rules.fol", R"(domain P 2
predicate a(P) learnable
predicate b(P) learnable
predicate isA(P) given
predicate isB(P) given
name=pos : forall x: isA(x) implies a(x)
name=neg : forall x: isB(x) implies not a(x)
group=side name=side : forall x: a(x) and b(x)
)");
  return dir;
}

json blob_config() {
  return json{{"name", "blobs"},
              {"seed", 99},
              {"constraints", "rules.fol"},
              {"domains", {{"P", "points.csv"}}},
              {"givens", "givens.csv"},
              {"models",
               {{{"name", "fa"}, {"input", "P"}, {"output", 1}, {"hidden", {8}}},
                {{"name", "fb"}, {"input", "P"}, {"output", 1}, {"hidden", {8}}}}},
              {"bindings", {{"a", "fa"}, {"b", "fb"}}},
              {"disabled", {"side"}},
              {"objectives", {{{"name", "main"}, {"groups", {"main"}}, {"trainable", {"a"}}, {"lr", 0.02}}}},
              {"training", {{"epochs", 150}, {"grounding", "exhaustive"}, {"early_stop", nullptr}}}};
}

std::vector<double> snapshot(const std::vector<ad::ParameterPtr>& params) {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p->value.data.begin(), p->value.data.end());
  return out;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  const auto p = make_param("p", Tensor::vector({0.3, -1.2, 4.0}));
  train::AdamState s;
  s.learning_rate = 0.1;
  for (int k = 0; k < 5; ++k) train::adam_step({p}, {Tensor::zeros({3})}, s);
  EXPECT_EQ(p->value.data, (std::vector<double>{0.3, -1.2, 4.0}));
  EXPECT_EQ(s.step, 5u);
}

TEST(Adam, FirstStepIsBoundedByTheLearningRate) {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    Tensor v = Tensor::zeros({6}), grad = Tensor::zeros({6});
    for (auto& e : v.data) e = uniform(rng, -3, 3);
    for (auto& e : grad.data) e = uniform(rng, -1e3, 1e3);
    const auto p = make_param("p", v);
    train::AdamState s;
    s.learning_rate = uniform(rng, 1e-4, 0.5);
    train::adam_step({p}, {grad}, s);
    for (std::size_t i = 0; i < 6; ++i) {
      const double delta = p->value[i] - v[i];
      EXPECT_LE(std::abs(delta), s.learning_rate * (1 + 1e-9));
      // the first bias-corrected step moves against the gradient sign
      if (grad[i] != 0.0) {
        EXPECT_LT(delta * grad[i], 0.0);
      }
    }
  }
}

TEST(Adam, ShapeMismatch) {
  const auto p = make_param("p", Tensor::vector({1, 2}));
  train::AdamState s;
  EXPECT_EQ(error_of([&] { train::adam_step({p}, {Tensor::zeros({3})}, s); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(error_of([&] { train::adam_step({p}, {}, s); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(p->value.data, (std::vector<double>{1, 2}));
}

TEST(Trainer, SupervisedRunConverges) {
  const auto dir = write_blobs("converge");
  auto ex = train::build_experiment(train::parse_config(blob_config(), dir));
  const auto report = train::train(ex);
  ASSERT_EQ(report.epochs.size(), 150u);
  for (const auto& name : {"pos", "neg"}) EXPECT_GE(report.epochs.back().constraints.at(name).mean_truth, 0.95) << name;

  // window-10 moving average of the cost never rises over the first 50 epochs
  std::vector<double> cost;
  for (const auto& e : report.epochs) cost.push_back(e.objectives.at("main"));
  double prev = INFINITY;
  for (std::size_t end = 10; end <= 50; ++end) {
    double avg = 0.0;
    for (std::size_t k = end - 10; k < end; ++k) avg += cost[k] / 10.0;
    EXPECT_LE(avg, prev + 1e-12) << "window ending at epoch " << end;
    prev = avg;
  }
  std::filesystem::remove_all(dir);
}

TEST(Trainer, ObjectiveUpdatesOnlyItsOwnParameters) {
  const auto dir = write_blobs("frozen", 10);
  auto cfg = blob_config();
  // 'side' reaches both models, but only b is trained by its objective
  cfg["disabled"] = json::array();
  cfg["objectives"] = {{{"name", "main"}, {"groups", {"main"}}, {"trainable", {"a"}}, {"lr", 0.05}},
                       {{"name", "side"}, {"groups", {"side"}}, {"trainable", {"b"}}, {"lr", 0.05}}};
  cfg["training"]["epochs"] = 1;
  auto ex = train::build_experiment(train::parse_config(cfg, dir));

  // run just the side objective for a few steps
  auto only_side = ex;
  only_side.objectives.erase(only_side.objectives.begin());
  only_side.config.training.epochs = 5;
  const auto a_params = only_side.registry.params_of({"a"});
  const auto b_params = only_side.registry.params_of({"b"});
  const auto a_before = snapshot(a_params), b_before = snapshot(b_params);
  train::train(only_side);
  EXPECT_EQ(snapshot(a_params), a_before);
  EXPECT_NE(snapshot(b_params), b_before);
  std::filesystem::remove_all(dir);
}

TEST(Trainer, UnknownTrainableSymbolFailsBeforeTraining) {
  const auto dir = write_blobs("unknown", 5);
  auto cfg = blob_config();
  cfg["objectives"][0]["trainable"] = {"zzz"};
  EXPECT_EQ(error_of([&] { train::build_experiment(train::parse_config(cfg, dir)); }), ErrorCode::UnknownSymbol);
  cfg["objectives"][0]["trainable"] = {"isA"};
  EXPECT_EQ(error_of([&] { train::build_experiment(train::parse_config(cfg, dir)); }), ErrorCode::UnknownSymbol);
  std::filesystem::remove_all(dir);
}

TEST(Trainer, CheckpointReproducesTruthValues) {
  const auto dir = write_blobs("ckpt", 20);
  auto cfg = blob_config();
  cfg["training"]["epochs"] = 10;
  cfg["output_dir"] = (dir / "out").string();
  const auto config = train::parse_config(cfg, dir);
  const auto run = train::run_task(config);
  const auto before = train::evaluate_all(run.experiment, run.experiment.data.train);

  auto fresh = train::build_experiment(config);
  EXPECT_NE(models::checkpoint_string(fresh.registry.params()), models::checkpoint_string(run.experiment.registry.params()));
  models::load_checkpoint((dir / "out" / "checkpoint.json").string(), fresh.registry.params());
  const auto after = train::evaluate_all(fresh, fresh.data.train);
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(before[i].truth, after[i].truth) << before[i].name;
    EXPECT_EQ(before[i].mean_truth, after[i].mean_truth) << before[i].name;
  }
  for (const auto* f : {"checkpoint.json", "report.json", "timing.json"}) EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
  std::filesystem::remove_all(dir);
}

TEST(Trainer, IdenticalRunsAreBitIdentical) {
  const auto dir = write_blobs("determinism", 20);
  auto cfg = blob_config();
  cfg["training"] = {{"epochs", 8}, {"grounding", "minibatch"}, {"batch_size", 16}, {"steps_per_epoch", 2}, {"early_stop", nullptr}};
  const auto config = train::parse_config(cfg, dir);
  const auto r1 = train::run_task(config);
  const auto r2 = train::run_task(config);
  EXPECT_EQ(models::checkpoint_string(r1.experiment.registry.params()), models::checkpoint_string(r2.experiment.registry.params()));
  EXPECT_EQ(r1.report.to_json().dump(), r2.report.to_json().dump());

  cfg["seed"] = 100;
  const auto r3 = train::run_task(train::parse_config(cfg, dir));
  EXPECT_NE(models::checkpoint_string(r1.experiment.registry.params()), models::checkpoint_string(r3.experiment.registry.params()));
  std::filesystem::remove_all(dir);
}

TEST(Trainer, EarlyStopEndsTheRun) {
  const auto dir = write_blobs("early", 20);
  auto cfg = blob_config();
  cfg["training"]["epochs"] = 500;
  cfg["training"]["early_stop"] = 0.9;
  auto ex = train::build_experiment(train::parse_config(cfg, dir));
  const auto report = train::train(ex);
  EXPECT_TRUE(report.stopped_early);
  EXPECT_LT(report.epochs.size(), 500u);
  for (const auto& [n, c] : report.epochs.back().constraints) EXPECT_GT(c.mean_truth, 0.9) << n;
  std::filesystem::remove_all(dir);
}
