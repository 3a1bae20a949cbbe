#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuzzyc/error.hpp"
#include "fuzzyc/models/registry.hpp"
#include "fuzzyc/scenarios/datasets.hpp"
#include "fuzzyc/train/experiment.hpp"
#include "fuzzyc/train/trainer.hpp"

namespace fuzzyc::train {

/// Truth of a learnable unary predicate on each row of `batch`.
inline std::vector<double> predicate_values(const models::ModelRegistry& reg, const std::string& symbol, const Tensor& batch) {
  const auto* b = reg.binding(symbol);
  if (!b || b->kind != models::SymbolBinding::Kind::Model) throw Error(ErrorCode::UnboundSymbol, "'" + symbol + "' has no model");
  const auto out = reg.model(b->model)->apply(batch);
  const std::size_t rows = out.shape[0], cols = out.shape[1];
  std::vector<double> v(rows);
  for (std::size_t r = 0; r < rows; ++r) v[r] = out.data[r * cols + b->column.value_or(0)];
  return v;
}

inline Tensor apply_function(const models::ModelRegistry& reg, const std::string& symbol, const Tensor& batch) {
  const auto* b = reg.binding(symbol);
  if (!b || b->kind != models::SymbolBinding::Kind::Model) throw Error(ErrorCode::UnboundSymbol, "'" + symbol + "' has no model");
  return reg.model(b->model)->apply(batch);
}

/// Index of the largest membership among `predicates` for each row.
inline std::vector<int> classify(const models::ModelRegistry& reg, const std::vector<std::string>& predicates, const Tensor& batch) {
  std::vector<std::vector<double>> scores;
  for (const auto& p : predicates) scores.push_back(predicate_values(reg, p, batch));
  std::vector<int> out(batch.shape[0], 0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t c = 1; c < scores.size(); ++c) {
      if (scores[c][r] > scores[static_cast<std::size_t>(out[r])][r]) out[r] = static_cast<int>(c);
    }
  }
  return out;
}

/// Binary greymap (P5), values clamped to [0,1].
inline void write_pgm(const std::filesystem::path& path, const Tensor& image, std::size_t height, std::size_t width) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << "P5\n" << width << " " << height << "\n255\n";
  for (std::size_t i = 0; i < height * width; ++i) {
    const double v = std::clamp(image.data.at(i), 0.0, 1.0);
    out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
  }
}

/// Tiles rows of images [n, side*side] into a grid of `cols` columns,
/// each pixel scaled up by `zoom`, with a mid-grey gap.
inline Tensor tile_images(const std::vector<Tensor>& cells, std::size_t cols, std::size_t side, std::size_t zoom,
                          std::size_t& height, std::size_t& width) {
  const std::size_t gap = 2, cell = side * zoom;
  const std::size_t rows = (cells.size() + cols - 1) / cols;
  height = rows * cell + (rows + 1) * gap;
  width = cols * cell + (cols + 1) * gap;
  Tensor img = Tensor::filled({height, width}, 0.5);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const std::size_t oy = gap + (k / cols) * (cell + gap), ox = gap + (k % cols) * (cell + gap);
    for (std::size_t y = 0; y < cell; ++y) {
      for (std::size_t x = 0; x < cell; ++x) img.data[(oy + y) * width + ox + x] = cells[k].data[(y / zoom) * side + x / zoom];
    }
  }
  return img;
}

/// Class-transition, cycle and circularity metrics of the digit task on
/// the held-out glyphs.
inline nlohmann::json toy_digits_metrics(const Experiment& ex) {
  const auto& dom = (ex.has_test() ? ex.data.test : ex.data.train).at("Glyph");
  const auto& labels = (ex.has_test() ? ex.data.test_labels : ex.data.train_labels).at("Glyph");
  const std::vector<std::string> classes = {"zero", "one", "two"};
  const auto& reg = ex.registry;
  const auto next = apply_function(reg, "next", dom.data);
  const auto prev = apply_function(reg, "previous", dom.data);
  const auto next_cls = classify(reg, classes, next);
  const auto prev_cls = classify(reg, classes, prev);
  const auto input_cls = classify(reg, classes, dom.data);
  const auto nnn_cls = classify(reg, classes, apply_function(reg, "next", apply_function(reg, "next", next)));
  const auto pn = apply_function(reg, "previous", next);
  const auto np = apply_function(reg, "next", prev);

  std::vector<double> next_ok(3, 0), prev_ok(3, 0), count(3, 0);
  double circular = 0, input_ok = 0, mae_pn = 0, mae_np = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    count[c] += 1;
    if (next_cls[i] == (c + 1) % 3) next_ok[c] += 1;
    if (prev_cls[i] == (c + 2) % 3) prev_ok[c] += 1;
    if (nnn_cls[i] == input_cls[i]) circular += 1;
    if (input_cls[i] == c) input_ok += 1;
  }
  for (std::size_t k = 0; k < dom.data.size(); ++k) {
    mae_pn += std::abs(pn.data[k] - dom.data.data[k]);
    mae_np += std::abs(np.data[k] - dom.data.data[k]);
  }
  nlohmann::json j;
  const double n = static_cast<double>(labels.size());
  double next_min = 1.0, prev_min = 1.0;
  for (int c = 0; c < 3; ++c) {
    const double na = next_ok[c] / count[c], pa = prev_ok[c] / count[c];
    j["next_accuracy"][classes[static_cast<std::size_t>(c)]] = na;
    j["previous_accuracy"][classes[static_cast<std::size_t>(c)]] = pa;
    next_min = std::min(next_min, na);
    prev_min = std::min(prev_min, pa);
  }
  j["next_accuracy_min"] = next_min;
  j["previous_accuracy_min"] = prev_min;
  j["classifier_accuracy"] = input_ok / n;
  j["circularity"] = circular / n;
  j["cycle_mae_previous_next"] = mae_pn / static_cast<double>(dom.data.size());
  j["cycle_mae_next_previous"] = mae_np / static_cast<double>(dom.data.size());
  j["test_size"] = labels.size();
  return j;
}

/// Rows of (input, next(input), previous(input)) for the first few
/// held-out glyphs of each class.
inline void write_toy_grid(const Experiment& ex, const std::filesystem::path& path, std::size_t per_class = 3) {
  const auto& dom = (ex.has_test() ? ex.data.test : ex.data.train).at("Glyph");
  const auto& labels = (ex.has_test() ? ex.data.test_labels : ex.data.train_labels).at("Glyph");
  std::vector<std::size_t> picks;
  for (int c = 0; c < 3; ++c) {
    std::size_t taken = 0;
    for (std::size_t i = 0; i < labels.size() && taken < per_class; ++i) {
      if (labels[i] == c) {
        picks.push_back(i);
        ++taken;
      }
    }
  }
  const auto batch = dom.subset(picks).data;
  const auto next = apply_function(ex.registry, "next", batch);
  const auto prev = apply_function(ex.registry, "previous", batch);
  const std::size_t side = scenarios::kGlyphSide, px = side * side;
  std::vector<Tensor> cells;
  for (std::size_t r = 0; r < picks.size(); ++r) {
    for (const Tensor* src : {&batch, &next, &prev}) {
      cells.emplace_back(Shape{px}, std::vector<double>(src->data.begin() + static_cast<std::ptrdiff_t>(r * px),
                                                        src->data.begin() + static_cast<std::ptrdiff_t>((r + 1) * px)));
    }
  }
  std::size_t h = 0, w = 0;
  const auto grid = tile_images(cells, 3, side, 4, h, w);
  write_pgm(path, grid, h, w);
}

/// Held-out accuracy of Republican on unlabeled people and agreement of
/// married couples.
inline nlohmann::json married_metrics(const Experiment& ex) {
  const auto& dom = ex.data.train.at("People");
  const auto& party = ex.data.train_labels.at("People");
  const auto fr = predicate_values(ex.registry, "Republican", dom.data);
  double held = 0, held_ok = 0, lab = 0, lab_ok = 0;
  for (std::size_t i = 0; i < party.size(); ++i) {
    const bool ok = (fr[i] > 0.5) == (party[i] == 1);
    if (ex.data.labeled[i]) {
      lab += 1;
      lab_ok += ok ? 1 : 0;
    } else {
      held += 1;
      held_ok += ok ? 1 : 0;
    }
  }
  double close = 0, gap_sum = 0;
  for (const auto& [a, b] : ex.data.couples) {
    const double gap = std::abs(fr[a] - fr[b]);
    gap_sum += gap;
    if (gap < 0.2) close += 1;
  }
  const double couples = static_cast<double>(ex.data.couples.size());
  return {{"heldout_accuracy", held_ok / held},
          {"labeled_accuracy", lab_ok / lab},
          {"heldout_size", held},
          {"married_pairs_close", close / couples},
          {"married_mean_gap", gap_sum / couples}};
}

inline nlohmann::json task_metrics(const Experiment& ex) {
  if (ex.config.task == "toy_digits") return toy_digits_metrics(ex);
  if (ex.config.task == "married") return married_metrics(ex);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : evaluate_all(ex, ex.has_test() ? ex.data.test : ex.data.train)) {
    j["constraints"][e.name] = {{"truth", e.truth}, {"mean_truth", e.mean_truth}};
  }
  return j;
}

struct TaskResult {
  Experiment experiment;
  TrainReport report;
};

/// Builds, trains and measures one configured experiment; writes the
/// checkpoint, report and (for the digit task) the image grid when the
/// config names an output directory.
inline TaskResult run_task(const TrainConfig& config, const TrainHooks& hooks = {}) {
  TaskResult r{build_experiment(config), {}};
  r.report = train(r.experiment, hooks);
  if (config.task == "toy_digits" && r.experiment.has_test()) r.experiment.registry.givens() = r.experiment.data.test_givens;
  r.report.metrics = task_metrics(r.experiment);
  r.experiment.registry.givens() = r.experiment.data.train_givens;
  if (!config.output_dir.empty()) {
    write_outputs(r.experiment, r.report, config.output_dir);
    if (config.task == "toy_digits") write_toy_grid(r.experiment, std::filesystem::path(config.output_dir) / "grid.pgm");
  }
  return r;
}

inline TaskResult run_task_toy_digits(TrainConfig config, const TrainHooks& hooks = {}) {
  config.task = "toy_digits";
  return run_task(config, hooks);
}

}  // namespace fuzzyc::train
