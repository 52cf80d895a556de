#include "nbloom/train/sweep.hpp"

#include <ostream>

#include "nbloom/bench/report.hpp"
#include "nbloom/error.hpp"

namespace nbloom::train {

SweepGrid SweepGrid::reference() {
  SweepGrid g;
  g.slots = {2, 4, 8, 16, 32, 64};
  g.word_sizes = {2, 4, 6, 8, 10};
  g.hidden = {2, 4, 8, 16, 32, 64};
  g.zca_eta = {0.9, 0.95, 0.99};
  g.learning_rates = {1e-4, 5e-5};
  return g;
}

void SweepGrid::validate() const {
  auto nonempty = [](bool empty, const char* axis) {
    if (empty) throw ConfigError(std::string("sweep.") + axis + " must not be empty");
  };
  nonempty(slots.empty(), "slots");
  nonempty(word_sizes.empty(), "word_sizes");
  nonempty(hidden.empty(), "hidden");
  nonempty(zca_eta.empty(), "zca_eta");
  nonempty(learning_rates.empty(), "learning_rates");
  for (auto v : slots) {
    if (v == 0) throw ConfigError("sweep.slots entries must be >= 1");
  }
  for (auto v : word_sizes) {
    if (v == 0) throw ConfigError("sweep.word_sizes entries must be >= 1");
  }
  for (auto v : hidden) {
    if (v == 0) throw ConfigError("sweep.hidden entries must be >= 1");
  }
  for (auto v : zca_eta) {
    if (!(v >= 0.0 && v < 1.0)) throw ConfigError("sweep.zca_eta entries must lie in [0, 1)");
  }
  for (auto v : learning_rates) {
    if (!(v > 0.0)) throw ConfigError("sweep.learning_rates entries must be > 0");
  }
}

nlohmann::json SweepGrid::to_json() const {
  return {{"slots", slots},
          {"word_sizes", word_sizes},
          {"hidden", hidden},
          {"zca_eta", zca_eta},
          {"learning_rates", learning_rates}};
}

SweepGrid SweepGrid::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sweep: expected an object");
  SweepGrid g = reference();
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "slots") {
        g.slots = value.get<std::vector<std::size_t>>();
      } else if (key == "word_sizes") {
        g.word_sizes = value.get<std::vector<std::size_t>>();
      } else if (key == "hidden") {
        g.hidden = value.get<std::vector<std::size_t>>();
      } else if (key == "zca_eta") {
        g.zca_eta = value.get<std::vector<double>>();
      } else if (key == "learning_rates") {
        g.learning_rates = value.get<std::vector<double>>();
      } else {
        throw ConfigError("sweep: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("sweep." + key + ": expected a list of numbers");
    }
  }
  g.validate();
  return g;
}

std::vector<SweepCell> sweep_cells(const SweepGrid& grid, const TrainConfig& base) {
  grid.validate();
  const auto& m = base.model;
  const bool nbf = m.kind == model::ModelKind::nbf;
  const bool lstm = m.kind == model::ModelKind::lstm;
  const bool memnet = m.kind == model::ModelKind::memnet;
  const std::vector<std::size_t> slots = nbf ? grid.slots : std::vector<std::size_t>{m.nbf.slots};
  const std::vector<std::size_t> words =
      nbf ? grid.word_sizes : memnet ? grid.word_sizes : std::vector<std::size_t>{m.nbf.word_size};
  const std::vector<std::size_t> hidden = lstm ? grid.hidden : std::vector<std::size_t>{m.lstm.hidden};
  const std::vector<double> etas = nbf && m.nbf.sphering ? grid.zca_eta : std::vector<double>{m.nbf.zca.eta};

  std::vector<SweepCell> cells;
  for (auto s : slots) {
    for (auto w : words) {
      for (auto h : hidden) {
        for (auto eta : etas) {
          for (auto lr : grid.learning_rates) {
            SweepCell c;
            c.config = base;
            c.config.learning_rate = lr;
            c.slots = s;
            c.word_size = w;
            c.hidden = h;
            c.zca_eta = eta;
            if (nbf) {
              c.config.model.nbf.slots = s;
              c.config.model.nbf.word_size = w;
              c.config.model.nbf.zca.eta = eta;
              if (c.config.model.nbf.k_addr >= s) c.config.model.nbf.k_addr = 0;
            } else if (memnet) {
              c.config.model.memnet.word_size = w;
            } else {
              c.config.model.lstm.hidden = h;
            }
            cells.push_back(std::move(c));
          }
        }
      }
    }
  }
  return cells;
}

std::size_t select_best(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ConfigError("sweep: no results to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = rows[best];
    if (a.total_bits < b.total_bits || (a.total_bits == b.total_bits && a.params < b.params)) best = i;
  }
  return best;
}

SweepResult sweep(const SweepGrid& grid, const TrainConfig& base, const tasks::Dataset& train_data,
                  const tasks::Dataset& validation, const SweepOptions& options) {
  const auto cells = sweep_cells(grid, base);
  const std::size_t n = options.eval_n ? options.eval_n : base.task.n;
  auto curve = options.curve;
  curve.alpha = options.alpha;
  curve.classical = false;

  SweepResult result;
  std::vector<std::unique_ptr<model::FamiliarityModel>> models;
  for (const auto& cell : cells) {
    TrainResult trained = train(cell.config, train_data, validation);
    SweepRow row;
    row.cell = cell;
    row.params = trained.model->param_count();
    row.steps = trained.steps;
    row.diverged = trained.diverged;
    const bench::NeuralArtifact artifact{"cell", trained.model.get()};
    const std::vector<std::size_t> sizes{n};
    const auto rows = bench::space_curve(std::span(&artifact, 1), cell.config.task, validation, validation, sizes, curve);
    row.total_bits = rows.front().total_bits;
    row.fpr = rows.front().fpr;
    row.fnr = rows.front().fnr;
    result.rows.push_back(row);
    models.push_back(std::move(trained.model));
  }
  result.best = select_best(result.rows);
  result.best_model = std::move(models[result.best]);
  return result;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  bench::CsvTable t;
  t.header = {"slots", "word_size", "hidden", "zca_eta", "learning_rate", "total_bits", "fpr", "fnr", "params",
              "steps", "diverged"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.cell.slots), std::to_string(r.cell.word_size), std::to_string(r.cell.hidden),
                      bench::format_number(r.cell.zca_eta), bench::format_number(r.cell.config.learning_rate),
                      bench::format_number(r.total_bits), bench::format_number(r.fpr), bench::format_number(r.fnr),
                      std::to_string(r.params), std::to_string(r.steps), r.diverged ? "1" : "0"});
  }
  bench::write_csv(out, t);
}

}  // namespace nbloom::train
