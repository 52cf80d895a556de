#include "nbloom/cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nbloom/bench/report.hpp"
#include "nbloom/filters/sizing.hpp"
#include "nbloom/model/nbf.hpp"

namespace nbloom::cli {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"config", config},   {"config_hash", config_hash}, {"seed", seed},
          {"workers", workers}, {"artifacts", artifacts}, {"version", version}};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::runtime: return 4;
  }
  return 4;
}

json error_json(const Error& e) {
  const char* kind = e.kind() == ErrorKind::config ? "config" : e.kind() == ErrorKind::data ? "data" : "runtime";
  return {{"error", {{"kind", kind}, {"message", e.what()}}}, {"exit_code", exit_code(e.kind())}};
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f.flush()) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot rename into " + path.string());
  }
}

fs::path resolve_out_dir(const fs::path& requested) {
  if (!requested.empty()) return requested;
  if (const char* env = std::getenv("NBF_BENCH_OUT"); env != nullptr && *env != '\0') return env;
  return "nbf_out";
}

RunConfig resolve_config(const CliOptions& options) {
  auto overrides = options.overrides;
  if (options.seed) overrides.push_back("seed=" + std::to_string(*options.seed));
  return parse_config(options.config_path, overrides);
}

void save_checkpoint(const fs::path& path, const model::FamiliarityModel& m) {
  const auto bytes = m.params().serialize();
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
  write_file_atomic(path.string() + ".model.json", to_json(m.config()).dump(2) + "\n");
}

std::unique_ptr<model::FamiliarityModel> load_checkpoint(const fs::path& path) {
  if (path.empty() || !fs::exists(path)) throw DataError("checkpoint not found: " + path.string());
  const fs::path sidecar = path.string() + ".model.json";
  if (!fs::exists(sidecar)) throw DataError("checkpoint model config not found: " + sidecar.string());
  std::ifstream in(sidecar);
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("checkpoint model config is not valid JSON: " + sidecar.string());
  model::ModelConfig config;
  try {
    config = model_from_json(j);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint model config: ") + e.what());
  }
  return model::restore_model(config, diff::ParamStore::load(path));
}

std::string manifest_name(const std::string& command) { return command + "_manifest.json"; }

namespace {

struct Run {
  const CliOptions& options;
  RunConfig config;
  fs::path dir;
  RunManifest manifest;
  std::ostream& out;

  fs::path file(const std::string& name) const { return dir / name; }

  void write_manifest() const { write_file_atomic(file(manifest_name(manifest.command)), manifest.to_json().dump(2) + "\n"); }

  void write_json(const std::string& name, const json& j) const { write_file_atomic(file(name), j.dump(2) + "\n"); }

  void write_text(const std::string& name, const std::string& text) const { write_file_atomic(file(name), text); }
};

struct Data {
  tasks::Dataset all;
  tasks::Split split;
  const tasks::Dataset& eval() const { return split.test; }
};

Data load_data(const RunConfig& c) {
  Data d;
  d.all = tasks::load_source(c.data.source, c.seed);
  d.split = tasks::split_dataset(d.all, c.data.test_fraction, c.seed);
  if (c.data.eval_on_train) d.split.test = d.split.train;
  return d;
}

std::vector<std::size_t> eval_sizes(const RunConfig& c) {
  return c.eval.sizes.empty() ? std::vector<std::size_t>{c.task.n} : c.eval.sizes;
}

fs::path checkpoint_path(const Run& run, const std::string& configured) {
  return configured.empty() ? run.file("checkpoint.nbp") : fs::path(configured);
}

void cmd_gen_data(Run& run) {
  run.manifest.artifacts = {"data_manifest.json"};
  run.write_manifest();
  const auto data = tasks::load_source(run.config.data.source, run.config.seed);
  const auto j = tasks::dataset_manifest(run.config.data.source, data, run.config.seed);
  run.write_json("data_manifest.json", j);
  run.out << j.dump() << "\n";
}

void cmd_train(Run& run) {
  run.manifest.artifacts = {"checkpoint.nbp", "checkpoint.nbp.model.json", "train_log.csv", "train_summary.json"};
  run.write_manifest();
  const Data data = load_data(run.config);
  const auto result =
      train::train(run.config.train_config(run.options.workers), data.split.train, data.eval());
  save_checkpoint(run.file("checkpoint.nbp"), *result.model);
  std::ostringstream log;
  train::write_log_csv(log, result.log);
  run.write_text("train_log.csv", log.str());
  json summary = {{"model", model::to_string(run.config.model.kind)},
                  {"task", tasks::to_string(run.config.task.kind)},
                  {"config_hash", run.manifest.config_hash},
                  {"steps", result.steps},
                  {"early_stopped", result.early_stopped},
                  {"diverged", result.diverged},
                  {"diagnostic", result.diagnostic},
                  {"params", result.model->param_count()}};
  if (!result.log.empty()) {
    summary["final_eval_fpr"] = result.log.back().eval_fpr;
    summary["final_eval_fnr"] = result.log.back().eval_fnr;
  }
  run.write_json("train_summary.json", summary);
  run.out << summary.dump() << "\n";
  if (result.diverged) throw Error("training diverged (" + result.diagnostic + "); last finite parameters saved");
}

void cmd_eval(Run& run) {
  const fs::path ckpt = checkpoint_path(run, run.config.eval.checkpoint);
  run.manifest.artifacts = {"eval_report.json", "eval_curve.csv"};
  run.write_manifest();
  const auto m = load_checkpoint(ckpt);
  const Data data = load_data(run.config);
  const auto& c = run.config;
  const auto opts = c.curve_options();
  const std::size_t n = c.task.n;

  // Operating point and one composite with measured rates at the task size.
  const auto calibration = bench::calibrate_threshold(
      *m, bench::task_episodes(c.task, data.eval(), n, splitmix64(c.seed ^ 0xca11)), c.eval.alpha / 2.0,
      c.eval.calibration_negatives);
  bench::CompositeOracle oracle(*m, calibration.threshold, c.eval.alpha / 2.0, c.eval.precision);
  const auto rates =
      bench::measure_fpr_fnr(oracle, bench::task_episodes(c.task, data.eval(), n, splitmix64(c.seed ^ 0x7e57)),
                             c.eval.query_budget);
  auto space = bench::total_space(oracle.current, c.eval.alpha);
  space.measured_fpr = rates.fpr.rate;
  space.fpr_ci_low = rates.fpr.ci_low;
  space.fpr_ci_high = rates.fpr.ci_high;

  const bench::NeuralArtifact artifact{model::to_string(m->kind()), m.get()};
  const auto sizes = eval_sizes(c);
  auto curve_opts = opts;
  curve_opts.classical = true;
  const auto curve = bench::space_curve(std::span(&artifact, 1), c.task, data.eval(), data.eval(), sizes, curve_opts);
  std::ostringstream csv;
  bench::write_curve_csv(csv, curve);
  run.write_text("eval_curve.csv", csv.str());

  json rows = json::array();
  for (const auto& r : curve) rows.push_back(bench::to_json(r));
  const json report = {{"task", tasks::to_string(c.task.kind)},
                       {"model", model::to_string(m->kind())},
                       {"config_hash", run.manifest.config_hash},
                       {"checkpoint", ckpt.string()},
                       {"threshold", calibration.threshold},
                       {"calibration_negatives", calibration.negatives},
                       {"validation_fpr", calibration.validation_fpr},
                       {"space", space.to_json()},
                       {"rates", bench::to_json(rates)},
                       {"params", bench::to_json(bench::param_count(*m, c.eval.precision))},
                       {"curve", rows}};
  run.write_json("eval_report.json", report);
  run.out << report["space"].dump() << "\n";
}

void cmd_sweep(Run& run) {
  run.manifest.artifacts = {"sweep_results.csv", "best_config.json", "checkpoint.nbp", "checkpoint.nbp.model.json"};
  run.write_manifest();
  const Data data = load_data(run.config);
  train::SweepOptions o;
  o.alpha = run.config.eval.alpha;
  o.curve = run.config.curve_options();
  const auto result = train::sweep(run.config.sweep, run.config.train_config(run.options.workers), data.split.train,
                                   data.eval(), o);
  std::ostringstream csv;
  train::write_sweep_csv(csv, result.rows);
  run.write_text("sweep_results.csv", csv.str());
  RunConfig best = run.config;
  const auto& cell = result.rows[result.best].cell;
  best.model = cell.config.model;
  best.train.learning_rate = cell.config.learning_rate;
  json j = to_json(best);
  run.write_json("best_config.json", j);
  save_checkpoint(run.file("checkpoint.nbp"), *result.best_model);
  run.out << json{{"best", result.best}, {"total_bits", result.rows[result.best].total_bits}}.dump() << "\n";
}

std::vector<tasks::Item> bench_items(const tasks::Dataset& data, std::size_t count) {
  std::vector<tasks::Item> items;
  items.reserve(count);
  for (std::size_t i = 0; i < count; ++i) items.push_back(data.items()[i % data.items().size()]);
  return items;
}

void cmd_bench(Run& run) {
  run.manifest.artifacts = {"timing.csv", "bench_report.json"};
  run.write_manifest();
  const auto& c = run.config;
  const auto data = tasks::load_source(c.data.source, c.seed);
  const std::size_t largest = *std::max_element(c.bench.batches.begin(), c.bench.batches.end());
  const auto items = bench_items(data, largest);

  std::unique_ptr<model::FamiliarityModel> trained;
  if (!c.bench.checkpoint.empty()) trained = load_checkpoint(c.bench.checkpoint);

  bench::TimingOptions t;
  t.batches = c.bench.batches;
  t.runs = c.bench.runs;
  t.warmup = c.bench.warmup;
  std::vector<bench::TimingRow> rows;
  json params = json::object();
  for (const auto& name : c.bench.artifacts) {
    std::unique_ptr<bench::TimedArtifact> artifact;
    std::unique_ptr<model::FamiliarityModel> fresh;
    if (name == "bloom") {
      artifact = std::make_unique<bench::BloomTimed>(largest, c.bench.epsilon, c.seed);
    } else if (name == "cuckoo") {
      artifact = std::make_unique<bench::CuckooTimed>(largest, c.bench.epsilon, c.seed);
    } else {
      const auto kind = model::parse_model_kind(name);
      const model::FamiliarityModel* m = nullptr;
      if (trained && trained->kind() == kind) {
        m = trained.get();
      } else {
        model::ModelConfig mc = c.model;
        mc.kind = kind;
        fresh = model::make_model(mc, c.seed);
        m = fresh.get();
      }
      params[name] = bench::to_json(bench::param_count(*m, c.eval.precision));
      artifact = std::make_unique<bench::ModelTimed>(*m, name);
    }
    auto r = bench::timing_bench(*artifact, items, t);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::ostringstream csv;
  bench::write_timing_csv(csv, rows);
  run.write_text("timing.csv", csv.str());
  json timing = json::array();
  for (const auto& r : rows) timing.push_back(bench::to_json(r));
  run.write_json("bench_report.json", {{"config_hash", run.manifest.config_hash},
                                       {"workers", run.options.workers},
                                       {"timing", timing},
                                       {"params", params}});
  run.out << csv.str();
}

void cmd_compare(Run& run) {
  run.manifest.artifacts = {"compare.csv", "compare.json"};
  run.write_manifest();
  const auto& c = run.config;
  std::vector<std::unique_ptr<model::FamiliarityModel>> models;
  std::vector<bench::NeuralArtifact> artifacts;
  for (std::size_t i = 0; i < c.compare.checkpoints.size(); ++i) {
    models.push_back(load_checkpoint(c.compare.checkpoints[i]));
    artifacts.push_back({model::to_string(models.back()->kind()) + "_" + std::to_string(i), models.back().get()});
  }
  const Data data = load_data(c);
  auto o = c.curve_options();
  o.classical = c.compare.classical;
  const auto rows = bench::space_curve(artifacts, c.task, data.eval(), data.eval(), eval_sizes(c), o);
  std::ostringstream csv;
  bench::write_curve_csv(csv, rows);
  run.write_text("compare.csv", csv.str());
  json j = json::array();
  for (const auto& r : rows) j.push_back(bench::to_json(r));
  run.write_json("compare.json", {{"task", tasks::to_string(c.task.kind)},
                                  {"config_hash", run.manifest.config_hash},
                                  {"alpha", c.eval.alpha},
                                  {"rows", j}});
  run.out << csv.str();
}

}  // namespace

int run_command(const CliOptions& options, std::ostream& out, std::ostream& err) {
  fs::path dir;
  try {
    if (std::find(kCommands.begin(), kCommands.end(), options.command) == kCommands.end()) {
      throw ConfigError("unknown command '" + options.command + "'");
    }
    if (options.workers == 0) throw ConfigError("--workers must be >= 1");
    RunConfig config = resolve_config(options);
    dir = resolve_out_dir(options.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());

    Run run{options, config, dir, {}, out};
    run.manifest.command = options.command;
    run.manifest.config = to_json(config);
    run.manifest.config_hash = config_hash(config);
    run.manifest.seed = config.seed;
    run.manifest.workers = options.workers;

    if (options.command == "train") {
      cmd_train(run);
    } else if (options.command == "eval") {
      cmd_eval(run);
    } else if (options.command == "sweep") {
      cmd_sweep(run);
    } else if (options.command == "bench") {
      cmd_bench(run);
    } else if (options.command == "compare") {
      cmd_compare(run);
    } else {
      cmd_gen_data(run);
    }
    return 0;
  } catch (const Error& e) {
    const json j = error_json(e);
    err << j.dump() << "\n";
    if (!dir.empty() && fs::is_directory(dir)) {
      try {
        write_file_atomic(dir / "error.json", j.dump(2) + "\n");
      } catch (const Error&) {
      }
    }
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    const json j = {{"error", {{"kind", "runtime"}, {"message", e.what()}}}, {"exit_code", 4}};
    err << j.dump() << "\n";
    return 4;
  }
}

}  // namespace nbloom::cli
