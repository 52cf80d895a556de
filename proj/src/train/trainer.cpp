#include "nbloom/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>

#include "nbloom/diff/ops.hpp"
#include "nbloom/error.hpp"

namespace nbloom::train {

using diff::Array;
using diff::Var;

void TrainConfig::validate() const {
  model.validate();
  task.validate();
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be >= 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (eval_period == 0) throw ConfigError("train.eval_period must be >= 1");
  if (eval_episodes == 0) throw ConfigError("train.eval_episodes must be >= 1");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (target_fpr && !(*target_fpr >= 0.0 && *target_fpr <= 1.0)) throw ConfigError("train.target_fpr must lie in [0, 1]");
  if (!(target_fnr >= 0.0 && target_fnr <= 1.0)) throw ConfigError("train.target_fnr must lie in [0, 1]");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("train.clip_norm must be > 0");
  if (model.kind == model::ModelKind::lstm && task.n > model.lstm.max_unroll && !model.lstm.allow_long_unroll) {
    throw ConfigError("task.n = " + std::to_string(task.n) + " exceeds lstm.max_unroll = " +
                      std::to_string(model.lstm.max_unroll) +
                      "; backpropagation through time this long is refused without lstm.allow_long_unroll");
  }
}

double TrainConfig::effective_clip() const {
  if (clip_norm) return *clip_norm;
  return model.kind == model::ModelKind::lstm ? 5.0 : 0.0;
}

EpisodeLoss episode_loss(const model::FamiliarityModel& m, const diff::Bindings& p, const tasks::Episode& ep,
                         model::GraphTrace* trace) {
  if (ep.storage.empty() || ep.queries.empty()) throw DataError("episode needs storage items and queries");
  Var state = m.write_graph(p, ep.storage, trace);
  Var logits = m.query_graph(p, state, ep.queries, trace);
  std::vector<double> labels(ep.labels.begin(), ep.labels.end());
  Var loss = diff::bce_loss(logits, p.tape().constant(Array::vector(std::move(labels))));
  if (!std::isfinite(loss.value().item())) throw Error("non-finite episode loss");
  return {loss, logits};
}

Rates evaluate(const model::FamiliarityModel& m, std::span<const tasks::Episode> episodes, double threshold) {
  Rates r;
  std::size_t fn = 0, fp = 0;
  for (const auto& ep : episodes) {
    const auto logits = m.logits(ep.storage, ep.queries);
    for (std::size_t j = 0; j < logits.size(); ++j) {
      const bool positive = logits[j] >= threshold;
      if (ep.labels[j]) {
        ++r.positives;
        fn += !positive;
      } else {
        ++r.negatives;
        fp += positive;
      }
    }
  }
  r.fnr = r.positives ? static_cast<double>(fn) / static_cast<double>(r.positives) : 0.0;
  r.fpr = r.negatives ? static_cast<double>(fp) / static_cast<double>(r.negatives) : 0.0;
  return r;
}

namespace {

struct StepOutput {
  diff::Gradients grads;
  double loss = 0.0;
  std::vector<Array> raw_queries;
};

StepOutput run_episode(const model::FamiliarityModel& m, const tasks::Episode& ep) {
  diff::Tape tape;
  diff::Bindings p(tape, m.params());
  model::GraphTrace trace;
  const EpisodeLoss l = episode_loss(m, p, ep, &trace);
  tape.backward(l.loss);
  StepOutput out;
  out.grads = p.gradients();
  out.loss = l.loss.value().item();
  for (const Var& v : trace.raw_queries) out.raw_queries.push_back(v.value());
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const tasks::Dataset& train_data, const tasks::Dataset& eval_data,
                  std::unique_ptr<model::FamiliarityModel> initial) {
  config.validate();
  TrainResult result;
  result.model = initial ? std::move(initial) : model::make_model(config.model, splitmix64(config.seed ^ 0x6d6f64656cULL));
  model::FamiliarityModel& m = *result.model;

  diff::AdamState adam;
  adam.config.learning_rate = config.learning_rate;
  const double clip = config.effective_clip();
  const Rng root(config.seed);

  // Fixed validation episodes, identical at every evaluation.
  std::vector<tasks::Episode> eval_eps;
  Rng eval_rng = root.split(0xe7a1);
  for (std::size_t i = 0; i < config.eval_episodes; ++i) eval_eps.push_back(tasks::sample_episode(config.task, eval_data, eval_rng));

  const auto start = std::chrono::steady_clock::now();
  diff::ParamStore last_good = m.params();
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  auto log_eval = [&](std::size_t step) {
    const Rates r = evaluate(m, eval_eps);
    LogRow row;
    row.step = step;
    row.loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    row.eval_fnr = r.fnr;
    row.eval_fpr = r.fpr;
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(row);
    loss_sum = 0.0;
    loss_count = 0;
    return r;
  };

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    std::vector<tasks::Episode> batch;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      Rng r = root.split(step * config.batch_size + b);
      batch.push_back(tasks::sample_episode(config.task, train_data, r));
    }
    std::vector<StepOutput> outs(batch.size());
    try {
      if (config.workers > 1) {
        std::vector<std::future<void>> jobs;
        for (std::size_t w = 0; w < config.workers; ++w) {
          jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t b = w; b < batch.size(); b += config.workers) outs[b] = run_episode(m, batch[b]);
          }));
        }
        for (auto& j : jobs) j.get();
      } else {
        for (std::size_t b = 0; b < batch.size(); ++b) outs[b] = run_episode(m, batch[b]);
      }
      // Serial reduction in episode order keeps results independent of workers.
      diff::Gradients grads;
      double step_loss = 0.0;
      std::vector<Array> raw;
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (auto& o : outs) {
        diff::accumulate(grads, o.grads, scale);
        step_loss += o.loss * scale;
        for (auto& a : o.raw_queries) raw.push_back(std::move(a));
      }
      if (clip > 0.0) diff::clip_global_norm(grads, clip);
      diff::adam_step(m.params(), grads, adam);
      m.observe_training(raw);
      for (const auto& [name, v] : m.params().arrays()) {
        if (!v.all_finite()) throw Error("non-finite parameter '" + name + "' after update");
      }
      loss_sum += step_loss;
      ++loss_count;
      last_good = m.params();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::runtime) throw;
      m.params() = last_good;
      result.diverged = true;
      result.diagnostic = "step " + std::to_string(step) + ": " + e.what();
      result.steps = step - 1;
      log_eval(step - 1);
      return result;
    }
    result.steps = step;
    if (step % config.eval_period == 0 || step == config.max_steps) {
      const Rates r = log_eval(step);
      if (config.target_fpr && r.fpr <= *config.target_fpr && r.fnr <= config.target_fnr) {
        result.early_stopped = step < config.max_steps;
        break;
      }
    }
  }
  if (config.max_steps == 0) log_eval(0);
  return result;
}

void write_log_csv(std::ostream& out, const std::vector<LogRow>& log) {
  out << "step,loss,eval_fnr,eval_fpr,wall_seconds\n";
  out << std::setprecision(10);
  for (const auto& r : log) {
    out << r.step << ',' << r.loss << ',' << r.eval_fnr << ',' << r.eval_fpr << ',' << std::setprecision(6)
        << r.wall_seconds << std::setprecision(10) << '\n';
  }
}

}  // namespace nbloom::train
