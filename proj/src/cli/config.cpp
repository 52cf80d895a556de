#include "nbloom/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nbloom/bench/space.hpp"
#include "nbloom/error.hpp"
#include "nbloom/hash.hpp"

namespace nbloom::cli {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Typed field readers over a fully merged document; `path` names the key in errors.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  Reader section(const char* key) const { return Reader(obj_.at(key), name(key)); }

  std::size_t count(const char* key) const {
    const json& v = obj_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(name(key) + ": expected a non-negative integer, got " + v.dump());
    }
    return v.get<std::size_t>();
  }
  std::uint64_t u64(const char* key) const { return count(key); }
  double number(const char* key) const {
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(name(key) + ": expected a number, got " + v.dump());
    return v.get<double>();
  }
  std::optional<double> maybe_number(const char* key) const {
    if (obj_.at(key).is_null()) return std::nullopt;
    return number(key);
  }
  bool boolean(const char* key) const {
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(name(key) + ": expected true or false, got " + v.dump());
    return v.get<bool>();
  }
  std::string string(const char* key) const {
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(name(key) + ": expected a string, got " + v.dump());
    return v.get<std::string>();
  }
  std::vector<std::size_t> counts(const char* key) const {
    const json& v = obj_.at(key);
    std::vector<std::size_t> out;
    if (!v.is_array()) throw ConfigError(name(key) + ": expected a list of integers");
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) throw ConfigError(name(key) + ": expected a list of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }
  std::vector<std::string> strings(const char* key) const {
    const json& v = obj_.at(key);
    std::vector<std::string> out;
    if (!v.is_array()) throw ConfigError(name(key) + ": expected a list of strings");
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(name(key) + ": expected a list of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  template <class F>
  auto parse(const char* key, F&& f) const {
    const std::string s = string(key);
    try {
      return f(s);
    } catch (const ConfigError& e) {
      throw ConfigError(name(key) + ": " + e.what());
    }
  }
  const json& raw(const char* key) const { return obj_.at(key); }

 private:
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& obj_;
  std::string path_;
};

bool compatible(const json& def, const json& v) {
  if (def.is_null()) return v.is_null() || v.is_number();
  if (def.is_number()) return v.is_number();
  if (def.is_object()) return v.is_object();
  if (def.is_array()) return v.is_array();
  return def.type() == v.type();
}

void merge(json& into, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string name = path.empty() ? key : path + "." + key;
    if (!into.contains(key)) throw ConfigError("unknown key '" + name + "'");
    json& slot = into[key];
    if (!compatible(slot, value)) {
      throw ConfigError(name + ": expected " + std::string(slot.is_null() ? "number" : slot.type_name()) + ", got " +
                        value.dump());
    }
    if (slot.is_object() && path.empty() && key == "sweep") {
      slot = value;  // validated as a grid below
    } else if (slot.is_object()) {
      merge(slot, value, name);
    } else {
      slot = value;
    }
  }
}

}  // namespace

json to_json(const model::ModelConfig& m) {
  return {{"model", model::to_string(m.kind)},
          {"encoder",
           {{"kind", model::to_string(m.encoder.kind)},
            {"input_dim", m.encoder.input_dim},
            {"hidden", m.encoder.hidden},
            {"buckets", m.encoder.buckets},
            {"max_chars", m.encoder.max_chars}}},
          {"nbf",
           {{"m_slots", m.nbf.slots},
            {"word_size", m.nbf.word_size},
            {"query_dim", m.nbf.query_dim},
            {"hidden", m.nbf.hidden},
            {"address", model::to_string(m.nbf.address_mode)},
            {"k_addr", m.nbf.k_addr},
            {"sphering", m.nbf.sphering},
            {"zca",
             {{"gamma", m.nbf.zca.gamma},
              {"eta", m.nbf.zca.eta},
              {"period", m.nbf.zca.period},
              {"epsilon", m.nbf.zca.epsilon}}}}},
          {"lstm",
           {{"hidden", m.lstm.hidden},
            {"query_hidden", m.lstm.query_hidden},
            {"max_unroll", m.lstm.max_unroll},
            {"allow_long_unroll", m.lstm.allow_long_unroll}}},
          {"memnet", {{"word_size", m.memnet.word_size}}}};
}

json to_json(const RunConfig& c) {
  json j = to_json(c.model);
  const auto& s = c.data.source;
  j["seed"] = c.seed;
  j["data"] = {{"source", tasks::to_string(s.kind)},
               {"classes", s.clusters.classes},
               {"dim", s.clusters.dim},
               {"per_class", s.clusters.per_class},
               {"noise", s.clusters.noise},
               {"token_count", s.tokens.count},
               {"min_length", s.tokens.min_length},
               {"max_length", s.tokens.max_length},
               {"images", s.images_path},
               {"labels", s.labels_path},
               {"token_file", s.token_path},
               {"test_fraction", c.data.test_fraction},
               {"eval_on_train", c.data.eval_on_train}};
  j["task"] = {{"kind", tasks::to_string(c.task.kind)},
               {"n", c.task.n},
               {"n_min", c.task.n_min},
               {"t", c.task.t},
               {"positive_fraction", optional_number(c.task.positive_fraction)},
               {"decay", c.task.decay}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"max_steps", c.train.max_steps},
                {"eval_period", c.train.eval_period},
                {"eval_episodes", c.train.eval_episodes},
                {"target_fpr", optional_number(c.train.target_fpr)},
                {"target_fnr", c.train.target_fnr},
                {"clip_norm", optional_number(c.train.clip_norm)}};
  j["eval"] = {{"alpha", c.eval.alpha},
               {"precision", c.eval.precision},
               {"query_budget", c.eval.query_budget},
               {"calibration_negatives", c.eval.calibration_negatives},
               {"sizes", c.eval.sizes},
               {"checkpoint", c.eval.checkpoint}};
  j["bench"] = {{"batches", c.bench.batches},
                {"runs", c.bench.runs},
                {"warmup", c.bench.warmup},
                {"artifacts", c.bench.artifacts},
                {"epsilon", c.bench.epsilon},
                {"checkpoint", c.bench.checkpoint}};
  j["compare"] = {{"checkpoints", c.compare.checkpoints}, {"classical", c.compare.classical}};
  j["sweep"] = c.sweep.to_json();
  return j;
}

RunConfig from_json(const json& user) {
  json doc = to_json(RunConfig{});
  merge(doc, user, "");
  const Reader r(doc, "");
  RunConfig c;
  c.seed = r.u64("seed");

  c.model.kind = r.parse("model", model::parse_model_kind);
  const Reader enc = r.section("encoder");
  c.model.encoder.kind = enc.parse("kind", model::parse_encoder_kind);
  c.model.encoder.input_dim = enc.count("input_dim");
  c.model.encoder.hidden = enc.count("hidden");
  c.model.encoder.buckets = enc.count("buckets");
  c.model.encoder.max_chars = enc.count("max_chars");
  const Reader nbf = r.section("nbf");
  c.model.nbf.slots = nbf.count("m_slots");
  c.model.nbf.word_size = nbf.count("word_size");
  c.model.nbf.query_dim = nbf.count("query_dim");
  c.model.nbf.hidden = nbf.count("hidden");
  c.model.nbf.address_mode = nbf.parse("address", model::parse_address_mode);
  c.model.nbf.k_addr = nbf.count("k_addr");
  c.model.nbf.sphering = nbf.boolean("sphering");
  const Reader zca = nbf.section("zca");
  c.model.nbf.zca.gamma = zca.number("gamma");
  c.model.nbf.zca.eta = zca.number("eta");
  c.model.nbf.zca.period = zca.count("period");
  c.model.nbf.zca.epsilon = zca.number("epsilon");
  const Reader lstm = r.section("lstm");
  c.model.lstm.hidden = lstm.count("hidden");
  c.model.lstm.query_hidden = lstm.count("query_hidden");
  c.model.lstm.max_unroll = lstm.count("max_unroll");
  c.model.lstm.allow_long_unroll = lstm.boolean("allow_long_unroll");
  c.model.memnet.word_size = r.section("memnet").count("word_size");

  const Reader data = r.section("data");
  auto& s = c.data.source;
  s.kind = data.parse("source", tasks::parse_source_kind);
  s.clusters.classes = data.count("classes");
  s.clusters.dim = data.count("dim");
  s.clusters.per_class = data.count("per_class");
  s.clusters.noise = data.number("noise");
  s.tokens.count = data.count("token_count");
  s.tokens.min_length = data.count("min_length");
  s.tokens.max_length = data.count("max_length");
  s.images_path = data.string("images");
  s.labels_path = data.string("labels");
  s.token_path = data.string("token_file");
  c.data.test_fraction = data.number("test_fraction");
  c.data.eval_on_train = data.boolean("eval_on_train");

  const Reader task = r.section("task");
  c.task.kind = task.parse("kind", tasks::parse_task_kind);
  c.task.n = task.count("n");
  c.task.n_min = task.count("n_min");
  c.task.t = task.count("t");
  c.task.positive_fraction = task.maybe_number("positive_fraction");
  c.task.decay = task.number("decay");

  const Reader tr = r.section("train");
  c.train.learning_rate = tr.number("learning_rate");
  c.train.batch_size = tr.count("batch_size");
  c.train.max_steps = tr.count("max_steps");
  c.train.eval_period = tr.count("eval_period");
  c.train.eval_episodes = tr.count("eval_episodes");
  c.train.target_fpr = tr.maybe_number("target_fpr");
  c.train.target_fnr = tr.number("target_fnr");
  c.train.clip_norm = tr.maybe_number("clip_norm");

  const Reader ev = r.section("eval");
  c.eval.alpha = ev.number("alpha");
  c.eval.precision = static_cast<unsigned>(ev.count("precision"));
  c.eval.query_budget = ev.count("query_budget");
  c.eval.calibration_negatives = ev.count("calibration_negatives");
  c.eval.sizes = ev.counts("sizes");
  c.eval.checkpoint = ev.string("checkpoint");

  const Reader b = r.section("bench");
  c.bench.batches = b.counts("batches");
  c.bench.runs = b.count("runs");
  c.bench.warmup = b.count("warmup");
  c.bench.artifacts = b.strings("artifacts");
  c.bench.epsilon = b.number("epsilon");
  c.bench.checkpoint = b.string("checkpoint");

  const Reader cmp = r.section("compare");
  c.compare.checkpoints = cmp.strings("checkpoints");
  c.compare.classical = cmp.boolean("classical");

  c.sweep = train::SweepGrid::from_json(doc.at("sweep"));
  c.validate();
  return c;
}

model::ModelConfig model_from_json(const json& j) {
  json subset = json::object();
  for (const char* key : {"model", "encoder", "nbf", "lstm", "memnet"}) {
    if (j.contains(key)) subset[key] = j.at(key);
  }
  return from_json(subset).model;
}

void RunConfig::validate() const {
  model.validate();
  task.validate();
  train_config().validate();
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) throw ConfigError("data.test_fraction must lie in (0, 1)");
  if (!(eval.alpha > 0.0 && eval.alpha < 1.0)) throw ConfigError("eval.alpha must lie in (0, 1)");
  bench::validate_precision(eval.precision);
  if (eval.query_budget < 1000) throw ConfigError("eval.query_budget must be >= 1000");
  if (eval.calibration_negatives == 0) throw ConfigError("eval.calibration_negatives must be >= 1");
  for (auto n : eval.sizes) {
    if (n == 0) throw ConfigError("eval.sizes entries must be >= 1");
  }
  if (bench.runs < 5) throw ConfigError("bench.runs must be >= 5");
  if (bench.warmup < 1) throw ConfigError("bench.warmup must be >= 1");
  if (bench.batches.empty()) throw ConfigError("bench.batches must not be empty");
  for (auto n : bench.batches) {
    if (n == 0) throw ConfigError("bench.batches entries must be >= 1");
  }
  for (const auto& a : bench.artifacts) {
    if (a != "bloom" && a != "cuckoo" && a != "nbf" && a != "lstm" && a != "memnet") {
      throw ConfigError("bench.artifacts: unknown artifact '" + a + "'");
    }
  }
  if (!(bench.epsilon > 0.0 && bench.epsilon < 1.0)) throw ConfigError("bench.epsilon must lie in (0, 1)");
  sweep.validate();
}

train::TrainConfig RunConfig::train_config(std::size_t workers) const {
  train::TrainConfig t;
  t.model = model;
  t.task = task;
  t.learning_rate = train.learning_rate;
  t.batch_size = train.batch_size;
  t.max_steps = train.max_steps;
  t.eval_period = train.eval_period;
  t.eval_episodes = train.eval_episodes;
  t.seed = seed;
  t.target_fpr = train.target_fpr;
  t.target_fnr = train.target_fnr;
  t.clip_norm = train.clip_norm;
  t.workers = workers;
  return t;
}

bench::CurveOptions RunConfig::curve_options() const {
  bench::CurveOptions o;
  o.alpha = eval.alpha;
  o.precision = eval.precision;
  o.calibration_negatives = eval.calibration_negatives;
  o.query_budget = eval.query_budget;
  o.seed = seed;
  return o;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::string text = "{}";
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config_text(text, overrides);
}

std::string config_hash(const RunConfig& c) {
  const std::string canonical = to_json(c).dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash_bytes(canonical, 0x6e626c6f6f6dULL)));
  return buf;
}

}  // namespace nbloom::cli
