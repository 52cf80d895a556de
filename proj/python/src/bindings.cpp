#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "nbloom/cli/commands.hpp"
#include "nbloom/filters/bloom.hpp"
#include "nbloom/filters/cuckoo.hpp"
#include "nbloom/filters/sizing.hpp"
#include "nbloom/model/familiarity.hpp"

namespace py = pybind11;
using namespace nbloom;

namespace {

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

// Wraps a familiarity model so Python holds one owning handle.
struct Model {
  std::shared_ptr<model::FamiliarityModel> impl;

  std::string kind() const { return model::to_string(impl->kind()); }
  std::vector<double> logits(const std::vector<tasks::Item>& storage, const std::vector<tasks::Item>& queries) const {
    return impl->logits(storage, queries);
  }
  std::size_t state_values(std::size_t n) const { return impl->state_values(n); }
  std::size_t param_count() const { return impl->param_count(); }
  std::string config_json() const { return cli::to_json(impl->config()).dump(); }
};

Model make_model(const std::string& config_json, std::uint64_t seed) {
  const auto config = cli::model_from_json(nlohmann::json::parse(config_json));
  return {std::shared_ptr<model::FamiliarityModel>(model::make_model(config, seed))};
}

py::tuple run_command(const std::string& command, const std::filesystem::path& config,
                      const std::filesystem::path& out, const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed, std::size_t workers) {
  cli::CliOptions o;
  o.command = command;
  o.config_path = config;
  o.out = out;
  o.overrides = overrides;
  o.seed = seed;
  o.workers = workers;
  std::ostringstream sout, serr;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run_command(o, sout, serr);
  }
  return py::make_tuple(code, sout.str(), serr.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neural Bloom Filter core bindings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());

  py::class_<filters::BloomSize>(m, "BloomSize")
      .def_readonly("m", &filters::BloomSize::m)
      .def_readonly("k", &filters::BloomSize::k);
  py::class_<filters::CuckooSize>(m, "CuckooSize")
      .def_readonly("bucket_count", &filters::CuckooSize::bucket_count)
      .def_readonly("bucket_size", &filters::CuckooSize::bucket_size)
      .def_readonly("fingerprint_bits", &filters::CuckooSize::fingerprint_bits)
      .def("bits", &filters::CuckooSize::bits);

  m.def("bloom_size_for", &filters::bloom_size_for, py::arg("n"), py::arg("epsilon"));
  m.def("analytical_fpr", &filters::analytical_fpr, py::arg("m"), py::arg("n"), py::arg("k"));
  m.def("optimal_space_bound", &filters::optimal_space_bound, py::arg("n"), py::arg("epsilon"));
  m.def("cuckoo_size_for", &filters::cuckoo_size_for, py::arg("n"), py::arg("epsilon"), py::arg("bucket_size") = 4);

  py::class_<filters::BloomFilter>(m, "BloomFilter")
      .def(py::init<std::uint64_t, std::uint32_t, std::uint64_t>(), py::arg("m"), py::arg("k"), py::arg("seed") = 0)
      .def_static("for_capacity", &filters::BloomFilter::for_capacity, py::arg("n"), py::arg("epsilon"),
                  py::arg("seed") = 0)
      .def("insert", &filters::BloomFilter::insert, py::arg("key"))
      .def("query", &filters::BloomFilter::query, py::arg("key"))
      .def("__contains__", &filters::BloomFilter::query)
      .def_property_readonly("size_bits", &filters::BloomFilter::size_bits)
      .def_property_readonly("hash_count", &filters::BloomFilter::hash_count)
      .def("popcount", &filters::BloomFilter::popcount)
      .def("serialize", [](const filters::BloomFilter& f) { return to_bytes(f.serialize()); })
      .def_static("deserialize",
                  [](const py::bytes& b) { return filters::BloomFilter::deserialize(from_bytes(b)); });

  py::class_<filters::CuckooFilter>(m, "CuckooFilter")
      .def_static("for_capacity", &filters::CuckooFilter::for_capacity, py::arg("n"), py::arg("epsilon"),
                  py::arg("seed") = 0, py::arg("bucket_size") = 4, py::arg("max_kicks") = 500)
      .def("insert", &filters::CuckooFilter::insert, py::arg("key"))
      .def("query", &filters::CuckooFilter::query, py::arg("key"))
      .def("erase", &filters::CuckooFilter::erase, py::arg("key"))
      .def("__contains__", &filters::CuckooFilter::query)
      .def("__len__", &filters::CuckooFilter::size)
      .def_property_readonly("size_bits", &filters::CuckooFilter::size_bits)
      .def_property_readonly("load_factor", &filters::CuckooFilter::load_factor)
      .def("serialize", [](const filters::CuckooFilter& f) { return to_bytes(f.serialize()); })
      .def_static("deserialize",
                  [](const py::bytes& b) { return filters::CuckooFilter::deserialize(from_bytes(b)); });

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", &Model::kind)
      .def_property_readonly("param_count", &Model::param_count)
      .def("state_values", &Model::state_values, py::arg("n"))
      .def("logits", &Model::logits, py::arg("storage"), py::arg("queries"))
      .def("config_json", &Model::config_json);

  m.def("make_model", &make_model, py::arg("config_json"), py::arg("seed") = 0);
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& path) {
        return Model{std::shared_ptr<model::FamiliarityModel>(cli::load_checkpoint(path))};
      },
      py::arg("path"));
  m.def(
      "default_config_json", [] { return cli::to_json(cli::RunConfig{}).dump(); });
  m.def(
      "config_hash",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        return cli::config_hash(cli::parse_config_text(text, overrides));
      },
      py::arg("text") = "{}", py::arg("overrides") = std::vector<std::string>{});
  m.def("run_command", &run_command, py::arg("command"), py::arg("config") = std::filesystem::path{},
        py::arg("out") = std::filesystem::path{}, py::arg("overrides") = std::vector<std::string>{},
        py::arg("seed") = std::nullopt, py::arg("workers") = 1);
  m.attr("__version__") = cli::kToolVersion;
}
