#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbloom/cli/config.hpp"
#include "nbloom/error.hpp"

namespace nbloom::cli {

inline const std::vector<std::string> kCommands{"train", "eval", "sweep", "bench", "compare", "gen-data"};

struct CliOptions {
  std::string command;
  std::filesystem::path config_path;  // empty: all defaults
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;          // empty: $NBF_BENCH_OUT, then ./nbf_out
  std::vector<std::string> overrides;
  std::size_t workers = 1;
};

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::vector<std::string> artifacts;  // file names relative to the run directory
  std::string version = kToolVersion;

  nlohmann::json to_json() const;
};

// One manifest per command, so train and eval can share a run directory.
std::string manifest_name(const std::string& command);

int exit_code(ErrorKind kind);
nlohmann::json error_json(const Error& e);

// Writes to a temporary file in the same directory, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::filesystem::path resolve_out_dir(const std::filesystem::path& requested);

// Folds --seed into the overrides and parses the configuration.
RunConfig resolve_config(const CliOptions& options);

// Trained parameters plus the model section needed to rebuild them.
void save_checkpoint(const std::filesystem::path& path, const model::FamiliarityModel& m);
std::unique_ptr<model::FamiliarityModel> load_checkpoint(const std::filesystem::path& path);

// Runs one command. Returns the process exit code; failures print a JSON error
// object to `err` and, when the run directory is writable, to error.json.
int run_command(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace nbloom::cli
