#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "nbloom/cli/commands.hpp"

int main(int argc, char** argv) {
  nbloom::cli::CliOptions options;
  std::string config, out;
  std::uint64_t seed = 0;

  CLI::App app{"Neural Bloom Filter experiments: train, evaluate, sweep, benchmark, compare, generate data"};
  app.set_version_flag("--version", std::string(nbloom::cli::kToolVersion));
  app.require_subcommand(1);
  const std::map<std::string, std::string> help{
      {"train", "Meta-train a model and write a checkpoint"},
      {"eval", "Calibrate a checkpoint, build composites and report space"},
      {"sweep", "Grid-search model sizes and keep the smallest passing cell"},
      {"bench", "Time inserts and queries for filters and models"},
      {"compare", "Space curves for classical filters and checkpoints"},
      {"gen-data", "Generate or load the configured dataset and write its manifest"}};
  for (const auto& name : nbloom::cli::kCommands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config, "JSON configuration file");
    sub->add_option("--seed", seed, "Run seed (overrides the config)");
    sub->add_option("--out", out, "Output directory (default $NBF_BENCH_OUT, then ./nbf_out)");
    sub->add_option("--set", options.overrides, "Dotted override key=value (repeatable)")->take_all();
    sub->add_option("--workers", options.workers, "Worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  options.command = app.get_subcommands().front()->get_name();
  options.config_path = config;
  options.out = out;
  if (app.get_subcommands().front()->count("--seed") > 0) options.seed = seed;
  return nbloom::cli::run_command(options, std::cout, std::cerr);
}
