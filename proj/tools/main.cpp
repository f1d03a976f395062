#include <iostream>

#include <CLI11.hpp>

#include "runner.hpp"

int main(int argc, char** argv) {
  using namespace sublab::app;
  CLI::App app{"Sub-Finsler Carnot group experiment runner"};
  app.require_subcommand(1);

  std::string config;
  std::string output_dir;
  int threads = 0;
  auto* run_cmd = app.add_subcommand("run", "run an experiment and write CSVs plus manifest.json");
  run_cmd->add_option("config", config, "experiment config (JSON)")->required();
  run_cmd->add_option("-o,--output-dir", output_dir, std::string("output directory (default: config, then ") +
                                                         kOutputDirEnv + ", then ./sublab-out)");
  run_cmd->add_option("-j,--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
  validate_cmd->add_option("config", config, "experiment config (JSON)")->required();

  auto* list_cmd = app.add_subcommand("list-builtins", "print builtin groups, metrics and experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigInvalid;
  }

  if (*run_cmd) {
    RunOptions opts;
    if (!output_dir.empty()) opts.output_dir = output_dir;
    if (threads > 0) opts.threads = threads;
    return run(config, opts, std::cerr);
  }
  if (*validate_cmd) return validate(config, std::cout);
  if (*list_cmd) list_builtins(std::cout);
  return kOk;
}
