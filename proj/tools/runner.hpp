#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"

namespace sublab::app {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigInvalid = 2, kNonconvergence = 3, kIoError = 4 };

inline constexpr const char* kOutputDirEnv = "SUBLAB_OUTPUT_DIR";

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;  // overrides the config and the environment
  std::optional<int> threads;                       // overrides the config
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct ExperimentOutput {
  std::vector<OutputFile> files;
  std::size_t nonconverged = 0;
  std::size_t failed = 0;
};

/// Runs the experiment in memory; the result does not depend on the thread count.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// Command-line precedence, then the config, then SUBLAB_OUTPUT_DIR, then ./sublab-out.
std::filesystem::path output_directory(const ExperimentConfig& cfg, const RunOptions& opts);

/// Loads, runs and writes CSVs plus manifest.json; returns a process exit code.
int run(const std::filesystem::path& config_path, const RunOptions& opts, std::ostream& log);
/// Parses and validates only.
int validate(const std::filesystem::path& config_path, std::ostream& log);
void list_builtins(std::ostream& out);

std::string sha256_hex(std::string_view bytes);

}  // namespace sublab::app
