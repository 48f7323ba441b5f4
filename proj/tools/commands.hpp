#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace emdot::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kRuntimeError = 4 };

struct SynthArgs {
  std::optional<std::filesystem::path> spec;  // unset: built-in preset
  std::string preset = "churn";
  std::filesystem::path out = "synth";
  std::optional<std::uint64_t> seed;
};

struct RunArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

struct ReportArgs {
  std::filesystem::path results;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
};

int cmd_synth(const SynthArgs& args);
int cmd_run(const RunArgs& args);
int cmd_report(const ReportArgs& args);

/// Full command line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace emdot::cli
