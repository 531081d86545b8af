#pragma once

#include <string>
#include <vector>

#include "qdecay/config.hpp"

namespace qdecay {

const char* version() noexcept;

/// 0 leaves the OpenMP default alone.
void set_num_threads(int n);

enum ExitCode : int { kOk = 0, kConfigError = 2, kDegraded = 3, kNumericalFailure = 4 };

struct RunOptions {
  std::string out_dir = ".";
  long long seed = 0;  // reserved; nothing is stochastic
};

/// Each command writes its files into out_dir and returns an ExitCode.
/// Library exceptions propagate; run_command maps them to exit codes.
int cmd_evolve(const RunConfig& cfg, const RunOptions& opts);
int cmd_decay(const RunConfig& cfg, const RunOptions& opts);
int cmd_scan(const RunConfig& cfg, const RunOptions& opts);
int cmd_poles(const RunConfig& cfg, const RunOptions& opts);

/// Dispatch by name, reporting errors on stderr.
int run_command(const std::string& name, const RunConfig& cfg, const RunOptions& opts);

/// Header lines for CSV outputs ("# ..."), embedding version and resolved config.
std::vector<std::string> provenance_lines(const std::string& command, const RunConfig& cfg, const RunOptions& opts);

}  // namespace qdecay
