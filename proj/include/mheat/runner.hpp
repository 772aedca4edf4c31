#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mheat/config.hpp"

namespace mheat {

/// Exit codes of the command line tool.
enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitConfigError = 2, kExitRuntimeError = 3 };

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  std::vector<CheckResult> checks;
  std::vector<std::string> files;  // written, relative to the output directory

  bool pass() const;
  int exit_code() const { return pass() ? kExitPass : kExitCheckFailed; }
};

ManifoldModel build_model(const ManifoldSpec& spec);

/// Runs the configured experiment, writes its CSV/JSON artifacts into the
/// output directory and logs one line per check.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace mheat
