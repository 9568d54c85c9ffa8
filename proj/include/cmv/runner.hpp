#pragma once

#include <iosfwd>
#include <string>

#include "cmv/config.hpp"

namespace cmv {

enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitConfig = 2, kExitFault = 3 };

struct RunnerOptions {
  int workers = 1;
  std::string out_dir;  ///< empty: use the config's output_dir
  std::ostream* log = nullptr;  ///< human-readable summaries; null silences them
};

/// Runs one of simulate | couple | metric | verify | sweep and writes its
/// CSV files. `claim` overrides verify.claim when non-empty. Returns
/// kExitViolation when a verify claim fails; configuration problems throw
/// ConfigError and integration problems NumericalFault.
int run_subcommand(const std::string& subcommand, const RunConfig& config, const RunnerOptions& options,
                   const std::string& claim = "");

}  // namespace cmv
