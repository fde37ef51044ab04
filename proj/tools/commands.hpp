#pragma once

#include <iosfwd>
#include <string>

#include "tumorctl/config.hpp"

namespace tumorctl::cli {

enum ExitCode : int { kPass = 0, kPredicateFail = 1, kConfigError = 2, kSolverError = 3 };

struct Options {
  std::string config_path;  ///< empty: built-in defaults
  std::string out_dir;      ///< overrides output.dir when non-empty
  bool oracle = false;
  /// Each level doubles nx, ny and steps; negative levels halve them.
  int refine = 0;
};

/// Loads the config, applies --out and --refine. Throws ConfigError.
RunConfig resolve_config(const Options& opt);

int cmd_simulate(const RunConfig& cfg, const Options& opt, std::ostream& log);
int cmd_gradient_check(const RunConfig& cfg, const Options& opt, std::ostream& log);
int cmd_optimize(const RunConfig& cfg, const Options& opt, std::ostream& log);
int cmd_separation(const RunConfig& cfg, const Options& opt, std::ostream& log);
int cmd_hypothesis_check(const RunConfig& cfg, const Options& opt, std::ostream& log);

/// Resolves the config, dispatches by name and maps exceptions onto exit codes.
int run(const std::string& command, const Options& opt, std::ostream& log, std::ostream& err);

}  // namespace tumorctl::cli
