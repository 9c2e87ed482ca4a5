#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slowfast/hypotheses.hpp"
#include "slowfast/scenario.hpp"

namespace slowfast {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitPass = 0,
  kExitUsage = 1,
  kExitHypothesis = 2,
  kExitDivergence = 3,
  kExitDegeneracy = 4,
};

struct CommandOptions {
  std::optional<std::uint64_t> seed;     // overrides run.seed
  std::optional<std::string> out_dir;    // overrides run.output_dir
  unsigned threads = 1;
};

// Each command writes its artifacts and manifest.json into the output directory,
// prints a short summary to `log`, and returns an exit code. Numerical failures
// propagate as exceptions; run_command maps them to exit codes.
int cmd_check(const ScenarioConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_simulate(const ScenarioConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_filter(const ScenarioConfig& cfg, const CommandOptions& opts, std::ostream& log);

// Loads the config (the built-in thermoelastic scenario when the path is empty)
// and runs `command`.
int run_command(const std::string& command, const std::string& config_path, const CommandOptions& opts,
                std::ostream& log, std::ostream& err);

HypothesisReport check_scenario(const ScenarioConfig& cfg);

}  // namespace slowfast
