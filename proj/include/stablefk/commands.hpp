#ifndef STABLEFK_COMMANDS_HPP
#define STABLEFK_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stablefk/config.hpp"

namespace stablefk {

enum ExitCode : int { kSuccess = 0, kConfigFailure = 1, kNumericalFailure = 2, kCheckFailure = 3 };

struct CommandOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;  // overrides every n_paths
  bool quiet = false;
  std::string cache_path;             // groundstate: read the system from here
  std::vector<std::string> checks;    // verify: subset, empty = config or full suite
};

/// Loads the config (or defaults) and applies --seed / --paths.
RunConfig resolve_config(const CommandOptions& opt);

int cmd_assemble(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_groundstate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_gauge(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_verify(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);

/// Runs one subcommand with the exit-code mapping applied to exceptions:
/// ConfigError -> 1, DomainError / NumericalError -> 2.
int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace stablefk

#endif  // STABLEFK_COMMANDS_HPP
