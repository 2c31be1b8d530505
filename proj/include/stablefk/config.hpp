#ifndef STABLEFK_CONFIG_HPP
#define STABLEFK_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stablefk/grid.hpp"
#include "stablefk/kernels.hpp"
#include "stablefk/montecarlo.hpp"
#include "stablefk/perturbations.hpp"

namespace stablefk {

inline constexpr const char* kToolVersion = "stablefk 1.0.0";

/// Every experiment parameter, read from one sectioned key = value file.
/// Missing keys keep the defaults below; unknown sections or keys are errors.
struct RunConfig {
  ProcessSpec process{1, 1.2, 0.0, 2.0};
  double half_width = 20.0;
  int nodes = 2000;

  Bump mu_plus{0.5, 0.0, 2.0};
  Bump mu_minus{0.3, 3.0, 1.5};
  NonlocalFamily family{0.6, 0.4, 3.0, {1.0, -1.0, 2.0}, {1.0, 2.0, 1.5}};

  SimConfig sim;

  // levy_system
  double levy_x = 0.0;
  double levy_t = 1.0;
  int levy_paths = 100000;

  // green_cross
  std::vector<double> green_probes{-6.0, -2.0, 0.0, 1.5, 5.0};
  Bump green_f{1.0, 0.5, 2.0};
  int green_paths = 10000;

  // harmonicity: two ball centres, each ball gets its admissible radius
  std::vector<double> harmonic_centers{0.0, 1.0};
  int harmonic_paths = 40000;
  /// combined budget must stay below this fraction of h(x)
  double harmonic_budget_fraction = 0.02;

  // gauge
  double gauge_radius = 2.5;
  std::vector<double> gauge_probes{-1.0, 0.0, 1.0};
  int gauge_paths = 4000;
  double theta_target = 0.5;
  double witness_horizon = 1.0;
  int witness_doublings = 5;
  double witness_factor = 10.0;

  // simulate
  std::vector<double> simulate_probes{-1.0, 0.0, 1.0};
  double simulate_radius = 2.0;
  double simulate_lambda = 1.0;

  /// checks run by verify; empty means the full suite
  std::vector<std::string> checks;

  /// Re-checks all module preconditions; throws ConfigError.
  void validate() const;

  StableKernel kernel() const { return StableKernel(process); }
  Grid grid() const { return Grid(half_width, nodes); }
  LocalMeasure mu() const { return LocalMeasure::from_bumps(mu_plus, mu_minus); }
  NonlocalPerturbation perturbation() const;
};

/// Names of the verify checks in suite order.
const std::vector<std::string>& check_names();

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Canonical text of every resolved value (17 significant digits).
std::string canonical_text(const RunConfig& cfg);
/// Same, restricted to what assembly depends on (no seeds, no simulation keys).
std::string assembly_text(const RunConfig& cfg);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace stablefk

#endif  // STABLEFK_CONFIG_HPP
