#ifndef STABLEFK_VERIFY_HPP
#define STABLEFK_VERIFY_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stablefk/config.hpp"
#include "stablefk/forms.hpp"
#include "stablefk/montecarlo.hpp"

namespace stablefk {

/// Rows of pre-formatted cells with a fixed column order.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

/// 17 significant digits, the format used in every output file.
std::string num(double v);

struct CheckReport {
  std::string name;
  std::string inputs_digest;
  double statistic = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// how pass was decided, in words
  std::string predicate;
  Table table;
  std::vector<std::string> artifacts;
};

CheckReport check_levy_system(const StableKernel& kernel, const NonlocalPerturbation& F, double x, double t,
                              const SimConfig& sim, bool minus_part = false, std::uint64_t stream = 11);

/// Residual, positivity, normalisation, the lower bound lambda ||R^- rho^+|| >= 1,
/// the operator identity, A_Y semidefiniteness, mu+-scaling monotonicity and
/// monotonicity over nested boxes L in {10, 20, 40} at spacing `nested_spacing`.
CheckReport check_ground_state(const FormSystem& sys, const StableKernel& kernel, const LocalMeasure& mu,
                               const NonlocalPerturbation& F, double nested_spacing = 0.04);

struct Calibration {
  double c_star = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  /// (c, lambda(c)) in evaluation order
  std::vector<std::pair<double, double>> trace;
};

/// Bisection on log c in [2^-20, 2^20] for lambda(c mu+) = 1 within 1e-6.
/// Throws NumericalError if 1 is not bracketed.
Calibration calibrate_critical(const FormSystem& sys, const GreenOperator& green_y);

/// A fine and a coarse (half as many nodes) discretisation of the same problem,
/// used for the Richardson-type grid-bias estimate.
struct DiscretePair {
  const FormSystem* fine = nullptr;
  const GroundState* fine_state = nullptr;
  const FormSystem* coarse = nullptr;
  const GroundState* coarse_state = nullptr;
};

struct HarmonicDomain {
  std::string label;
  Domain U;
  std::vector<double> probes;
};

/// |h(x) - FK(x)| <= 3 stderr + budget at every probe, with
/// budget = grid bias + lambda bias + MC bias <= budget_fraction h(x).
/// lambda_used is the value inside the weight (exactly 1 for the critical form).
CheckReport check_harmonicity(const DiscretePair& d, const std::vector<HarmonicDomain>& domains, double lambda_used,
                              const StableKernel& kernel, const LocalMeasure& mu, const NonlocalPerturbation& F,
                              const SimConfig& sim, double budget_fraction, std::uint64_t stream = 31);

/// The admissible ball around each centre and the union of the two; 5 probes each.
std::vector<HarmonicDomain> harmonic_domains(const FormSystem& sys, const GreenOperator& green_y, double lambda,
                                             const std::vector<double>& centers);

struct WitnessSettings {
  double horizon = 1.0;
  int doublings = 5;
  double factor = 10.0;
};

/// theta(D) for D = (-radius, radius) with mu+ scaled by mu_scale and lambda fixed,
/// then the gauge predicate: stability under doubling n_paths if theta > 1,
/// the truncated-gauge divergence witness if theta < 1.
CheckReport check_gauge_spectral(const FormSystem& sys, double lambda, double radius, const std::vector<double>& probes,
                                 double mu_scale, const StableKernel& kernel, const LocalMeasure& mu,
                                 const NonlocalPerturbation& F, const SimConfig& sim, const WitnessSettings& witness,
                                 std::uint64_t stream = 41);

/// mu+ scale c with theta_c(D) within 1% of target (bisection on log c, lambda fixed).
double supercritical_scale(const FormSystem& sys, double lambda, double radius, double target);

/// killed_green_estimate against the A_minus solve at the probes.
CheckReport check_green_cross(const FormSystem& fine, const FormSystem& coarse, const std::vector<double>& probes,
                              const Bump& f, const StableKernel& kernel, const LocalMeasure& mu,
                              const NonlocalPerturbation& F, const SimConfig& sim, std::uint64_t stream = 21);

/// Runs named checks for one configuration, sharing the assembled systems.
class Suite {
 public:
  explicit Suite(RunConfig cfg);
  ~Suite();

  CheckReport run(const std::string& name);
  const RunConfig& config() const { return cfg_; }

  const FormSystem& system();
  const GroundState& ground_state();
  const GreenOperator& green_y();

 private:
  struct State;
  RunConfig cfg_;
  std::string digest_;
  std::unique_ptr<State> s_;

  const FormSystem& coarse();
  const GroundState& coarse_state();
  const Calibration& calibration();
};

}  // namespace stablefk

#endif  // STABLEFK_VERIFY_HPP
