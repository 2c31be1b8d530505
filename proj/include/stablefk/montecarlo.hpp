#ifndef STABLEFK_MONTECARLO_HPP
#define STABLEFK_MONTECARLO_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

#include "stablefk/kernels.hpp"
#include "stablefk/perturbations.hpp"

namespace stablefk {

using Rng = std::mt19937_64;

struct SimConfig {
  double epsilon = 0.01;  // jumps with |z| > epsilon are resolved
  double dt = 0.005;      // Gaussian step and Riemann-sum resolution
  double t_max = 200.0;   // censoring horizon
  int n_paths = 10000;
  std::uint64_t master_seed = 1;
  double weight_cap = 0.0;     // 0 disables; capped weights are only counted
  double channel_step = 0.01;  // tabulation step of the channel densities

  void validate() const;
};

/// Deterministic per-path seed from (master seed, stream tag, path index).
std::uint64_t path_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Union of open intervals.
struct Domain {
  struct Interval {
    double lo, hi;
  };
  std::vector<Interval> parts;

  bool contains(double x) const;
  static Domain ball(double center, double radius);
  static Domain interval(double lo, double hi);
  static Domain whole_line();
  /// Union with overlapping pieces merged.
  Domain unite(const Domain& other) const;
  double lower() const;
  double upper() const;
};

/// One exact symmetric alpha-stable increment over time t for the m = 0
/// process with characteristic exponent c_kappa |u|^alpha (Chambers-Mallows-Stuck).
/// Throws DomainError for m > 0.
double sample_increment_stable(const StableKernel& kernel, double t, Rng& rng);

/// Sizes |Z| of jumps exceeding epsilon, drawn from the normalised tail of nu.
class JumpSizeSampler {
 public:
  JumpSizeSampler(const StableKernel& kernel, double epsilon, int table_size = 4096);
  double operator()(Rng& rng) const;
  double rate() const { return rate_; }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
  double alpha_;
  double rate_;
  bool closed_form_;
  std::vector<double> log_z_;
  std::vector<double> log_survival_;
};

/// Everything a path needs: the kernel, the jump sampler, the small-jump
/// variance and tabulated channel densities of the perturbation.
class PathModel {
 public:
  PathModel(const StableKernel& kernel, const LocalMeasure& mu, const NonlocalPerturbation& F, const SimConfig& cfg);

  const StableKernel& kernel() const { return kernel_; }
  const SimConfig& config() const { return cfg_; }
  const JumpSizeSampler& jumps() const { return jumps_; }
  const LocalMeasure& mu() const { return mu_; }
  const NonlocalPerturbation& F() const { return F_; }
  double sigma() const { return sigma_; }
  const TruncationStats& truncation() const { return stats_; }

  double vplus(double x) const { return mu_.vplus(x); }
  double vminus(double x) const { return mu_.vminus(x); }
  double xi_gplus(double x) const { return ng_plus_(x); }
  double nf_plus(double x) const { return nf_plus_(x); }
  double nf_minus(double x) const { return nf_minus_(x); }
  double fplus(double x, double y) const { return F_.fplus(x, y); }
  double fminus(double x, double y) const { return F_.fminus(x, y); }

  /// Window where the small-jump part of A^F can be non-zero.
  bool near_F(double x) const { return F_.bound > 0.0 && std::abs(x) <= F_.support_radius + cfg_.epsilon; }
  /// Expected |A^F| lost per unit time in that window: L m_beta(eps).
  double small_jump_rate() const { return small_jump_rate_; }
  /// Riemann-sum bias per unit time per unit of |lambda-type coefficient|.
  double riemann_rate() const { return riemann_rate_; }

 private:
  StableKernel kernel_;
  SimConfig cfg_;
  JumpSizeSampler jumps_;
  LocalMeasure mu_;
  NonlocalPerturbation F_;
  TruncationStats stats_;
  double sigma_;
  DensityTable ng_plus_, nf_plus_, nf_minus_;
  double small_jump_rate_ = 0.0;
  double riemann_rate_ = 0.0;
};

enum class EventKind { jump, step };

struct PathEvent {
  double time;
  double x_before;
  double x_after;
  EventKind kind;
};

struct PathTerminal {
  double time = 0.0;
  double position = 0.0;
  bool exited = false;
  bool exit_by_jump = false;
  bool censored = false;  // an exit was required but the horizon came first
};

struct PathRealization {
  double x0 = 0.0;
  double t0 = 0.0;
  std::vector<PathEvent> events;
  PathTerminal terminal;
};

/// Walks one path from x0. Visitor receives hold(x, duration) for each
/// interval the path sits at x, jump(t, x, y) and step(t, x, y); returning
/// false from keep_going(t) stops the path early (not censored).
/// Stops at the first exit from U (if given) or at the horizon.
template <class Visitor>
PathTerminal run_path(const PathModel& model, double x0, const Domain* U, double horizon, Rng& rng, Visitor& vis);

/// Simulates and records a path.
PathRealization sample_path(const PathModel& model, double x0, const Domain* U, double horizon, Rng& rng);

void write_event_log(std::ostream& os, const PathRealization& path);

struct FunctionalAccumulator {
  double a_mu_plus = 0.0;
  double a_mu_minus = 0.0;
  double a_F_plus = 0.0;
  double a_F_minus = 0.0;
  double a_xi_gplus = 0.0;
  double a_rho_plus = 0.0;
  /// int NF+-(X_s) ds, the compensators of the jump sums
  double a_nf_plus = 0.0;
  double a_nf_minus = 0.0;
  double elapsed = 0.0;
  double time_near_F = 0.0;
  int jumps = 0;
  /// expected |A^F| missed by unresolved jumps plus the Riemann-sum term
  double bias_bound = 0.0;

  void hold(const PathModel& m, double x, double len);
  void jump(const PathModel& m, double x, double y);
  void finish(const PathModel& m);
  /// exponent A^mu + A^F + (lambda - 1) A^{rho+}
  double exponent(double lambda) const;
  FunctionalAccumulator& operator+=(const FunctionalAccumulator& o);
};

FunctionalAccumulator accumulate_functionals(const PathRealization& path, const PathModel& model);

/// Splits a recorded path at time s into [t0, s] and [s, end].
std::pair<PathRealization, PathRealization> split_path(const PathRealization& path, double s);

struct MCEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  int n_paths = 0;
  int n_effective = 0;
  double bias_bound = 0.0;
  double max_weight_observed = 0.0;
  int censored = 0;
  int capped = 0;
  bool usable = true;
  /// d(mean)/d(lambda) estimated on the same paths: E[Y A^{rho+}]
  double lambda_sensitivity = 0.0;
  /// mean elapsed time per path
  double mean_time = 0.0;
  /// mean Feynman-Kac weight (payoff replaced by 1) on the same paths
  double mean_weight = 0.0;
};

/// Sum of per-path values with pairwise summation (order independent of threads).
double pairwise_sum(const std::vector<double>& v);

/// Payoff evaluated at the stopping position.
using Payoff = std::function<double(double)>;

/// E_x[exp(A_tau + (lambda - 1) A^{rho+}_tau) payoff(X_tau)], tau the exit time of U.
/// Censored paths are evaluated at the horizon (optional stopping keeps the
/// weighted payoff a martingale); more than 1% censored marks the estimate unusable.
MCEstimate feynman_kac_estimate(double x, const Domain& U, const Payoff& payoff, double lambda, const PathModel& model,
                                std::uint64_t stream = 0);

/// Gauge with unit payoff.
MCEstimate gauge_estimate(double x, const Domain& D, double lambda, const PathModel& model, std::uint64_t stream = 0);

/// Gauge truncated at a fixed horizon: E_x[exp(A^eta_{tau_D ^ T})].
MCEstimate truncated_gauge_estimate(double x, const Domain& D, double lambda, double horizon, const PathModel& model,
                                    std::uint64_t stream = 0);

/// E_x[int_0^{tau_box} exp(-A^{mu-}_t - A^{F-}_t) f(X_t) dt] for the process killed on leaving (-box, box).
/// Paths stop once their weight drops below 1e-8 (bias published); more than 5%
/// censored at t_max marks the estimate unusable.
MCEstimate killed_green_estimate(double x, const Density& f, double f_sup, double box, const PathModel& model,
                                 std::uint64_t stream = 0);

/// Both sides of the Levy-system identity for H on common paths over [0, t]:
/// the jump sum of H over resolved jumps and int_0^t NH(X_s) ds.
struct LevySystemSample {
  MCEstimate jump_sum;
  MCEstimate compensator;
  MCEstimate difference;  // paired per-path difference
};

LevySystemSample levy_system_estimate(double x, double t, const PathModel& model, bool minus_part = false,
                                      std::uint64_t stream = 0);

/// X_t - x for n simulated paths (no domain).
std::vector<double> terminal_positions(double x, double t, const PathModel& model, int n, std::uint64_t stream = 0);

}  // namespace stablefk

#include "stablefk/montecarlo_impl.hpp"

#endif  // STABLEFK_MONTECARLO_HPP
