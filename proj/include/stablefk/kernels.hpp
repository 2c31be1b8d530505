#ifndef STABLEFK_KERNELS_HPP
#define STABLEFK_KERNELS_HPP

#include <memory>
#include <vector>

namespace stablefk {

/// Parameters of the one-dimensional symmetric (relativistic) alpha-stable
/// process.
///
/// The jump kernel of the process is
///   N(x, dy) = kappa * C(1, -alpha) * psi(m^{1/alpha} |x - y|) / |x - y|^{1 + alpha} dy
/// with kappa = intensity_multiplier. kappa = 2 reproduces the classical
/// Levy-system normalisation N = 2C psi / |x - y|^{1 + alpha}; kappa = 1 gives
/// the textbook generator -(-Delta)^{alpha/2} when m = 0.
struct ProcessSpec {
  int dim = 1;
  double alpha = 1.0;
  double mass = 0.0;
  double intensity_multiplier = 2.0;

  /// Throws DomainError unless dim == 1, alpha in (0,2), mass >= 0, the
  /// process is recurrent (mass == 0 requires alpha >= 1) and kappa > 0.
  void validate() const;
};

/// C(1, -alpha) = alpha Gamma((1+alpha)/2) / (2^{1-alpha} sqrt(pi) Gamma(1 - alpha/2)).
double normalization_constant(double alpha);
double normalization_constant(const ProcessSpec& spec);

/// I(r) = int_0^inf s^{nu-1} exp(-s/4 - r^2/s) ds with nu = (1 + alpha)/2,
/// evaluated by adaptive Gauss-Kronrod quadrature in log s.
double psi_integral(double r, double alpha);

/// psi(r) = I(r) / I(0). psi(0) == 1 exactly.
double psi(double r, double alpha);

/// d psi / dr = -2 r J(r) / I(0), J the same integral with s^{nu-2}.
double psi_derivative(double r, double alpha);

/// Tabulated psi on r in [0, r_max] with cubic node clustering at the origin
/// and monotone cubic Hermite interpolation. Beyond r_max the direct
/// quadrature is used. Immutable after construction.
class PsiTable {
 public:
  explicit PsiTable(double alpha, double r_max = 50.0, int intervals = 4096);

  double operator()(double r) const;
  double alpha() const { return alpha_; }
  double r_max() const { return r_max_; }

 private:
  double alpha_;
  double r_max_;
  int intervals_;
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

/// Validated process with all derived constants: C(1,-alpha), kappa*C,
/// m^{1/alpha} and (for m > 0) a shared psi table.
class StableKernel {
 public:
  explicit StableKernel(const ProcessSpec& spec);

  const ProcessSpec& spec() const { return spec_; }
  double alpha() const { return spec_.alpha; }
  double constant() const { return constant_; }
  /// kappa * C(1, -alpha): the coefficient of |z|^{-1-alpha} in N.
  double scale() const { return scale_; }
  /// m^{1/alpha}
  double mass_root() const { return mass_root_; }
  bool relativistic() const { return spec_.mass > 0.0; }

  /// psi(m^{1/alpha} dist); identically 1 when m == 0.
  double psi_factor(double dist) const;
  /// Jump rate density at separation dist > 0.
  double intensity(double dist) const;

  /// For m == 0 the characteristic exponent is c |u|^alpha with
  /// c = kappa C pi / (Gamma(1 + alpha) sin(pi alpha / 2)).
  double characteristic_coefficient() const;

 private:
  ProcessSpec spec_;
  double constant_;
  double scale_;
  double mass_root_;
  std::shared_ptr<const PsiTable> psi_table_;
};

/// N(x, dy)/dy. Throws DomainError when x == y.
double jump_intensity(double x, double y, const StableKernel& kernel);

/// R_K: log(1/|x-y|) for alpha == 1, |x-y|^{alpha-1} otherwise.
double compensated_kernel(double x, double y, const ProcessSpec& spec);

struct TruncationStats {
  double epsilon = 0.0;
  /// rate of jumps with |z| > epsilon
  double tail_rate = 0.0;
  /// int_{|z|<=eps} z^2 nu(z) dz
  double small_jump_variance = 0.0;
  /// int_{|z|<=eps} |z|^beta nu(z) dz
  double beta_moment = 0.0;
};

/// Integrals of the Levy density nu(z) = N(0, z)/dz over both signs of z.
/// Closed form for m == 0, quadrature for m > 0.
TruncationStats jump_truncation_stats(double epsilon, double beta, const StableKernel& kernel);

/// int_{|z| > d} nu(z) dz for d > 0.
double tail_mass(double d, const StableKernel& kernel);

}  // namespace stablefk

#endif  // STABLEFK_KERNELS_HPP
