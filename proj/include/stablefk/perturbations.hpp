#ifndef STABLEFK_PERTURBATIONS_HPP
#define STABLEFK_PERTURBATIONS_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "stablefk/grid.hpp"
#include "stablefk/kernels.hpp"

namespace stablefk {

using Density = std::function<double(double)>;
using PairFunction = std::function<double(double, double)>;

/// Smooth compactly supported bump a * exp(1 - 1/(1 - s^2)), s = (x - c)/w.
/// Peak value a at x = c, support (c - w, c + w).
struct Bump {
  double amplitude = 0.0;
  double center = 0.0;
  double width = 1.0;

  double operator()(double x) const;
  /// Unit-amplitude profile.
  double shape(double x) const;
  double support_radius() const;
};

/// mu = mu^+ - mu^- given by bounded, compactly supported densities.
struct LocalMeasure {
  Density vplus;
  Density vminus;
  double support_radius = 0.0;
  double sup_plus = 0.0;
  double sup_minus = 0.0;

  static LocalMeasure zero();
  static LocalMeasure from_bumps(const Bump& plus, const Bump& minus);
  LocalMeasure scaled_plus(double c) const;
};

/// |H(x, y)| <= constant * |x - y|^exponent for |x - y| <= 1.
struct DiagonalCertificate {
  double constant = 0.0;
  double exponent = 2.0;
};

/// Symmetric non-negative function on R x R vanishing on the diagonal, with
/// its decay certificate and joint support radius (H(x,y) = 0 unless both
/// |x|, |y| <= support_radius).
struct JumpFunction {
  PairFunction value;
  DiagonalCertificate cert;
  double support_radius = 0.0;

  static JumpFunction zero();
};

/// Parameters of the built-in family
///   F = a+ chi(x) chi(y) min(|x-y|,1)^beta - a- chit(x) chit(y) min(|x-y|,1)^beta
/// with unit bumps chi, chit.
struct NonlocalFamily {
  double aplus = 0.0;
  double aminus = 0.0;
  double beta = 3.0;
  Bump plus_bump{1.0, 0.0, 1.0};
  Bump minus_bump{1.0, 0.0, 1.0};
};

/// F = F^+ - F^- with F^+ F^- == 0 pointwise.
struct NonlocalPerturbation {
  PairFunction fplus;
  PairFunction fminus;
  double bound = 0.0;  // M = sup |F|
  DiagonalCertificate cert;
  double support_radius = 0.0;

  double value(double x, double y) const { return fplus(x, y) - fminus(x, y); }
  JumpFunction plus() const { return {fplus, cert, support_radius}; }
  JumpFunction minus() const { return {fminus, cert, support_radius}; }

  static NonlocalPerturbation zero(double beta = 3.0);
  static NonlocalPerturbation from_family(const NonlocalFamily& family);

  /// Samples random pairs and throws DomainError on a violated invariant:
  /// symmetry, disjoint parts, zero diagonal, sup bound, and the diagonal
  /// certificate on near-diagonal pairs.
  void validate(int samples = 10000, std::uint64_t seed = 7) const;
};

/// G+ = (e^{F+} - 1) e^{-F-},  G- = 1 - e^{-F-}, so G+ - G- = e^F - 1.
struct DecomposedPerturbation {
  PairFunction gplus;
  PairFunction gminus;
  double comparability = 1.0;  // C_G
  DiagonalCertificate cert_plus;
  DiagonalCertificate cert_minus;
  double support_radius = 0.0;

  JumpFunction plus() const { return {gplus, cert_plus, support_radius}; }
  JumpFunction minus() const { return {gminus, cert_minus, support_radius}; }
};

DecomposedPerturbation li_decompose(const NonlocalPerturbation& F);

/// max(e^M, M / (1 - e^{-M})), 1 for M == 0.
double comparability_constant(double bound);
double comparability_constant(const NonlocalPerturbation& F);

struct ChannelValue {
  double value = 0.0;
  /// quadrature error estimate plus the analytic near-diagonal band bound
  double error_bound = 0.0;
};

/// NH(x) = int H(x, y) N(x, dy). The band |y - x| < delta is bounded by the
/// certificate and delta is chosen so that the band contributes < 1e-10.
/// Throws DomainError if the certificate exponent does not exceed alpha.
ChannelValue channel_density_with_error(const JumpFunction& H, double x, const StableKernel& kernel);
double channel_density(const JumpFunction& H, double x, const StableKernel& kernel);

/// NH sampled at the grid nodes.
std::vector<double> revuz_density(const JumpFunction& H, const Grid& grid, const StableKernel& kernel);

struct RhoPair {
  std::vector<double> plus;
  std::vector<double> minus;
};

/// rho^{+-} = mu^{+-} + xi_{G^{+-}} at the grid nodes (quadrature densities).
RhoPair assemble_rho(const LocalMeasure& mu, const DecomposedPerturbation& dec, const Grid& grid,
                     const StableKernel& kernel);

/// Uniformly tabulated density on [-R, R], linear interpolation, 0 outside.
class DensityTable {
 public:
  DensityTable() = default;
  DensityTable(double radius, int intervals, const Density& f);

  double operator()(double x) const;
  double radius() const { return radius_; }
  double sup() const { return sup_; }
  /// max |second difference| / spacing^2 over the table.
  double curvature_bound() const { return curvature_; }
  bool empty() const { return values_.empty(); }

 private:
  double radius_ = 0.0;
  double step_ = 1.0;
  std::vector<double> values_;
  double sup_ = 0.0;
  double curvature_ = 0.0;
};

DensityTable channel_table(const JumpFunction& H, const StableKernel& kernel, double step = 0.01);

struct KatoModulus {
  /// max_x int_{|x-y| < r} |R_K(x, y)| nu(y) dy
  double value = 0.0;
  /// max_x int_{|x-y| <= 1} nu(y) dy (the alpha > 1 local-mass criterion)
  double local_mass = 0.0;
};

/// Windowed compensated-kernel integral of a nodal density. Cells are
/// integrated exactly against |R_K| and clipped to the window.
/// Throws DomainError if r < 4 h.
KatoModulus kato_modulus(const std::vector<double>& nu, double r, const Grid& grid, const ProcessSpec& spec);

}  // namespace stablefk

#endif  // STABLEFK_PERTURBATIONS_HPP
