#ifndef STABLEFK_FORMS_HPP
#define STABLEFK_FORMS_HPP

#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "stablefk/grid.hpp"
#include "stablefk/kernels.hpp"
#include "stablefk/perturbations.hpp"

namespace stablefk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Toeplitz jump weights of the lattice form on a uniform grid.
///
/// The discrete energy is the restriction of a translation-invariant lattice
/// form to vectors vanishing off the grid:
///   u^T A u = 1/2 sum_{i != j} w_{|i-j|} (u_i - u_j)^2 + sum_i k_i u_i^2,
/// where k_i is the lattice weight towards nodes outside the grid.
/// w_k = h * int_{cell k} N(z) z^2 dz / (k h)^2 (second-moment matched cell
/// integral); the self cell |z| < h/2 is folded into w_1.
struct LatticeWeights {
  double spacing = 0.0;
  int size = 0;
  /// w[k], k = 0..size-1, w[0] = 0. Includes the self-cell correction at k = 1.
  std::vector<double> offset;
  /// Tail sums S(K) = sum_{k >= K} w_k over the whole lattice, K = 0..size.
  std::vector<double> tail;
  double band_correction = 0.0;

  double weight(int i, int j) const { return offset[static_cast<std::size_t>(i > j ? i - j : j - i)]; }
  /// k_i = S(i+1) + S(n-i)
  double killing(int i) const;
  /// Full lattice row sum, identical on every node.
  double row_sum() const { return 2.0 * tail[1]; }
};

LatticeWeights assemble_weights(const Grid& grid, const StableKernel& kernel);

/// Nodal samples of the perturbation on the nodes inside the F support.
struct PerturbationBlock {
  std::vector<int> index;
  Matrix fplus, fminus, gplus, gminus, weight;
};

PerturbationBlock sample_perturbation(const LatticeWeights& W, const NonlocalPerturbation& F, const Grid& grid);

/// E^- : Lap(e^{-F-} W) + diag(k) + diag(rho^- h).
Matrix assemble_killed_form(const LatticeWeights& W, const NonlocalPerturbation& F, const LocalMeasure& mu,
                            const Grid& grid);

struct SchrodingerRoutes {
  /// E(u,u) - sum_{i != j} u_i u_j G_ij w_ij - sum_i u_i^2 mu_i h
  Matrix literal;
  /// E + rho^- - 1/2 G^- increments + 1/2 G^+ increments - rho^+
  Matrix symmetrized;
};

SchrodingerRoutes assemble_schrodinger_form(const LatticeWeights& W, const NonlocalPerturbation& F,
                                            const LocalMeasure& mu, const Grid& grid);

struct YForm {
  Matrix a_y;
  /// diagonal of B_rho: rho^+_i h
  Vector b_rho;
};

YForm assemble_Y_form(const Matrix& a_minus, const LatticeWeights& W, const NonlocalPerturbation& F,
                      const LocalMeasure& mu, const Grid& grid);

/// Every operator of the problem on one grid. Densities are the lattice
/// versions (row sums against W), which keep the operator identities exact.
struct FormSystem {
  Grid grid{1.0, 16};
  ProcessSpec spec;
  LatticeWeights weights;
  Matrix a_base;
  Matrix a_minus;
  Matrix a_schr;
  Matrix a_y;
  Vector b_rho;
  Vector mu_plus, mu_minus;
  Vector xi_gplus, xi_gminus;
  Vector rho_plus, rho_minus;

  int size() const { return grid.size(); }
};

/// Assembles everything. Throws DomainError if the perturbation supports are
/// not inside (-L/2, L/2) or h^{beta - alpha} > 0.1.
FormSystem assemble_form_system(const Grid& grid, const StableKernel& kernel, const LocalMeasure& mu,
                                const NonlocalPerturbation& F);

/// Same system with mu^+ multiplied by c; only rho^+, B and A_schr change.
FormSystem rescale_mu_plus(const FormSystem& sys, double c);

/// Factorised positive definite operator.
class GreenOperator {
 public:
  GreenOperator(const Matrix& a, double spacing);

  /// u = A^{-1} (f h), approximating int R(x, y) f(y) dy.
  Vector apply(const Vector& f) const;
  /// Raw solve A^{-1} v.
  Vector solve(const Vector& v) const;
  /// Column j of A^{-1}, the discrete R(., x_j).
  Vector column(int j) const;
  double spacing() const { return spacing_; }
  int size() const { return static_cast<int>(llt_.rows()); }
  double rcond() const { return rcond_; }

 private:
  Eigen::LLT<Matrix> llt_;
  double spacing_;
  double rcond_ = 0.0;
};

Vector green_apply(const Matrix& a, const Vector& f, double spacing);

struct EigenOptions {
  double rq_tolerance = 1e-10;
  double residual_target = 1e-10;
  int max_iterations = 500;
};

struct GroundState {
  double lambda = 0.0;
  Vector h;
  double residual = 0.0;
  double normalization = 0.0;
  double max_value = 0.0;
  int iterations = 0;
};

/// lambda = min u^T A_Y u / u^T B u by inverse power iteration on the pencil.
GroundState principal_eigenpair(const Matrix& a_y, const Vector& b_rho, const EigenOptions& opts = {});
GroundState principal_eigenpair(const Matrix& a_y, const GreenOperator& green_y, const Vector& b_rho,
                                const EigenOptions& opts = {}, const Vector* start = nullptr);

struct DomainValue {
  double theta = std::numeric_limits<double>::infinity();
  bool infinite = true;
};

/// theta(D) = min over u supported on D of u^T A_Y u / (lambda u^T B u).
DomainValue domain_principal_value(const std::vector<int>& domain, const Matrix& a_y, const Vector& b_rho,
                                   double lambda);

/// Indices of the nodes inside the open interval (lo, hi).
std::vector<int> nodes_in(const Grid& grid, double lo, double hi);

/// max_x sum_{|y_j| >= a} R(x, y_j) nu_j h.
double green_tight_tail(const Vector& nu, double a, const GreenOperator& green, const Grid& grid);

/// max over probe columns n/4, n/2, 3n/4 of the entrywise ratio R^Y / R^-.
double greens_domination(const GreenOperator& green_minus, const GreenOperator& green_y);

/// Sampled 3G-type statistic: max over up to 64 pairs (x, w), x != w, of
///   sum_{(y,z) outside K x K} R(x,y) F(y,z) R(z,w) w_yz / R(x,w).
double a_infinity_diagnostic(const JumpFunction& F, const std::vector<bool>& k_set, const GreenOperator& green_minus,
                             const LatticeWeights& W, const Grid& grid);

struct AdmissibleRadius {
  double radius = 0.0;
  /// lambda * ||R^Y(1_B rho^+)||_inf at the returned radius
  double statistic = 0.0;
  double margin = 0.0;
};

/// Largest dyadic r in {L/2, L/4, ...}, r >= 4h, with
/// lambda ||R^Y(1_{B(z,r)} rho^+)||_inf < 1. Throws NumericalError if none.
AdmissibleRadius assumption_A_radius(double z, double lambda, const GreenOperator& green_y, const Vector& rho_plus,
                                     const Grid& grid);

/// lambda ||R^Y(1_{B(z,r)} rho^+)||_inf for one radius.
double assumption_A_statistic(double z, double r, double lambda, const GreenOperator& green_y,
                              const Vector& rho_plus, const Grid& grid);

/// Smallest eigenvalue of a symmetric matrix (dense, for tests and checks).
double min_eigenvalue(const Matrix& a);

/// max |A - A^T| / max |A|.
double asymmetry(const Matrix& a);

}  // namespace stablefk

#endif  // STABLEFK_FORMS_HPP
