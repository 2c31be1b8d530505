#include "stablefk/forms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "stablefk/errors.hpp"

namespace stablefk {

namespace {

// (k + 1/2)^p - (k - 1/2)^p without cancellation, k >= 1.
double centered_power_difference(double k, double p) {
  const double e = 0.5 / k;
  return std::pow(k, p) * (std::expm1(p * std::log1p(e)) - std::expm1(p * std::log1p(-e)));
}

// Second-moment matched weight of offset k for the pure stable kernel:
// h * int_{cell k} K z^{1-alpha} dz / (k h)^2
double moment_weight(double k, double h, double scale, double alpha) {
  const double p = 2.0 - alpha;
  return h * scale * std::pow(h, p) * centered_power_difference(k, p) / (p * k * k * h * h);
}

// Plain cell integral h * int_{cell k} K z^{-1-alpha} dz
double cell_weight(double k, double h, double scale, double alpha) {
  return -h * scale * std::pow(h, -alpha) * centered_power_difference(k, -alpha) / alpha;
}

// sum_{k >= K} cell_weight(k) = h K ((K - 1/2) h)^{-alpha} / alpha
double cell_tail(double K, double h, double scale, double alpha) {
  return h * scale * std::pow((K - 0.5) * h, -alpha) / alpha;
}

constexpr int kTailExtra = 100000;
constexpr int kTailCap = 2000000;
constexpr double kPsiCutoff = 50.0;

void add_laplacian_block(Matrix& a, const PerturbationBlock& blk, const Matrix& coef, double sign) {
  const auto m = static_cast<int>(blk.index.size());
  for (int p = 0; p < m; ++p) {
    const int i = blk.index[static_cast<std::size_t>(p)];
    double row = 0.0;
    for (int q = 0; q < m; ++q) {
      if (p == q) continue;
      const int j = blk.index[static_cast<std::size_t>(q)];
      const double c = sign * coef(p, q) * blk.weight(p, q);
      a(i, j) -= c;
      row += c;
    }
    a(i, i) += row;
  }
}

// sum_j H_ij w_ij / h on the block, scattered to the full grid
Vector block_row_density(const PerturbationBlock& blk, const Matrix& coef, int n, double h) {
  Vector out = Vector::Zero(n);
  const auto m = static_cast<int>(blk.index.size());
  for (int p = 0; p < m; ++p) {
    double row = 0.0;
    for (int q = 0; q < m; ++q) {
      if (p != q) row += coef(p, q) * blk.weight(p, q);
    }
    out(blk.index[static_cast<std::size_t>(p)]) = row / h;
  }
  return out;
}

Vector sample_density(const Density& f, const Grid& grid) {
  Vector out(grid.size());
  for (int i = 0; i < grid.size(); ++i) out(i) = f ? f(grid.node(i)) : 0.0;
  return out;
}

Matrix base_matrix(const LatticeWeights& W) {
  const int n = W.size;
  Matrix a(n, n);
  const double diag = W.row_sum();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = i == j ? diag : -W.weight(i, j);
  }
  return a;
}

void check_sizes(const LatticeWeights& W, const Grid& grid) {
  if (W.size != grid.size() || W.spacing != grid.spacing()) throw DomainError("weights do not match grid");
}

}  // namespace

double LatticeWeights::killing(int i) const {
  return tail[static_cast<std::size_t>(i + 1)] + tail[static_cast<std::size_t>(size - i)];
}

LatticeWeights assemble_weights(const Grid& grid, const StableKernel& kernel) {
  LatticeWeights W;
  const int n = grid.size();
  const double h = grid.spacing();
  const double a = kernel.alpha();
  const double K = kernel.scale();
  W.spacing = h;
  W.size = n;
  W.offset.assign(static_cast<std::size_t>(n), 0.0);
  W.tail.assign(static_cast<std::size_t>(n) + 1, 0.0);

  // self cell |z| < h/2: 1/2 h S(h/2) u'^2 matched by 2 c h^2 u'^2 / 2 per node
  const double band = jump_truncation_stats(0.5 * h, 3.0, kernel).small_jump_variance;
  W.band_correction = band / (2.0 * h);

  if (!kernel.relativistic()) {
    const int kmax = n + kTailExtra;
    double dsum = 0.0;  // sum_{k >= K} (moment - cell)
    for (int k = kmax; k >= 1; --k) {
      const double wk = moment_weight(k, h, K, a);
      dsum += wk - cell_weight(k, h, K, a);
      if (k < n) W.offset[static_cast<std::size_t>(k)] = wk;
      if (k <= n) W.tail[static_cast<std::size_t>(k)] = cell_tail(k, h, K, a) + dsum;
    }
  } else {
    const double mr = kernel.mass_root();
    const auto reach = static_cast<long>(std::ceil(kPsiCutoff / (mr * h)));
    const int kmax = static_cast<int>(std::clamp<long>(reach, n, static_cast<long>(n) + kTailCap));
    double sum = kernel.psi_factor(kmax * h) * cell_tail(kmax + 1, h, K, a);
    for (int k = kmax; k >= 1; --k) {
      const double wk = moment_weight(k, h, K, a) * kernel.psi_factor(k * h);
      sum += wk;
      if (k < n) W.offset[static_cast<std::size_t>(k)] = wk;
      if (k <= n) W.tail[static_cast<std::size_t>(k)] = sum;
    }
  }
  W.offset[1] += W.band_correction;
  W.tail[1] += W.band_correction;
  W.tail[0] = W.tail[1];
  return W;
}

PerturbationBlock sample_perturbation(const LatticeWeights& W, const NonlocalPerturbation& F, const Grid& grid) {
  check_sizes(W, grid);
  PerturbationBlock blk;
  if (F.bound == 0.0 || F.support_radius <= 0.0) return blk;
  for (int i = 0; i < grid.size(); ++i) {
    if (std::abs(grid.node(i)) <= F.support_radius) blk.index.push_back(i);
  }
  const auto m = static_cast<int>(blk.index.size());
  blk.fplus = Matrix::Zero(m, m);
  blk.fminus = Matrix::Zero(m, m);
  blk.gplus = Matrix::Zero(m, m);
  blk.gminus = Matrix::Zero(m, m);
  blk.weight = Matrix::Zero(m, m);
#pragma omp parallel for schedule(static)
  for (int q = 0; q < m; ++q) {
    const int j = blk.index[static_cast<std::size_t>(q)];
    for (int p = 0; p < m; ++p) {
      if (p == q) continue;
      const int i = blk.index[static_cast<std::size_t>(p)];
      const double x = grid.node(i);
      const double y = grid.node(j);
      const double fp = F.fplus(x, y);
      const double fm = F.fminus(x, y);
      blk.fplus(p, q) = fp;
      blk.fminus(p, q) = fm;
      blk.gplus(p, q) = std::expm1(fp) * std::exp(-fm);
      blk.gminus(p, q) = -std::expm1(-fm);
      blk.weight(p, q) = W.weight(i, j);
    }
  }
  return blk;
}

Matrix assemble_killed_form(const LatticeWeights& W, const NonlocalPerturbation& F, const LocalMeasure& mu,
                            const Grid& grid) {
  const auto blk = sample_perturbation(W, F, grid);
  const double h = grid.spacing();
  Matrix a = base_matrix(W);
  Vector rho_minus = sample_density(mu.vminus, grid);
  if (!blk.index.empty()) {
    // e^{-F-} w = w - G- w
    add_laplacian_block(a, blk, blk.gminus, -1.0);
    rho_minus += block_row_density(blk, blk.gminus, W.size, h);
  }
  a.diagonal() += rho_minus * h;
  return a;
}

SchrodingerRoutes assemble_schrodinger_form(const LatticeWeights& W, const NonlocalPerturbation& F,
                                            const LocalMeasure& mu, const Grid& grid) {
  const auto blk = sample_perturbation(W, F, grid);
  const double h = grid.spacing();
  const int n = W.size;
  const Vector mup = sample_density(mu.vplus, grid);
  const Vector mum = sample_density(mu.vminus, grid);

  SchrodingerRoutes r;
  r.literal = base_matrix(W);
  r.literal.diagonal() -= (mup - mum) * h;
  r.symmetrized = r.literal;
  if (blk.index.empty()) return r;

  const auto m = static_cast<int>(blk.index.size());
  for (int q = 0; q < m; ++q) {
    for (int p = 0; p < m; ++p) {
      if (p == q) continue;
      const double g = std::expm1(blk.fplus(p, q) - blk.fminus(p, q));
      r.literal(blk.index[static_cast<std::size_t>(p)], blk.index[static_cast<std::size_t>(q)]) -=
          g * blk.weight(p, q);
    }
  }

  const Vector xp = block_row_density(blk, blk.gplus, n, h);
  const Vector xm = block_row_density(blk, blk.gminus, n, h);
  r.symmetrized.diagonal() += (xm - xp) * h;
  add_laplacian_block(r.symmetrized, blk, blk.gminus, -1.0);
  add_laplacian_block(r.symmetrized, blk, blk.gplus, 1.0);
  return r;
}

YForm assemble_Y_form(const Matrix& a_minus, const LatticeWeights& W, const NonlocalPerturbation& F,
                      const LocalMeasure& mu, const Grid& grid) {
  const auto blk = sample_perturbation(W, F, grid);
  const double h = grid.spacing();
  YForm y;
  y.a_y = a_minus;
  Vector rho = sample_density(mu.vplus, grid);
  if (!blk.index.empty()) {
    add_laplacian_block(y.a_y, blk, blk.gplus, 1.0);
    rho += block_row_density(blk, blk.gplus, W.size, h);
  }
  y.b_rho = rho * h;
  return y;
}

FormSystem assemble_form_system(const Grid& grid, const StableKernel& kernel, const LocalMeasure& mu,
                                const NonlocalPerturbation& F) {
  const double L = grid.half_width();
  const double h = grid.spacing();
  if (mu.support_radius > 0.5 * L) throw DomainError("local perturbation support exceeds L/2");
  if (F.bound > 0.0 && F.support_radius > 0.5 * L) throw DomainError("nonlocal perturbation support exceeds L/2");
  if (F.bound > 0.0 && std::pow(h, F.cert.exponent - kernel.alpha()) > 0.1) {
    throw DomainError("grid too coarse: h^(beta - alpha) > 0.1");
  }

  FormSystem s;
  s.grid = grid;
  s.spec = kernel.spec();
  s.weights = assemble_weights(grid, kernel);
  const auto& W = s.weights;
  const auto blk = sample_perturbation(W, F, grid);
  const int n = grid.size();

  s.a_base = base_matrix(W);
  s.mu_plus = sample_density(mu.vplus, grid);
  s.mu_minus = sample_density(mu.vminus, grid);
  s.xi_gplus = Vector::Zero(n);
  s.xi_gminus = Vector::Zero(n);
  if (!blk.index.empty()) {
    s.xi_gplus = block_row_density(blk, blk.gplus, n, h);
    s.xi_gminus = block_row_density(blk, blk.gminus, n, h);
  }
  s.rho_plus = s.mu_plus + s.xi_gplus;
  s.rho_minus = s.mu_minus + s.xi_gminus;

  s.a_minus = s.a_base;
  if (!blk.index.empty()) add_laplacian_block(s.a_minus, blk, blk.gminus, -1.0);
  s.a_minus.diagonal() += s.rho_minus * h;

  s.a_y = s.a_minus;
  if (!blk.index.empty()) add_laplacian_block(s.a_y, blk, blk.gplus, 1.0);
  s.b_rho = s.rho_plus * h;

  s.a_schr = s.a_base;
  s.a_schr.diagonal() += (s.rho_minus - s.rho_plus) * h;
  if (!blk.index.empty()) {
    add_laplacian_block(s.a_schr, blk, blk.gminus, -1.0);
    add_laplacian_block(s.a_schr, blk, blk.gplus, 1.0);
  }
  return s;
}

FormSystem rescale_mu_plus(const FormSystem& sys, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("mu+ scale must be positive");
  FormSystem s = sys;
  const double h = sys.grid.spacing();
  s.a_schr.diagonal() -= (c - 1.0) * sys.mu_plus * h;
  s.mu_plus *= c;
  s.rho_plus = s.mu_plus + s.xi_gplus;
  s.b_rho = s.rho_plus * h;
  return s;
}

GreenOperator::GreenOperator(const Matrix& a, double spacing) : llt_(a), spacing_(spacing) {
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization failed: operator is not positive definite");
  }
  rcond_ = llt_.rcond();
  if (!(rcond_ > 1e-15)) {
    std::ostringstream os;
    os << "operator numerically singular, reciprocal condition estimate " << rcond_;
    throw NumericalError(os.str());
  }
}

Vector GreenOperator::apply(const Vector& f) const { return llt_.solve(f * spacing_); }

Vector GreenOperator::solve(const Vector& v) const { return llt_.solve(v); }

Vector GreenOperator::column(int j) const {
  Vector e = Vector::Zero(size());
  e(j) = 1.0;
  return llt_.solve(e);
}

Vector green_apply(const Matrix& a, const Vector& f, double spacing) { return GreenOperator(a, spacing).apply(f); }

GroundState principal_eigenpair(const Matrix& a_y, const Vector& b_rho, const EigenOptions& opts) {
  const GreenOperator green(a_y, 1.0);
  return principal_eigenpair(a_y, green, b_rho, opts);
}

GroundState principal_eigenpair(const Matrix& a_y, const GreenOperator& green_y, const Vector& b_rho,
                                const EigenOptions& opts, const Vector* start) {
  const auto n = a_y.rows();
  if (b_rho.size() != n) throw DomainError("principal_eigenpair: size mismatch");
  if (b_rho.minCoeff() < 0.0) throw DomainError("principal_eigenpair: B must be non-negative");
  if (!(b_rho.maxCoeff() > 0.0)) throw DomainError("principal_eigenpair: rho+ vanishes, the problem is undefined");

  Vector u = start != nullptr ? *start : Vector::Ones(n);
  double bn = u.dot(b_rho.cwiseProduct(u));
  if (!(bn > 0.0)) {
    u = Vector::Ones(n);
    bn = u.dot(b_rho.cwiseProduct(u));
  }
  u /= std::sqrt(bn);

  GroundState gs;
  double rq_prev = std::numeric_limits<double>::infinity();
  double best_res = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Vector bu = b_rho.cwiseProduct(u);
    Vector v = green_y.solve(bu);
    // A v = B u, so v^T A v = v^T B u
    const double den = v.dot(b_rho.cwiseProduct(v));
    const double rq = v.dot(bu) / den;
    u = v / std::sqrt(den);
    const double res = (a_y * u - rq * b_rho.cwiseProduct(u)).norm() / u.norm();
    gs.iterations = it;
    gs.lambda = rq;
    gs.residual = res;
    best_res = std::min(best_res, res);
    const bool stagnant = std::abs(rq - rq_prev) <= opts.rq_tolerance * std::abs(rq);
    if (stagnant && res <= opts.residual_target) break;
    // residual floor reached: rounding dominates further progress
    if (stagnant && it > 20 && res > 0.5 * best_res && res <= 1e-9) break;
    rq_prev = rq;
  }
  if (!(gs.residual <= 1e-9)) {
    std::ostringstream os;
    os << "eigen-iteration did not converge after " << gs.iterations << " iterations, residual " << gs.residual;
    throw NumericalError(os.str());
  }
  if (u.sum() < 0.0) u = -u;
  u /= std::sqrt(u.dot(b_rho.cwiseProduct(u)));
  if (!(u.minCoeff() > 0.0)) throw NumericalError("ground state is not strictly positive on the grid");
  gs.h = u;
  gs.normalization = u.dot(b_rho.cwiseProduct(u));
  gs.max_value = u.maxCoeff();
  return gs;
}

DomainValue domain_principal_value(const std::vector<int>& domain, const Matrix& a_y, const Vector& b_rho,
                                   double lambda) {
  if (domain.empty()) throw DomainError("domain_principal_value: empty domain");
  if (!(lambda > 0.0)) throw DomainError("domain_principal_value: lambda must be positive");
  const auto m = static_cast<Eigen::Index>(domain.size());
  Matrix sub(m, m);
  Vector bsub(m);
  for (Eigen::Index q = 0; q < m; ++q) {
    const int j = domain[static_cast<std::size_t>(q)];
    if (j < 0 || j >= a_y.rows()) throw DomainError("domain_principal_value: index out of range");
    bsub(q) = b_rho(j);
    for (Eigen::Index p = 0; p < m; ++p) sub(p, q) = a_y(domain[static_cast<std::size_t>(p)], j);
  }
  DomainValue out;
  if (!(bsub.maxCoeff() > 0.0)) return out;
  const auto gs = principal_eigenpair(sub, bsub);
  out.theta = gs.lambda / lambda;
  out.infinite = false;
  return out;
}

std::vector<int> nodes_in(const Grid& grid, double lo, double hi) {
  std::vector<int> out;
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    if (x > lo && x < hi) out.push_back(i);
  }
  return out;
}

double green_tight_tail(const Vector& nu, double a, const GreenOperator& green, const Grid& grid) {
  if (!(a > 0.0)) throw DomainError("green_tight_tail: a must be positive");
  if (a >= grid.half_width()) return 0.0;
  Vector f = Vector::Zero(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    if (std::abs(grid.node(j)) >= a) f(j) = nu(j);
  }
  if (f.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  return green.apply(f).maxCoeff();
}

double greens_domination(const GreenOperator& green_minus, const GreenOperator& green_y) {
  const int n = green_minus.size();
  if (green_y.size() != n) throw DomainError("greens_domination: size mismatch");
  double k = 0.0;
  for (const int j : {n / 4, n / 2, (3 * n) / 4}) {
    const Vector cy = green_y.column(j);
    const Vector cm = green_minus.column(j);
    for (int i = 0; i < n; ++i) {
      if (cy(i) < 1e-14 && cm(i) < 1e-14) continue;
      k = std::max(k, cy(i) / cm(i));
    }
  }
  if (!std::isfinite(k) || !(k > 0.0)) throw NumericalError("Green function ratio is not finite and positive");
  return k;
}

double a_infinity_diagnostic(const JumpFunction& F, const std::vector<bool>& k_set, const GreenOperator& green_minus,
                             const LatticeWeights& W, const Grid& grid) {
  check_sizes(W, grid);
  const int n = grid.size();
  if (static_cast<int>(k_set.size()) != n) throw DomainError("a_infinity_diagnostic: K mask size mismatch");
  if (F.support_radius <= 0.0 || F.cert.constant == 0.0) return 0.0;

  std::vector<int> supp;
  for (int i = 0; i < n; ++i) {
    if (std::abs(grid.node(i)) <= F.support_radius) supp.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(supp.size());
  if (m < 2) return 0.0;
  Matrix q = Matrix::Zero(m, m);
  for (Eigen::Index b = 0; b < m; ++b) {
    for (Eigen::Index a = 0; a < m; ++a) {
      if (a == b) continue;
      const int i = supp[static_cast<std::size_t>(a)];
      const int j = supp[static_cast<std::size_t>(b)];
      q(a, b) = F.value(grid.node(i), grid.node(j)) * W.weight(i, j);
    }
  }

  // 8 probe points spread across the middle half of the box: 56 ordered pairs
  constexpr int kProbes = 8;
  std::vector<Vector> cols;
  std::vector<int> probes;
  for (int k = 0; k < kProbes; ++k) {
    const double x = -0.5 * grid.half_width() + grid.half_width() * (k + 0.5) / kProbes;
    const int j = grid.nearest(x);
    probes.push_back(j);
    const Vector c = green_minus.column(j);
    Vector r(m);
    for (Eigen::Index a = 0; a < m; ++a) r(a) = c(supp[static_cast<std::size_t>(a)]);
    cols.push_back(r);
  }
  Vector kmask(m);
  for (Eigen::Index a = 0; a < m; ++a) kmask(a) = k_set[static_cast<std::size_t>(supp[static_cast<std::size_t>(a)])] ? 1.0 : 0.0;

  double stat = 0.0;
  for (int s = 0; s < kProbes; ++s) {
    const Vector full_x = green_minus.column(probes[static_cast<std::size_t>(s)]);
    for (int t = 0; t < kProbes; ++t) {
      if (s == t) continue;
      const Vector& rx = cols[static_cast<std::size_t>(s)];
      const Vector& rw = cols[static_cast<std::size_t>(t)];
      const Vector qrw = q * rw;
      const Vector qrw_k = q * rw.cwiseProduct(kmask);
      const double outer = rx.dot(qrw) - rx.cwiseProduct(kmask).dot(qrw_k);
      const double rxw = full_x(probes[static_cast<std::size_t>(t)]);
      stat = std::max(stat, outer / rxw);
    }
  }
  return stat;
}

double assumption_A_statistic(double z, double r, double lambda, const GreenOperator& green_y,
                              const Vector& rho_plus, const Grid& grid) {
  Vector f = Vector::Zero(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    if (std::abs(grid.node(j) - z) < r) f(j) = rho_plus(j);
  }
  if (f.maxCoeff() <= 0.0) return 0.0;
  return lambda * green_y.apply(f).maxCoeff();
}

AdmissibleRadius assumption_A_radius(double z, double lambda, const GreenOperator& green_y, const Vector& rho_plus,
                                     const Grid& grid) {
  const double L = grid.half_width();
  if (!(std::abs(z) < L)) throw DomainError("assumption_A_radius: z must lie inside the grid");
  double last = 0.0;
  for (double r = 0.5 * L; r >= 4.0 * grid.spacing(); r *= 0.5) {
    const double s = assumption_A_statistic(z, r, lambda, green_y, rho_plus, grid);
    last = s;
    if (s < 1.0) return {r, s, 1.0 - s};
  }
  std::ostringstream os;
  os << "no admissible radius around z = " << z << " down to 4h; smallest-window statistic " << last;
  throw NumericalError(os.str());
}

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return es.eigenvalues()(0);
}

double asymmetry(const Matrix& a) {
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace stablefk
