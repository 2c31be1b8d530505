#include "stablefk/perturbations.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stablefk/errors.hpp"

namespace stablefk {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kBandBudget = 1e-10;
constexpr double kChannelTol = 1e-8;

double diag_decay(double x, double y, double beta) {
  return std::pow(std::min(std::abs(x - y), 1.0), beta);
}

// One side of the channel integral, z in [delta, zmax], in u = log z.
double side_integral(const std::function<double(double)>& g, double delta, double zmax, double& err) {
  if (!(zmax > delta)) return 0.0;
  auto f = [&](double u) {
    const double z = std::exp(u);
    return g(z) * z;
  };
  double total = 0.0;
  const double ulo = std::log(delta);
  const double uhi = std::log(zmax);
  // split at the min(|z|,1) kink
  std::vector<double> cuts{ulo};
  if (ulo < 0.0 && uhi > 0.0) cuts.push_back(0.0);
  cuts.push_back(uhi);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double e = 0.0;
    total += gauss_kronrod<double, 31>::integrate(f, cuts[k], cuts[k + 1], 20, 1e-10, &e);
    err += e;
  }
  return total;
}

}  // namespace

double Bump::shape(double x) const {
  const double s = (x - center) / width;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double Bump::operator()(double x) const { return amplitude == 0.0 ? 0.0 : amplitude * shape(x); }

double Bump::support_radius() const { return std::abs(center) + width; }

LocalMeasure LocalMeasure::zero() {
  LocalMeasure mu;
  mu.vplus = [](double) { return 0.0; };
  mu.vminus = [](double) { return 0.0; };
  return mu;
}

LocalMeasure LocalMeasure::from_bumps(const Bump& plus, const Bump& minus) {
  if (plus.amplitude < 0.0 || minus.amplitude < 0.0) throw DomainError("bump amplitudes must be >= 0");
  if (!(plus.width > 0.0) || !(minus.width > 0.0)) throw DomainError("bump widths must be > 0");
  LocalMeasure mu;
  mu.vplus = plus;
  mu.vminus = minus;
  mu.sup_plus = plus.amplitude;
  mu.sup_minus = minus.amplitude;
  double s = 0.0;
  if (plus.amplitude > 0.0) s = std::max(s, plus.support_radius());
  if (minus.amplitude > 0.0) s = std::max(s, minus.support_radius());
  mu.support_radius = s;
  return mu;
}

LocalMeasure LocalMeasure::scaled_plus(double c) const {
  if (!(c >= 0.0)) throw DomainError("scale must be >= 0");
  LocalMeasure mu = *this;
  mu.vplus = [v = vplus, c](double x) { return c * v(x); };
  mu.sup_plus = c * sup_plus;
  return mu;
}

JumpFunction JumpFunction::zero() {
  return {[](double, double) { return 0.0; }, {0.0, 3.0}, 0.0};
}

NonlocalPerturbation NonlocalPerturbation::zero(double beta) {
  NonlocalPerturbation F;
  F.fplus = [](double, double) { return 0.0; };
  F.fminus = [](double, double) { return 0.0; };
  F.cert = {0.0, beta};
  return F;
}

NonlocalPerturbation NonlocalPerturbation::from_family(const NonlocalFamily& fam) {
  if (fam.aplus < 0.0 || fam.aminus < 0.0) throw DomainError("family amplitudes must be >= 0");
  if (!(fam.plus_bump.width > 0.0) || !(fam.minus_bump.width > 0.0)) throw DomainError("bump widths must be > 0");
  Bump chi = fam.plus_bump;
  Bump chit = fam.minus_bump;
  chi.amplitude = chit.amplitude = 1.0;
  auto raw = [fam, chi, chit](double x, double y) {
    if (x == y) return 0.0;
    const double d = diag_decay(x, y, fam.beta);
    double v = 0.0;
    if (fam.aplus > 0.0) v += fam.aplus * (chi.shape(x) * chi.shape(y)) * d;
    if (fam.aminus > 0.0) v -= fam.aminus * (chit.shape(x) * chit.shape(y)) * d;
    return v;
  };
  NonlocalPerturbation F;
  F.fplus = [raw](double x, double y) { return std::max(raw(x, y), 0.0); };
  F.fminus = [raw](double x, double y) { return std::max(-raw(x, y), 0.0); };
  F.bound = std::max(fam.aplus, fam.aminus);
  F.cert = {F.bound, fam.beta};
  double s = 0.0;
  if (fam.aplus > 0.0) s = std::max(s, chi.support_radius());
  if (fam.aminus > 0.0) s = std::max(s, chit.support_radius());
  F.support_radius = s;
  return F;
}

void NonlocalPerturbation::validate(int samples, std::uint64_t seed) const {
  if (!(bound >= 0.0)) throw DomainError("F bound must be >= 0");
  std::mt19937_64 rng(seed);
  const double box = std::max(support_radius, 1.0) * 1.25;
  std::uniform_real_distribution<double> pos(-box, box);
  std::uniform_real_distribution<double> near(-1.0, 1.0);
  for (int k = 0; k < samples; ++k) {
    const double x = pos(rng);
    const double y = (k % 2 == 0) ? pos(rng) : x + near(rng);
    const double p = fplus(x, y), m = fminus(x, y);
    if (p < 0.0 || m < 0.0) throw DomainError("F parts must be non-negative");
    if (p * m != 0.0) throw DomainError("F+ and F- must be pointwise disjoint");
    if (p != fplus(y, x) || m != fminus(y, x)) throw DomainError("F must be symmetric");
    if (p > bound || m > bound) throw DomainError("F exceeds its declared bound");
    if (fplus(x, x) != 0.0 || fminus(x, x) != 0.0) throw DomainError("F must vanish on the diagonal");
    const double d = std::abs(x - y);
    if (d <= 1.0 && std::max(p, m) > cert.constant * std::pow(d, cert.exponent) * (1.0 + 1e-12)) {
      throw DomainError("diagonal certificate violated at |x - y| = " + std::to_string(d));
    }
    if ((std::abs(x) > support_radius || std::abs(y) > support_radius) && (p != 0.0 || m != 0.0)) {
      throw DomainError("F is non-zero outside its declared support");
    }
  }
}

double comparability_constant(double bound) {
  if (!(bound >= 0.0)) throw DomainError("bound must be >= 0");
  if (bound == 0.0) return 1.0;
  return std::max(std::exp(bound), bound / -std::expm1(-bound));
}

double comparability_constant(const NonlocalPerturbation& F) { return comparability_constant(F.bound); }

DecomposedPerturbation li_decompose(const NonlocalPerturbation& F) {
  DecomposedPerturbation d;
  d.gplus = [fp = F.fplus, fm = F.fminus](double x, double y) {
    return std::expm1(fp(x, y)) * std::exp(-fm(x, y));
  };
  d.gminus = [fm = F.fminus](double x, double y) { return -std::expm1(-fm(x, y)); };
  d.comparability = comparability_constant(F);
  d.cert_plus = {d.comparability * F.cert.constant, F.cert.exponent};
  d.cert_minus = F.cert;
  d.support_radius = F.support_radius;
  return d;
}

ChannelValue channel_density_with_error(const JumpFunction& H, double x, const StableKernel& kernel) {
  const double alpha = kernel.alpha();
  const double beta = H.cert.exponent;
  if (!(beta > alpha)) {
    throw DomainError("certificate exponent beta = " + std::to_string(beta) + " must exceed alpha");
  }
  const double s = H.support_radius;
  if (!(std::abs(x) <= s) || H.cert.constant == 0.0) return {};

  // band |z| < delta: |H| N <= L kappa C |z|^{beta-1-alpha}, integral 2 L kC delta^{beta-alpha}/(beta-alpha)
  const double band_coef = 2.0 * H.cert.constant * kernel.scale() / (beta - alpha);
  double delta = std::pow(kBandBudget / band_coef, 1.0 / (beta - alpha));
  delta = std::clamp(delta, 1e-300, 1e-3);
  const double band = band_coef * std::pow(delta, beta - alpha);
  if (band > kChannelTol) throw NumericalError("channel density: certificate band bound exceeds tolerance");

  double err = 0.0;
  auto right = [&](double z) { return H.value(x, x + z) * kernel.intensity(z); };
  auto left = [&](double z) { return H.value(x, x - z) * kernel.intensity(z); };
  const double v = side_integral(right, delta, s - x, err) + side_integral(left, delta, s + x, err);
  if (err + band > kChannelTol) {
    throw NumericalError("channel density quadrature exceeded tolerance at x = " + std::to_string(x));
  }
  return {v, err + band};
}

double channel_density(const JumpFunction& H, double x, const StableKernel& kernel) {
  return channel_density_with_error(H, x, kernel).value;
}

std::vector<double> revuz_density(const JumpFunction& H, const Grid& grid, const StableKernel& kernel) {
  std::vector<double> out(static_cast<std::size_t>(grid.size()), 0.0);
  for (int i = 0; i < grid.size(); ++i) out[static_cast<std::size_t>(i)] = channel_density(H, grid.node(i), kernel);
  return out;
}

RhoPair assemble_rho(const LocalMeasure& mu, const DecomposedPerturbation& dec, const Grid& grid,
                     const StableKernel& kernel) {
  RhoPair rho;
  rho.plus = revuz_density(dec.plus(), grid, kernel);
  rho.minus = revuz_density(dec.minus(), grid, kernel);
  for (int i = 0; i < grid.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    rho.plus[k] += mu.vplus(grid.node(i));
    rho.minus[k] += mu.vminus(grid.node(i));
  }
  return rho;
}

DensityTable::DensityTable(double radius, int intervals, const Density& f) : radius_(radius) {
  if (!(radius > 0.0) || intervals < 2) throw DomainError("DensityTable: bad layout");
  step_ = 2.0 * radius / intervals;
  values_.resize(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) {
    const double v = f(-radius + k * step_);
    values_[static_cast<std::size_t>(k)] = v;
    sup_ = std::max(sup_, std::abs(v));
  }
  for (std::size_t k = 1; k + 1 < values_.size(); ++k) {
    const double d2 = values_[k - 1] - 2.0 * values_[k] + values_[k + 1];
    curvature_ = std::max(curvature_, std::abs(d2) / (step_ * step_));
  }
}

double DensityTable::operator()(double x) const {
  if (values_.empty() || !(std::abs(x) < radius_)) return 0.0;
  const double s = (x + radius_) / step_;
  auto k = static_cast<std::size_t>(s);
  if (k + 1 >= values_.size()) k = values_.size() - 2;
  const double t = s - static_cast<double>(k);
  return (1.0 - t) * values_[k] + t * values_[k + 1];
}

DensityTable channel_table(const JumpFunction& H, const StableKernel& kernel, double step) {
  if (H.support_radius <= 0.0 || H.cert.constant == 0.0) return {};
  const double r = H.support_radius;
  const int intervals = std::max(2, static_cast<int>(std::ceil(2.0 * r / step)));
  return DensityTable(r, intervals, [&](double x) { return channel_density(H, x, kernel); });
}

KatoModulus kato_modulus(const std::vector<double>& nu, double r, const Grid& grid, const ProcessSpec& spec) {
  spec.validate();
  const double h = grid.spacing();
  if (!(r >= 4.0 * h)) throw DomainError("kato_modulus: window r must resolve at least 4 grid spacings");
  if (nu.size() != static_cast<std::size_t>(grid.size())) throw DomainError("kato_modulus: size mismatch");
  const double a = spec.alpha;

  // P(d) = int_0^d |R_K(z)| dz
  auto primitive = [a](double d) {
    if (d <= 0.0) return 0.0;
    if (a != 1.0) return std::pow(d, a) / a;
    if (d <= 1.0) return d - d * std::log(d);
    return d * std::log(d) - d + 2.0;
  };
  auto signed_primitive = [&](double z) { return z < 0.0 ? -primitive(-z) : primitive(z); };

  KatoModulus out;
  const int n = grid.size();
  const int reach = static_cast<int>(std::ceil(std::max(r, 1.0) / h)) + 1;
  for (int i = 0; i < n; ++i) {
    double windowed = 0.0, local = 0.0;
    for (int j = std::max(0, i - reach); j <= std::min(n - 1, i + reach); ++j) {
      const double v = nu[static_cast<std::size_t>(j)];
      if (v == 0.0) continue;
      const double lo = (j - i) * h - 0.5 * h;
      const double hi = lo + h;
      const double a_lo = std::max(lo, -r), a_hi = std::min(hi, r);
      if (a_hi > a_lo) windowed += std::abs(v) * (signed_primitive(a_hi) - signed_primitive(a_lo));
      const double m_lo = std::max(lo, -1.0), m_hi = std::min(hi, 1.0);
      if (m_hi > m_lo) local += std::abs(v) * (m_hi - m_lo);
    }
    out.value = std::max(out.value, windowed);
    out.local_mass = std::max(out.local_mass, local);
  }
  return out;
}

}  // namespace stablefk
