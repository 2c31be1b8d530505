#include "stablefk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stablefk/errors.hpp"

namespace stablefk {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kPsiQuadTol = 1e-10;

// log of int_R exp(p t - e^t/4 - r^2 e^{-t}) dt, the s-integral written in t = log s.
double log_bessel_integral(double p, double r) {
  const double r2 = r * r;
  auto g = [p, r2](double t) { return p * t - 0.25 * std::exp(t) - r2 * std::exp(-t); };

  const double s_peak = 2.0 * p + 2.0 * std::sqrt(p * p + r2);
  if (!(s_peak > 0.0)) throw DomainError("psi integral diverges for this exponent at r = 0");
  const double t_peak = std::log(s_peak);
  const double g_peak = g(t_peak);

  // Breakpoints walk out from the peak in steps that start at the Laplace
  // width and double (capped at 1) until the integrand is below e^{-50}.
  const double curv = 0.25 * s_peak + r2 / s_peak;
  const double width = 1.0 / std::sqrt(curv);
  // g(t_peak + u) - g_peak without cancellation
  const double qa = 0.25 * s_peak, qb = r2 / s_peak;
  auto dg = [&](double t) {
    const double u = t - t_peak;
    return p * u - qa * std::expm1(u) - qb * std::expm1(-u);
  };
  auto f = [&](double t) { return std::exp(dg(t)); };
  double total = 0.0, err = 0.0;
  for (double dir : {-1.0, 1.0}) {
    double t = t_peak;
    double step = std::min(width, 1.0);
    for (int i = 0;; ++i) {
      if (i > 4000) throw NumericalError("psi integral: tail does not decay");
      const double next = t + dir * step;
      double e = 0.0;
      const double v = gauss_kronrod<double, 31>::integrate(f, std::min(t, next), std::max(t, next), 2, 1e-13, &e);
      total += v;
      err += e;
      t = next;
      if (dg(t) < -50.0) break;
      step = std::min(2.0 * step, 1.0);
    }
  }
  if (err > kPsiQuadTol * total) {
    throw NumericalError("psi quadrature did not converge at r = " + std::to_string(r));
  }
  return g_peak + std::log(total);
}

double log_psi_norm(double alpha) { return log_bessel_integral(0.5 * (1.0 + alpha), 0.0); }

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw DomainError("alpha must lie in (0,2), got " + std::to_string(alpha));
  }
}

// Integrals of |z|^{p-1-alpha} psi(m^{1/alpha} z) over (0, eps] (below) and
// (eps, inf) (above), one sign only.
double moment_below(double eps, double p, const StableKernel& k) {
  const double a = k.alpha();
  if (!k.relativistic()) return std::pow(eps, p - a) / (p - a);
  auto f = [&](double u) {
    const double z = eps * std::exp(-u);
    return k.psi_factor(z) * std::pow(z, p - a);
  };
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, 0.0, 40.0 / (p - a), 20, 1e-13, &err);
  if (err > 1e-10 * std::abs(v)) throw NumericalError("small-jump moment quadrature did not converge");
  return v;
}

double tail_above(double eps, const StableKernel& k) {
  const double a = k.alpha();
  if (!k.relativistic()) return std::pow(eps, -a) / a;
  auto f = [&](double u) {
    const double z = eps * std::exp(u);
    return k.psi_factor(z) * std::pow(z, -a);
  };
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, 0.0, 40.0 / a, 20, 1e-13, &err);
  if (err > 1e-10 * std::abs(v)) throw NumericalError("tail-rate quadrature did not converge");
  return v;
}

}  // namespace

void ProcessSpec::validate() const {
  if (dim != 1) throw DomainError("only dimension 1 is supported");
  check_alpha(alpha);
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw DomainError("mass must be finite and >= 0");
  if (mass == 0.0 && alpha < 1.0) {
    throw DomainError("the stable process (mass 0) is recurrent in d = 1 only for alpha >= 1");
  }
  if (!(intensity_multiplier > 0.0) || !std::isfinite(intensity_multiplier)) {
    throw DomainError("intensity_multiplier must be a positive finite number");
  }
}

double normalization_constant(double alpha) {
  check_alpha(alpha);
  const double num = alpha * std::tgamma(0.5 * (1.0 + alpha));
  const double den =
      std::pow(2.0, 1.0 - alpha) * std::sqrt(std::numbers::pi) * std::tgamma(1.0 - 0.5 * alpha);
  return num / den;
}

double normalization_constant(const ProcessSpec& spec) {
  spec.validate();
  return normalization_constant(spec.alpha);
}

double psi_integral(double r, double alpha) {
  check_alpha(alpha);
  if (!(r >= 0.0)) throw DomainError("psi: r must be >= 0");
  return std::exp(log_bessel_integral(0.5 * (1.0 + alpha), r));
}

double psi(double r, double alpha) {
  check_alpha(alpha);
  if (!(r >= 0.0)) throw DomainError("psi: r must be >= 0");
  if (r == 0.0) return 1.0;
  // psi(r) < e^{-r} r^nu: below the double range well before this
  if (r > 800.0) return 0.0;
  return std::exp(log_bessel_integral(0.5 * (1.0 + alpha), r) - log_psi_norm(alpha));
}

double psi_derivative(double r, double alpha) {
  check_alpha(alpha);
  if (!(r >= 0.0)) throw DomainError("psi: r must be >= 0");
  if (r == 0.0) return 0.0;
  if (r > 800.0) return 0.0;
  const double nu = 0.5 * (1.0 + alpha);
  return -2.0 * r * std::exp(log_bessel_integral(nu - 1.0, r) - log_psi_norm(alpha));
}

PsiTable::PsiTable(double alpha, double r_max, int intervals)
    : alpha_(alpha), r_max_(r_max), intervals_(intervals) {
  check_alpha(alpha);
  if (!(r_max > 0.0) || intervals < 8) throw DomainError("PsiTable: bad layout");
  const auto n = static_cast<std::size_t>(intervals) + 1;
  nodes_.resize(n);
  values_.resize(n);
  slopes_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / intervals;
    nodes_[k] = r_max * s * s * s;
    values_[k] = psi(nodes_[k], alpha);
    slopes_[k] = psi_derivative(nodes_[k], alpha);
  }
  // Fritsch-Carlson limiter on the exact slopes; only active if an exact
  // derivative would break monotonicity of the interpolant.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = nodes_[k + 1] - nodes_[k];
    const double delta = (values_[k + 1] - values_[k]) / h;
    if (delta == 0.0) {
      slopes_[k] = slopes_[k + 1] = 0.0;
      continue;
    }
    slopes_[k] = std::min(slopes_[k], 0.0);
    slopes_[k + 1] = std::min(slopes_[k + 1], 0.0);
    const double a = slopes_[k] / delta;
    const double b = slopes_[k + 1] / delta;
    const double rr = a * a + b * b;
    if (rr > 9.0) {
      const double tau = 3.0 / std::sqrt(rr);
      slopes_[k] = tau * a * delta;
      slopes_[k + 1] = tau * b * delta;
    }
  }
}

double PsiTable::operator()(double r) const {
  if (!(r >= 0.0)) throw DomainError("psi: r must be >= 0");
  if (r >= r_max_) return psi(r, alpha_);
  auto k = static_cast<std::size_t>(std::cbrt(r / r_max_) * intervals_);
  k = std::min(k, static_cast<std::size_t>(intervals_ - 1));
  while (k > 0 && nodes_[k] > r) --k;
  while (k + 1 < nodes_.size() - 1 && nodes_[k + 1] <= r) ++k;
  const double h = nodes_[k + 1] - nodes_[k];
  const double t = (r - nodes_[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * values_[k] + (t3 - 2 * t2 + t) * h * slopes_[k] +
         (-2 * t3 + 3 * t2) * values_[k + 1] + (t3 - t2) * h * slopes_[k + 1];
}

StableKernel::StableKernel(const ProcessSpec& spec) : spec_(spec) {
  spec_.validate();
  constant_ = normalization_constant(spec_.alpha);
  scale_ = spec_.intensity_multiplier * constant_;
  mass_root_ = spec_.mass > 0.0 ? std::pow(spec_.mass, 1.0 / spec_.alpha) : 0.0;
  if (spec_.mass > 0.0) psi_table_ = std::make_shared<const PsiTable>(spec_.alpha);
}

double StableKernel::psi_factor(double dist) const {
  if (!psi_table_) return 1.0;
  return (*psi_table_)(mass_root_ * std::abs(dist));
}

double StableKernel::intensity(double dist) const {
  const double d = std::abs(dist);
  return scale_ * psi_factor(d) / std::pow(d, 1.0 + spec_.alpha);
}

double StableKernel::characteristic_coefficient() const {
  if (relativistic()) throw DomainError("characteristic coefficient is closed-form only for mass 0");
  const double a = spec_.alpha;
  return scale_ * std::numbers::pi / (std::tgamma(1.0 + a) * std::sin(0.5 * std::numbers::pi * a));
}

double jump_intensity(double x, double y, const StableKernel& kernel) {
  if (x == y) throw DomainError("jump intensity is singular on the diagonal");
  return kernel.intensity(x - y);
}

double compensated_kernel(double x, double y, const ProcessSpec& spec) {
  spec.validate();
  if (x == y) throw DomainError("compensated kernel is singular on the diagonal");
  const double d = std::abs(x - y);
  if (spec.alpha == 1.0) return -std::log(d);
  return std::pow(d, spec.alpha - 1.0);
}

TruncationStats jump_truncation_stats(double epsilon, double beta, const StableKernel& kernel) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be > 0");
  if (!(beta > kernel.alpha())) throw DomainError("beta must exceed alpha");
  const double two_k = 2.0 * kernel.scale();
  TruncationStats s;
  s.epsilon = epsilon;
  s.tail_rate = two_k * tail_above(epsilon, kernel);
  s.small_jump_variance = two_k * moment_below(epsilon, 2.0, kernel);
  s.beta_moment = two_k * moment_below(epsilon, beta, kernel);
  return s;
}

double tail_mass(double d, const StableKernel& kernel) {
  if (!(d > 0.0)) throw DomainError("tail_mass: d must be > 0");
  return 2.0 * kernel.scale() * tail_above(d, kernel);
}

}  // namespace stablefk
