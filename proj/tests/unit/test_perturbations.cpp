#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stablefk/errors.hpp"
#include "stablefk/perturbations.hpp"

using namespace stablefk;

namespace {

NonlocalPerturbation mixed_family(double ap = 0.8, double am = 0.6) {
  NonlocalFamily fam;
  fam.aplus = ap;
  fam.aminus = am;
  fam.beta = 3.0;
  fam.plus_bump = {1.0, -0.5, 1.5};
  fam.minus_bump = {1.0, 1.0, 1.2};
  return NonlocalPerturbation::from_family(fam);
}

StableKernel kernel(double alpha, double mass = 0.0) {
  ProcessSpec s;
  s.alpha = alpha;
  s.mass = mass;
  return StableKernel(s);
}

}  // namespace

TEST_CASE("bump profile") {
  const Bump b{2.0, 1.0, 0.5};
  CHECK(b(1.0) == doctest::Approx(2.0));
  CHECK(b(1.5) == 0.0);
  CHECK(b(0.49) == 0.0);
  CHECK(b(1.2) == doctest::Approx(b(0.8)));
  CHECK(b.support_radius() == doctest::Approx(1.5));
}

TEST_CASE("built-in family passes validation and keeps the parts disjoint") {
  const auto F = mixed_family();
  CHECK_NOTHROW(F.validate());
  CHECK(F.bound == doctest::Approx(0.8));
  CHECK(F.support_radius == doctest::Approx(2.2));

  NonlocalPerturbation bad = F;
  bad.fplus = [](double x, double y) { return x > y ? 0.1 * std::pow(std::min(x - y, 1.0), 3.0) : 0.0; };
  CHECK_THROWS_AS(bad.validate(), DomainError);

  NonlocalPerturbation loose = F;
  loose.cert.constant = 1e-3;
  CHECK_THROWS_AS(loose.validate(), DomainError);
}

TEST_CASE("Li decomposition identities on random pairs") {
  const auto F = mixed_family(1.3, 0.9);
  const auto G = li_decompose(F);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int k = 0; k < 10000; ++k) {
    const double x = u(rng), y = u(rng);
    const double gp = G.gplus(x, y), gm = G.gminus(x, y);
    CHECK(std::abs((gp - gm) - std::expm1(F.value(x, y))) <= 1e-14);
    CHECK(gm >= 0.0);
    CHECK(gm < 1.0);
    CHECK(gp >= 0.0);
  }

  const auto Fp = mixed_family(0.7, 0.0);
  const auto Gp = li_decompose(Fp);
  const auto Fm = mixed_family(0.0, 0.7);
  const auto Gm = li_decompose(Fm);
  for (int k = 0; k < 200; ++k) {
    const double x = u(rng), y = u(rng);
    CHECK(Gp.gminus(x, y) == 0.0);
    CHECK(Gp.gplus(x, y) == std::expm1(Fp.fplus(x, y)));
    CHECK(Gm.gplus(x, y) == 0.0);
    CHECK(Gm.gminus(x, y) == -std::expm1(-Fm.fminus(x, y)));
  }
}

TEST_CASE("comparability constant") {
  CHECK(comparability_constant(0.0) == 1.0);
  CHECK(comparability_constant(1e-9) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(comparability_constant(1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(comparability_constant(-1.0), DomainError);

  const auto F = mixed_family(1.3, 0.9);
  const auto G = li_decompose(F);
  const double C = G.comparability;
  const double M = F.bound;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int k = 0; k < 10000; ++k) {
    const double x = u(rng), y = u(rng);
    const double fp = F.fplus(x, y), fm = F.fminus(x, y);
    const double gp = G.gplus(x, y), gm = G.gminus(x, y);
    CHECK(gp <= C * fp * (1 + 1e-14));
    CHECK(fp <= C * gp * (1 + 1e-14));
    CHECK(gm <= fm);
    CHECK(fm * (-std::expm1(-M)) / M <= gm * (1 + 1e-14));
    CHECK(gm <= C * fm);
  }
}

TEST_CASE("channel density: brute-force trapezoid oracle, alpha = 1") {
  const auto k = kernel(1.0);
  JumpFunction H;
  H.value = [](double x, double y) {
    if (std::abs(x) > 1.0 || std::abs(y) > 1.0) return 0.0;
    return std::pow(std::min(std::abs(x - y), 1.0), 2.0);
  };
  H.cert = {1.0, 2.0};
  H.support_radius = 1.0;
  // H N is K = kC on y in [-1, 1]; the integrand extends continuously to y = x
  const int n = 1000000;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = -1.0 + 2.0 * i / n;
    const double v = y == 0.0 ? k.scale() : H.value(0.0, y) * jump_intensity(0.0, y, k);
    acc += (i == 0 || i == n) ? 0.5 * v : v;
  }
  const double oracle = acc * 2.0 / n;
  CHECK(channel_density(H, 0.0, k) == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(channel_density(H, 0.0, k) == doctest::Approx(4.0 / M_PI).epsilon(1e-9));
  CHECK(channel_density(H, 1.5, k) == 0.0);
}

TEST_CASE("channel density of the family against a trapezoid oracle, alpha = 1.2") {
  const auto k = kernel(1.2);
  const auto F = mixed_family();
  const auto Fp = F.plus();
  for (double x : {-0.7, 0.2}) {
    // integrand ~ |z|^{0.8}: continuous, trapezoid converges at order h^{1.8}
    const int n = 400000;
    const double lo = -F.support_radius, hi = F.support_radius;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double y = lo + (hi - lo) * i / n;
      const double v = y == x ? 0.0 : Fp.value(x, y) * jump_intensity(x, y, k);
      acc += (i == 0 || i == n) ? 0.5 * v : v;
    }
    const double oracle = acc * (hi - lo) / n;
    CHECK(channel_density(Fp, x, k) == doctest::Approx(oracle).epsilon(1e-5));
  }
}

TEST_CASE("channel density rejects a weak certificate") {
  const auto k = kernel(1.5);
  JumpFunction H{[](double, double) { return 0.0; }, {1.0, 1.2}, 1.0};
  CHECK_THROWS_AS(channel_density(H, 0.0, k), DomainError);
  CHECK(channel_density(JumpFunction::zero(), 0.0, k) == 0.0);
}

TEST_CASE("Revuz densities and rho") {
  const auto k = kernel(1.2);
  const Grid grid(5.0, 101);
  const auto F = mixed_family();
  const auto G = li_decompose(F);
  const auto xgp = revuz_density(G.plus(), grid, k);
  const auto xfp = revuz_density(F.plus(), grid, k);
  for (std::size_t i = 0; i < xgp.size(); ++i) {
    CHECK(xgp[i] <= G.comparability * xfp[i] * (1 + 1e-10) + 1e-12);
    if (std::abs(grid.node(static_cast<int>(i))) > F.support_radius) CHECK(xfp[i] == 0.0);
  }
  const auto zero = revuz_density(JumpFunction::zero(), grid, k);
  for (double v : zero) CHECK(v == 0.0);

  const auto mu = LocalMeasure::from_bumps({1.0, 0.0, 1.0}, {0.5, 1.0, 1.0});
  const auto rho = assemble_rho(mu, G, grid, k);
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(rho.plus[static_cast<std::size_t>(i)] >= mu.vplus(grid.node(i)));
    CHECK(rho.minus[static_cast<std::size_t>(i)] >= 0.0);
  }

  const auto G0 = li_decompose(NonlocalPerturbation::zero());
  const auto mu0 = LocalMeasure::from_bumps({1.0, 0.0, 1.0}, {0.0, 0.0, 1.0});
  const auto rho0 = assemble_rho(mu0, G0, grid, k);
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(rho0.minus[static_cast<std::size_t>(i)] == 0.0);
    CHECK(rho0.plus[static_cast<std::size_t>(i)] == mu0.vplus(grid.node(i)));
  }
}

TEST_CASE("channel table interpolates the channel density") {
  const auto k = kernel(1.2);
  const auto F = mixed_family();
  const auto tab = channel_table(F.plus(), k, 0.01);
  for (double x : {-1.3, -0.41, 0.0, 0.77}) {
    CHECK(tab(x) == doctest::Approx(channel_density(F.plus(), x, k)).epsilon(1e-3));
  }
  CHECK(tab(5.0) == 0.0);
  CHECK(tab.sup() > 0.0);
}

TEST_CASE("Kato modulus: envelope, monotonicity and decay") {
  ProcessSpec s;
  s.alpha = 1.5;
  const Grid grid(10.0, 2001);
  std::vector<double> nu(static_cast<std::size_t>(grid.size()));
  double sup = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    nu[static_cast<std::size_t>(i)] = Bump{2.0, 0.5, 2.0}(grid.node(i));
    sup = std::max(sup, nu[static_cast<std::size_t>(i)]);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {0.5, 0.25, 0.1, 0.05}) {
    const auto m = kato_modulus(nu, r, grid, s);
    CHECK(m.value <= (4.0 / 3.0) * sup * std::pow(r, 1.5) * (1 + 1e-12));
    CHECK(m.value < prev);
    prev = m.value;
  }
  CHECK(kato_modulus(nu, 0.05, grid, s).local_mass > 0.0);
  CHECK_THROWS_AS(kato_modulus(nu, 0.01, grid, s), DomainError);

  std::vector<double> zero(nu.size(), 0.0);
  CHECK(kato_modulus(zero, 0.3, grid, s).value == 0.0);

  ProcessSpec s1;  // alpha = 1: logarithmic kernel
  double p1 = std::numeric_limits<double>::infinity();
  for (double r : {0.5, 0.25, 0.1, 0.05}) {
    const auto m = kato_modulus(nu, r, grid, s1);
    // int_{-r}^{r} |log|z|| dz = 2(r - r log r)
    CHECK(m.value <= sup * 2.0 * (r - r * std::log(r)) * (1 + 1e-12));
    CHECK(m.value < p1);
    p1 = m.value;
  }
}
