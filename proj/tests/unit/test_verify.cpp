#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "stablefk/errors.hpp"
#include "stablefk/forms.hpp"
#include "stablefk/montecarlo.hpp"
#include "stablefk/perturbations.hpp"
#include "stablefk/verify.hpp"

using namespace stablefk;

namespace {

StableKernel kernel12() {
  ProcessSpec s;
  s.alpha = 1.2;
  return StableKernel(s);
}

LocalMeasure bumps(double plus, double minus) {
  return LocalMeasure::from_bumps({plus, 0.0, 1.5}, {minus, 2.0, 1.0});
}

SimConfig sim(int paths) {
  SimConfig c;
  c.n_paths = paths;
  return c;
}

}  // namespace

TEST_CASE("critical calibration without F is lambda(1) by scaling") {
  // with F = 0, rho+ = mu+ and A_Y does not depend on mu+, so lambda(c) = lambda(1) / c
  const auto sys = assemble_form_system(Grid(10.0, 201), kernel12(), bumps(0.5, 0.3), NonlocalPerturbation::zero());
  const GreenOperator gy(sys.a_y, sys.grid.spacing());
  const double lambda1 = principal_eigenpair(sys.a_y, gy, sys.b_rho).lambda;
  const auto cal = calibrate_critical(sys, gy);
  CHECK(std::abs(cal.lambda - 1.0) <= 1e-6);
  CHECK(cal.c_star == doctest::Approx(lambda1).epsilon(2e-6));
  REQUIRE(cal.trace.size() >= 2);
  for (const auto& [c, l] : cal.trace) CHECK(l * c == doctest::Approx(lambda1).epsilon(1e-8));
}

TEST_CASE("lambda trace of the calibration is decreasing in c") {
  RunConfig cfg;
  cfg.half_width = 10.0;
  cfg.nodes = 201;
  const auto sys = assemble_form_system(cfg.grid(), cfg.kernel(), cfg.mu(), cfg.perturbation());
  const GreenOperator gy(sys.a_y, sys.grid.spacing());
  auto cal = calibrate_critical(sys, gy);
  CHECK(std::abs(cal.lambda - 1.0) <= 1e-6);
  std::sort(cal.trace.begin(), cal.trace.end());
  for (std::size_t i = 1; i < cal.trace.size(); ++i) CHECK(cal.trace[i].second <= cal.trace[i - 1].second);
}

TEST_CASE("Levy-system check with F = 0 is exact") {
  const auto r = check_levy_system(kernel12(), NonlocalPerturbation::zero(), 0.0, 1.0, sim(200));
  CHECK(r.pass);
  CHECK(r.statistic == 0.0);
}

TEST_CASE("Levy-system check on the built-in family") {
  RunConfig cfg;
  auto s = sim(20000);
  const auto r = check_levy_system(cfg.kernel(), cfg.perturbation(), 0.0, 0.5, s);
  CHECK(r.pass);
  CHECK(r.statistic <= r.tolerance);
  CHECK(!r.table.rows.empty());
}

TEST_CASE("Green cross-check with f = 0 gives zero on both routes") {
  RunConfig cfg;
  cfg.half_width = 10.0;
  cfg.nodes = 161;
  const auto fine = assemble_form_system(cfg.grid(), cfg.kernel(), cfg.mu(), cfg.perturbation());
  const auto coarse = assemble_form_system(Grid(10.0, 81), cfg.kernel(), cfg.mu(), cfg.perturbation());
  const auto r = check_green_cross(fine, coarse, {-1.0, 0.0, 1.0}, Bump{0.0, 0.0, 1.0}, cfg.kernel(), cfg.mu(),
                                   cfg.perturbation(), sim(200));
  CHECK(r.pass);
  CHECK(r.statistic == 0.0);
}

TEST_CASE("suite rejects unknown check names") {
  RunConfig cfg;
  cfg.half_width = 10.0;
  cfg.nodes = 201;
  Suite suite(cfg);
  CHECK_THROWS_AS(suite.run("nonsense"), ConfigError);
  CHECK(check_names().size() == 7);
}

TEST_CASE("gauge is above the Jensen floor") {
  // E_x[e^A] >= exp(E_x[A]) >= exp(-sup_z E_z[A^{mu-} + A^{F-}]) at lambda = 1,
  // with E_z[A^nu_{tau_D}] from the lattice Green function of the base form on D
  RunConfig cfg;
  cfg.half_width = 10.0;
  cfg.nodes = 201;
  const auto grid = cfg.grid();
  const auto sys = assemble_form_system(grid, cfg.kernel(), cfg.mu(), cfg.perturbation());
  const double r = 2.5;
  const auto D = nodes_in(grid, -r, r);
  const auto m = static_cast<Eigen::Index>(D.size());
  const auto xi = revuz_density(cfg.perturbation().minus(), grid, cfg.kernel());
  Matrix sub(m, m);
  Vector nu(m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const int i = D[static_cast<std::size_t>(p)];
    nu(p) = (cfg.mu().vminus(grid.node(i)) + xi[static_cast<std::size_t>(i)]) * grid.spacing();
    for (Eigen::Index q = 0; q < m; ++q) sub(p, q) = sys.a_base(i, D[static_cast<std::size_t>(q)]);
  }
  const Vector expected = sub.llt().solve(nu);
  const double floor = std::exp(-expected.maxCoeff());
  CHECK(floor < 1.0);

  const PathModel model(cfg.kernel(), cfg.mu(), cfg.perturbation(), sim(4000));
  for (double x : {-1.0, 0.0, 1.5}) {
    const auto e = gauge_estimate(x, Domain::interval(-r, r), 1.0, model, 3);
    CHECK(e.mean >= floor - 3.0 * e.standard_error);
  }
}

TEST_CASE("gaugeable on D implies gaugeable on a subdomain") {
  RunConfig cfg;
  cfg.half_width = 10.0;
  cfg.nodes = 201;
  const auto sys = assemble_form_system(cfg.grid(), cfg.kernel(), cfg.mu(), cfg.perturbation());
  const GreenOperator gy(sys.a_y, sys.grid.spacing());
  const double lambda = principal_eigenpair(sys.a_y, gy, sys.b_rho).lambda;
  const auto theta = [&](double lo, double hi) {
    return domain_principal_value(nodes_in(sys.grid, lo, hi), sys.a_y, sys.b_rho, lambda).theta;
  };
  // theta is monotone under inclusion
  CHECK(theta(-1.0, 1.5) >= theta(-2.5, 2.5));
  REQUIRE(theta(-2.5, 2.5) > 1.0);
  const auto big = check_gauge_spectral(sys, lambda, 2.5, {-1.0, 0.0, 1.0}, 1.0, cfg.kernel(), cfg.mu(),
                                        cfg.perturbation(), sim(2000), {});
  const auto small = check_gauge_spectral(sys, lambda, 1.25, {-0.5, 0.0, 0.5}, 1.0, cfg.kernel(), cfg.mu(),
                                          cfg.perturbation(), sim(2000), {});
  CHECK(big.pass);
  CHECK(small.pass);
}
