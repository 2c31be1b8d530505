// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "stablefk/commands.hpp"
#include "stablefk/config.hpp"
#include "stablefk/forms.hpp"
#include "stablefk/kernels.hpp"
#include "stablefk/montecarlo.hpp"
#include "stablefk/verify.hpp"

using namespace stablefk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds, <= 0: none
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

StableKernel stable(double alpha) {
  ProcessSpec s;
  s.alpha = alpha;
  return StableKernel(s);
}

// psi(r) = 2 (2r)^nu K_nu(r) / (Gamma(nu) 4^nu), nu = (1 + alpha) / 2
double psi_bessel(double r, double alpha) {
  const double nu = 0.5 * (1.0 + alpha);
  return 2.0 * std::pow(2.0 * r, nu) * boost::math::cyl_bessel_k(nu, r) / (boost::math::tgamma(nu) * std::pow(4.0, nu));
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

Vector random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector u(n);
  for (int i = 0; i < n; ++i) u(i) = g(rng);
  return u;
}

double rel_apply_diff(const Matrix& a, const Matrix& b, const Vector& u) {
  const Vector au = a * u;
  return (au - b * u).cwiseAbs().maxCoeff() / std::max(au.cwiseAbs().maxCoeff(), 1e-300);
}

Outcome from_report(const CheckReport& r) {
  return {r.pass, r.name + " statistic " + fmt(r.statistic) + " vs " + fmt(r.tolerance)};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out[e.path().filename().string()] = os.str();
  }
  return out;
}

Outcome kernel_oracle() {
  double worst = 0.0;
  for (double a : {0.5, 1.0, 1.2, 1.5}) {
    for (double r : {0.1, 1.0, 5.0, 10.0}) worst = std::max(worst, std::abs(psi(r, a) / psi_bessel(r, a) - 1.0));
  }
  const double c_err = std::abs(normalization_constant(1.0) - 1.0 / M_PI);
  return {worst <= 1e-8 && c_err <= 1e-12, "psi rel err " + fmt(worst) + " (<= 1e-8), |C(1,-1) - 1/pi| " +
                                               fmt(c_err) + " (<= 1e-12)"};
}

Outcome sampler_law() {
  const int n = 1000000;
  const double tol = 4.0 / std::sqrt(double(n));
  const std::vector<double> us{0.5, 1.0, 2.0};
  double worst = 0.0;
  for (double a : {1.0, 1.5}) {
    const auto k = stable(a);
    Rng rng(20240 + static_cast<std::uint64_t>(10 * a));
    std::vector<double> acc(us.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double x = sample_increment_stable(k, 1.0, rng);
      for (std::size_t j = 0; j < us.size(); ++j) acc[j] += std::cos(us[j] * x);
    }
    for (std::size_t j = 0; j < us.size(); ++j) {
      const double exact = std::exp(-k.characteristic_coefficient() * std::pow(us[j], a));
      worst = std::max(worst, std::abs(acc[j] / n - exact));
    }
  }
  // jump-resolved paths against exact increments; two-sample KS at the 1% level
  const int m = 20000;
  double ks_worst = 0.0, ks_crit = 0.0;
  for (double a : {1.0, 1.5}) {
    const auto k = stable(a);
    SimConfig sim;
    sim.n_paths = m;
    const PathModel model(k, LocalMeasure::zero(), NonlocalPerturbation::zero(), sim);
    const auto paths = terminal_positions(0.0, 1.0, model, m, 7);
    Rng rng(99);
    std::vector<double> exact(m);
    for (auto& v : exact) v = sample_increment_stable(k, 1.0, rng);
    ks_worst = std::max(ks_worst, ks_statistic(paths, exact));
    ks_crit = 1.628 * std::sqrt(2.0 / m);
  }
  return {worst <= tol && ks_worst <= ks_crit, "max |ecf - exact| " + fmt(worst) + " (<= " + fmt(tol) +
                                                   "), KS " + fmt(ks_worst) + " (<= " + fmt(ks_crit) + ")"};
}

Outcome levy_system() {
  const RunConfig cfg;
  SimConfig sim = cfg.sim;
  sim.n_paths = 100000;
  return from_report(check_levy_system(cfg.kernel(), cfg.perturbation(), 0.0, 1.0, sim));
}

Outcome exact_algebra() {
  RunConfig cfg;
  cfg.half_width = 20.0;
  cfg.nodes = 400;
  const auto grid = cfg.grid();
  const auto k = cfg.kernel();
  const auto W = assemble_weights(grid, k);
  const auto routes = assemble_schrodinger_form(W, cfg.perturbation(), cfg.mu(), grid);
  const auto sys = assemble_form_system(grid, k, cfg.mu(), cfg.perturbation());
  const Matrix b = sys.b_rho.asDiagonal();
  double routes_err = 0.0, schr_err = 0.0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const Vector u = random_vector(sys.size(), s);
    routes_err = std::max(routes_err, rel_apply_diff(routes.literal, routes.symmetrized, u));
    schr_err = std::max(schr_err, rel_apply_diff(sys.a_schr, sys.a_y - b, u));
  }
  const auto zero = assemble_form_system(grid, k, LocalMeasure::zero(), NonlocalPerturbation::zero());
  const double collapse = std::max((zero.a_minus - zero.a_base).cwiseAbs().maxCoeff(),
                                   (zero.a_y - zero.a_base).cwiseAbs().maxCoeff());
  const bool ok = routes_err <= 1e-12 && schr_err <= 1e-12 && collapse == 0.0;
  return {ok, "route diff " + fmt(routes_err) + ", A_schr vs A_Y - B " + fmt(schr_err) + " (<= 1e-12), F = 0 collapse " +
                  fmt(collapse) + " (== 0)"};
}

Outcome determinism() {
  RunConfig cfg;
  cfg.half_width = 10.0;
  cfg.nodes = 400;
  cfg.sim.n_paths = 400;
  cfg.levy_paths = 2000;
  cfg.green_paths = 300;
  cfg.gauge_paths = 300;
  cfg.witness_doublings = 2;
  cfg.green_probes = {-2.0, 0.0, 1.5};
  cfg.checks = {"levy_system", "ground_state", "green_cross", "gauge_spectral"};
  const auto base = fs::temp_directory_path() / "stablefk_acceptance_det";
  fs::remove_all(base);
  std::ostringstream log;
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* sub : {"a", "b"}) {
    CommandOptions opt;
    opt.out_dir = (base / sub).string();
    opt.quiet = true;
    cmd_verify(cfg, opt, log);
    runs.push_back(read_dir(base / sub));
  }
  fs::remove_all(base);
  const bool same = runs[0] == runs[1] && !runs[0].empty();
  return {same, std::to_string(runs[0].size()) + " files, " + (same ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  // the default configuration, shared by the suite-backed criteria
  Suite suite{RunConfig{}};

  const std::vector<Criterion> criteria{
      {1, "kernel oracle", 1.0, kernel_oracle},
      {2, "sampler law", 60.0, sampler_law},
      {3, "Levy-system identity", 120.0, levy_system},
      {4, "exact algebra", 10.0, exact_algebra},
      {5, "spectral facts", 120.0, [&] { return from_report(suite.run("ground_state")); }},
      {6, "Green cross-check", 300.0, [&] { return from_report(suite.run("green_cross")); }},
      {7, "harmonicity",
       0.0,
       [&] {
         const auto a = suite.run("harmonicity");
         const auto b = suite.run("harmonicity_critical");
         return Outcome{a.pass && b.pass, from_report(a).detail + "; " + from_report(b).detail};
       }},
      {8, "gauge/spectral equivalence", 300.0,
       [&] {
         const auto a = suite.run("gauge_spectral");
         const auto b = suite.run("gauge_supercritical");
         return Outcome{a.pass && b.pass, from_report(a).detail + "; " + from_report(b).detail};
       }},
      {9, "determinism", 0.0, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit <= 0.0 || secs < c.time_limit;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << "; "
              << fmt(secs) << " s";
    if (c.time_limit > 0.0) std::cout << " (limit " << fmt(c.time_limit) << " s)";
    std::cout << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
