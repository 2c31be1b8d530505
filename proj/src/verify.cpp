#include "stablefk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "stablefk/errors.hpp"

namespace stablefk {

namespace {

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double interp(const Grid& grid, const Vector& v, double x) { return grid.interpolate(to_std(v), x); }

Vector sample_nodes(const Grid& grid, const Density& f) {
  Vector v(grid.size());
  for (int i = 0; i < grid.size(); ++i) v(i) = f(grid.node(i));
  return v;
}

SimConfig with_paths(SimConfig sim, int n) {
  sim.n_paths = n;
  return sim;
}

const char* yes_no(bool b) { return b ? "pass" : "fail"; }

// one named sub-criterion of a multi-part check
struct Criterion {
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

CheckReport criteria_report(const std::string& name, const std::vector<Criterion>& items, const std::string& predicate) {
  CheckReport r;
  r.name = name;
  r.table.columns = {"criterion", "value", "tolerance", "result"};
  int failed = 0;
  for (const auto& c : items) {
    r.table.add({c.name, num(c.value), num(c.tolerance), yes_no(c.pass)});
    if (!c.pass) ++failed;
  }
  r.statistic = failed;
  r.tolerance = 0.0;
  r.pass = failed == 0;
  r.predicate = predicate;
  return r;
}

}  // namespace

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw DomainError("table row has the wrong number of cells");
  rows.push_back(std::move(row));
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

CheckReport check_levy_system(const StableKernel& kernel, const NonlocalPerturbation& F, double x, double t,
                              const SimConfig& sim, bool minus_part, std::uint64_t stream) {
  const PathModel model(kernel, LocalMeasure::zero(), F, sim);
  const auto s = levy_system_estimate(x, t, model, minus_part, stream);
  CheckReport r;
  r.name = "levy_system";
  r.statistic = std::abs(s.difference.mean);
  r.tolerance = 3.0 * s.difference.standard_error + s.difference.bias_bound;
  r.pass = r.statistic <= r.tolerance;
  r.predicate = "|mean(jump sum - compensator)| <= 3 paired stderr + published bias";
  r.table.columns = {"x", "t", "n_paths", "jump_sum", "jump_sum_stderr", "compensator", "compensator_stderr",
                     "difference", "difference_stderr", "bias_bound"};
  r.table.add({num(x), num(t), std::to_string(sim.n_paths), num(s.jump_sum.mean), num(s.jump_sum.standard_error),
               num(s.compensator.mean), num(s.compensator.standard_error), num(s.difference.mean),
               num(s.difference.standard_error), num(s.difference.bias_bound)});
  return r;
}

CheckReport check_ground_state(const FormSystem& sys, const StableKernel& kernel, const LocalMeasure& mu,
                               const NonlocalPerturbation& F, double nested_spacing) {
  const double h = sys.grid.spacing();
  const GreenOperator gy(sys.a_y, h);
  const GroundState gs = principal_eigenpair(sys.a_y, gy, sys.b_rho);
  std::vector<Criterion> c;
  c.push_back({"lambda_positive", gs.lambda, 0.0, gs.lambda > 0.0});
  c.push_back({"residual", gs.residual, 1e-9, gs.residual <= 1e-9});
  c.push_back({"min_h", gs.h.minCoeff(), 0.0, gs.h.minCoeff() > 0.0});
  c.push_back({"max_h", gs.max_value, 0.0, std::isfinite(gs.max_value)});
  const double norm = gs.h.dot(sys.b_rho.cwiseProduct(gs.h));
  c.push_back({"normalization_error", std::abs(norm - 1.0), 1e-10, std::abs(norm - 1.0) <= 1e-10});

  const GreenOperator gm(sys.a_minus, h);
  const double rr = gm.apply(sys.rho_plus).cwiseAbs().maxCoeff();
  const double lower = 1.0 - gs.lambda * rr;
  c.push_back({"one_minus_lambda_times_R_rho", lower, 1e-8, lower <= 1e-8});

  const double identity = std::abs(gs.h.dot(sys.a_schr * gs.h) - (gs.lambda - 1.0) * norm);
  c.push_back({"schrodinger_identity", identity, 1e-9, identity <= 1e-9});

  const double scale = sys.a_y.cwiseAbs().maxCoeff();
  const double min_eig = min_eigenvalue(sys.a_y);
  c.push_back({"A_Y_min_eigenvalue", min_eig, -1e-10 * scale, min_eig >= -1e-10 * scale});

  // lambda(c mu+) non-increasing in c
  double prev = std::numeric_limits<double>::infinity();
  bool mono = true;
  double worst = -std::numeric_limits<double>::infinity();
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    const auto sc = rescale_mu_plus(sys, s);
    const double l = principal_eigenpair(sc.a_y, gy, sc.b_rho).lambda;
    worst = std::max(worst, l - prev);
    mono = mono && l <= prev;
    prev = l;
  }
  c.push_back({"mu_scaling_max_increase", worst, 0.0, mono});

  // nested boxes at a common spacing
  prev = std::numeric_limits<double>::infinity();
  mono = true;
  worst = -std::numeric_limits<double>::infinity();
  for (double L : {10.0, 20.0, 40.0}) {
    const int n = static_cast<int>(std::lround(2.0 * L / nested_spacing)) + 1;
    const auto s = assemble_form_system(Grid(L, n), kernel, mu, F);
    const double l = principal_eigenpair(s.a_y, s.b_rho).lambda;
    c.push_back({"lambda_L" + std::to_string(static_cast<int>(L)), l, 0.0, std::isfinite(l)});
    worst = std::max(worst, l - prev);
    mono = mono && l <= prev;
    prev = l;
  }
  c.push_back({"nested_box_max_increase", worst, 0.0, mono});

  // Green-function domination ratio: reported only
  const double k_hat = greens_domination(gm, gy);
  auto r = criteria_report("ground_state", c, "all sub-criteria hold (value within tolerance)");
  r.table.add({"green_domination_ratio", num(k_hat), "nan", "info"});
  r.table.add({"lambda", num(gs.lambda), "nan", "info"});
  return r;
}

Calibration calibrate_critical(const FormSystem& sys, const GreenOperator& green_y) {
  Calibration cal;
  Vector start = Vector::Ones(sys.size());
  auto lambda_at = [&](double c) {
    const auto sc = rescale_mu_plus(sys, c);
    const auto gs = principal_eigenpair(sc.a_y, green_y, sc.b_rho, EigenOptions{}, &start);
    start = gs.h;
    cal.trace.emplace_back(c, gs.lambda);
    return gs.lambda;
  };
  double lo = -20.0, hi = 20.0;  // log2 c
  const double l_lo = lambda_at(std::exp2(lo)), l_hi = lambda_at(std::exp2(hi));
  if (!(l_lo >= 1.0 && l_hi <= 1.0)) throw NumericalError("calibrate_critical: lambda = 1 not bracketed in [2^-20, 2^20]");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double l = lambda_at(std::exp2(mid));
    cal.iterations = it + 1;
    if (std::abs(l - 1.0) <= 1e-6) {
      cal.c_star = std::exp2(mid);
      cal.lambda = l;
      return cal;
    }
    (l > 1.0 ? lo : hi) = mid;
  }
  throw NumericalError("calibrate_critical: bisection did not converge");
}

std::vector<HarmonicDomain> harmonic_domains(const FormSystem& sys, const GreenOperator& green_y, double lambda,
                                             const std::vector<double>& centers) {
  if (centers.size() != 2) throw DomainError("harmonic_domains: need two centres");
  std::vector<Domain> balls;
  std::vector<HarmonicDomain> out;
  for (double z : centers) {
    const auto ar = assumption_A_radius(z, lambda, green_y, sys.rho_plus, sys.grid);
    balls.push_back(Domain::ball(z, ar.radius));
  }
  const auto& b0 = balls[0].parts[0];
  HarmonicDomain ball{"ball", balls[0], {}};
  const double z = 0.5 * (b0.lo + b0.hi), r = 0.5 * (b0.hi - b0.lo);
  for (double f : {-0.8, -0.4, 0.0, 0.4, 0.8}) ball.probes.push_back(z + f * r);
  out.push_back(ball);

  const Domain u = balls[0].unite(balls[1]);
  if (u.parts.size() != 1) throw NumericalError("harmonic_domains: the admissible balls do not overlap");
  HarmonicDomain uni{"union", u, {}};
  for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) uni.probes.push_back(u.lower() + f * (u.upper() - u.lower()));
  out.push_back(uni);
  return out;
}

CheckReport check_harmonicity(const DiscretePair& d, const std::vector<HarmonicDomain>& domains, double lambda_used,
                              const StableKernel& kernel, const LocalMeasure& mu, const NonlocalPerturbation& F,
                              const SimConfig& sim, double budget_fraction, std::uint64_t stream) {
  const Grid& gf = d.fine->grid;
  const Grid& gc = d.coarse->grid;
  const Vector& hf = d.fine_state->h;
  const Vector& hc = d.coarse_state->h;
  const auto hf_std = to_std(hf);
  // payoff error: sup over the coarse nodes of |h_fine - h_coarse|
  double sup_dh = 0.0;
  for (int i = 0; i < gc.size(); ++i) sup_dh = std::max(sup_dh, std::abs(gf.interpolate(hf_std, gc.node(i)) - hc(i)));
  const double dlambda = std::abs(d.fine_state->lambda - d.coarse_state->lambda) +
                         std::abs(d.fine_state->lambda - lambda_used);

  const PathModel model(kernel, mu, F, sim);
  CheckReport r;
  r.name = "harmonicity";
  r.table.columns = {"domain", "lo", "hi", "x", "h", "fk_mean", "fk_stderr", "abs_diff", "grid_bias", "lambda_bias",
                     "mc_bias", "budget", "budget_over_h", "censored", "result"};
  double worst = 0.0;
  bool all = true;
  std::uint64_t k = 0;
  for (const auto& dom : domains) {
    for (double x : dom.probes) {
      const double hx = gf.interpolate(hf_std, x);
      const auto e = feynman_kac_estimate(
          x, dom.U, [&](double y) { return gf.interpolate(hf_std, y); }, lambda_used, model, stream + k++);
      const double grid_bias = std::abs(hx - interp(gc, hc, x)) + sup_dh * e.mean_weight;
      const double lambda_bias = dlambda * std::abs(e.lambda_sensitivity);
      const double budget = grid_bias + lambda_bias + e.bias_bound;
      const double diff = std::abs(hx - e.mean);
      const bool ok = e.usable && diff <= 3.0 * e.standard_error + budget && budget <= budget_fraction * hx;
      all = all && ok;
      worst = std::max(worst, diff / (3.0 * e.standard_error + budget));
      r.table.add({dom.label, num(dom.U.lower()), num(dom.U.upper()), num(x), num(hx), num(e.mean),
                   num(e.standard_error), num(diff), num(grid_bias), num(lambda_bias), num(e.bias_bound), num(budget),
                   num(budget / hx), std::to_string(e.censored), yes_no(ok)});
    }
  }
  r.statistic = worst;
  r.tolerance = 1.0;
  r.pass = all;
  std::ostringstream pred;
  pred << "per probe |h - FK| <= 3 stderr + budget, budget <= " << budget_fraction
       << " h, censoring <= 1%; lambda in weight = " << num(lambda_used);
  r.predicate = pred.str();
  return r;
}

double supercritical_scale(const FormSystem& sys, double lambda, double radius, double target) {
  const auto D = nodes_in(sys.grid, -radius, radius);
  auto theta = [&](double c) { return domain_principal_value(D, sys.a_y, rescale_mu_plus(sys, c).b_rho, lambda).theta; };
  double lo = 0.0, hi = 1.0;  // log2 c
  while (theta(std::exp2(hi)) > target) {
    lo = hi;
    hi += 1.0;
    if (hi > 20.0) throw NumericalError("supercritical_scale: theta stays above target up to c = 2^20");
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double t = theta(std::exp2(mid));
    if (std::abs(t - target) <= 0.01 * target) return std::exp2(mid);
    (t > target ? lo : hi) = mid;
  }
  throw NumericalError("supercritical_scale: bisection did not converge");
}

CheckReport check_gauge_spectral(const FormSystem& sys, double lambda, double radius, const std::vector<double>& probes,
                                 double mu_scale, const StableKernel& kernel, const LocalMeasure& mu,
                                 const NonlocalPerturbation& F, const SimConfig& sim, const WitnessSettings& witness,
                                 std::uint64_t stream) {
  const auto nodes = nodes_in(sys.grid, -radius, radius);
  const Vector b = mu_scale == 1.0 ? sys.b_rho : rescale_mu_plus(sys, mu_scale).b_rho;
  const auto th = domain_principal_value(nodes, sys.a_y, b, lambda);
  const LocalMeasure mus = mu_scale == 1.0 ? mu : mu.scaled_plus(mu_scale);
  const Domain D = Domain::interval(-radius, radius);

  CheckReport r;
  r.name = "gauge_spectral";
  if (th.infinite || th.theta > 1.0) {
    const PathModel m1(kernel, mus, F, sim);
    const PathModel m2(kernel, mus, F, with_paths(sim, 2 * sim.n_paths));
    r.table.columns = {"theta", "mu_scale", "x", "gauge_n", "stderr_n", "gauge_2n", "stderr_2n", "change",
                       "max_weight_2n", "max_share_2n", "censored_2n", "result"};
    bool all = true;
    double worst = 0.0;
    std::uint64_t k = 0;
    for (double x : probes) {
      const auto a = gauge_estimate(x, D, lambda, m1, stream + k);
      const auto c = gauge_estimate(x, D, lambda, m2, stream + k);
      ++k;
      const double change = std::abs(c.mean - a.mean);
      // no single path may carry more than 5% of the total weight
      const double share = c.max_weight_observed / (c.mean * static_cast<double>(c.n_paths));
      bool ok = c.usable && a.usable && std::isfinite(share) && share <= 0.05;
      if (th.infinite) {
        ok = ok && std::abs(c.mean - 1.0) <= 3.0 * c.standard_error;
      } else {
        ok = ok && change <= 3.0 * a.standard_error;
        worst = std::max(worst, change / (3.0 * a.standard_error));
      }
      all = all && ok;
      r.table.add({th.infinite ? "inf" : num(th.theta), num(mu_scale), num(x), num(a.mean), num(a.standard_error),
                   num(c.mean), num(c.standard_error), num(change), num(c.max_weight_observed),
                   num(share), std::to_string(c.censored), yes_no(ok)});
    }
    r.statistic = worst;
    r.tolerance = 1.0;
    r.pass = all;
    r.predicate = th.infinite ? "theta(D) = +inf (no rho+ on D): gauge = 1 within 3 stderr"
                              : "theta(D) > 1: gauge stable under doubling n_paths (change <= 3 stderr), "
                                "largest path weight <= 5% of the weight sum, censoring <= 1%";
    return r;
  }

  // theta(D) <= 1: truncated gauge must blow up as horizon and n_paths double
  const double x = probes[probes.size() / 2];
  r.table.columns = {"theta", "mu_scale", "x", "horizon", "n_paths", "truncated_gauge", "stderr", "ratio"};
  double first = 0.0, ratio = 0.0;
  bool increasing = true;
  double prev = 0.0;
  for (int k = 0; k <= witness.doublings; ++k) {
    const double T = witness.horizon * std::exp2(k);
    const PathModel m(kernel, mus, F, with_paths(sim, sim.n_paths << k));
    const auto e = truncated_gauge_estimate(x, D, lambda, T, m, stream);
    if (k == 0) first = e.mean;
    ratio = e.mean / first;
    increasing = increasing && e.mean >= prev;
    prev = e.mean;
    r.table.add({num(th.theta), num(mu_scale), num(x), num(T), std::to_string(m.config().n_paths), num(e.mean),
                 num(e.standard_error), num(ratio)});
    if (ratio >= witness.factor) break;
  }
  r.statistic = ratio;
  r.tolerance = witness.factor;
  r.pass = increasing && ratio >= witness.factor;
  r.predicate = "theta(D) < 1: divergence witness, truncated gauge grows by >= tolerance while horizon and "
                "n_paths double (pass means the witness fired)";
  return r;
}

CheckReport check_green_cross(const FormSystem& fine, const FormSystem& coarse, const std::vector<double>& probes,
                              const Bump& f, const StableKernel& kernel, const LocalMeasure& mu,
                              const NonlocalPerturbation& F, const SimConfig& sim, std::uint64_t stream) {
  const Vector uf = green_apply(fine.a_minus, sample_nodes(fine.grid, f), fine.grid.spacing());
  const Vector uc = green_apply(coarse.a_minus, sample_nodes(coarse.grid, f), coarse.grid.spacing());
  const PathModel model(kernel, mu, F, sim);
  CheckReport r;
  r.name = "green_cross";
  r.table.columns = {"x", "lattice", "mc_mean", "mc_stderr", "abs_diff", "grid_bias", "mc_bias", "budget",
                     "censored", "result"};
  bool all = true;
  double worst = 0.0;
  std::uint64_t k = 0;
  for (double x : probes) {
    const auto e = killed_green_estimate(x, f, f.amplitude, fine.grid.box_radius(), model, stream + k++);
    const double lattice = interp(fine.grid, uf, x);
    const double grid_bias = std::abs(lattice - interp(coarse.grid, uc, x));
    const double budget = grid_bias + e.bias_bound;
    const double diff = std::abs(lattice - e.mean);
    const double tol = 3.0 * e.standard_error + budget;
    const bool ok = e.usable && diff <= tol;
    all = all && ok;
    if (tol > 0.0) worst = std::max(worst, diff / tol);
    r.table.add({num(x), num(lattice), num(e.mean), num(e.standard_error), num(diff), num(grid_bias),
                 num(e.bias_bound), num(budget), std::to_string(e.censored), yes_no(ok)});
  }
  r.statistic = worst;
  r.tolerance = 1.0;
  r.pass = all;
  r.predicate = "per probe |lattice - MC| <= 3 stderr + grid bias (n vs n/2) + MC bias, censoring <= 5%";
  return r;
}

struct Suite::State {
  StableKernel kernel;
  LocalMeasure mu;
  NonlocalPerturbation F;
  std::optional<FormSystem> sys, coarse;
  std::optional<GreenOperator> gy, gy_coarse;
  std::optional<GroundState> gs, gs_coarse;
  std::optional<Calibration> cal;
};

Suite::Suite(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  digest_ = fnv1a_hex(canonical_text(cfg_));
  s_ = std::make_unique<State>(State{cfg_.kernel(), cfg_.mu(), cfg_.perturbation(), {}, {}, {}, {}, {}, {}, {}});
}

Suite::~Suite() = default;

const FormSystem& Suite::system() {
  if (!s_->sys) s_->sys = assemble_form_system(cfg_.grid(), s_->kernel, s_->mu, s_->F);
  return *s_->sys;
}

const FormSystem& Suite::coarse() {
  if (!s_->coarse) s_->coarse = assemble_form_system(Grid(cfg_.half_width, cfg_.nodes / 2), s_->kernel, s_->mu, s_->F);
  return *s_->coarse;
}

const GreenOperator& Suite::green_y() {
  if (!s_->gy) s_->gy.emplace(system().a_y, system().grid.spacing());
  return *s_->gy;
}

const GroundState& Suite::ground_state() {
  if (!s_->gs) s_->gs = principal_eigenpair(system().a_y, green_y(), system().b_rho);
  return *s_->gs;
}

const GroundState& Suite::coarse_state() {
  if (!s_->gs_coarse) {
    s_->gy_coarse.emplace(coarse().a_y, coarse().grid.spacing());
    s_->gs_coarse = principal_eigenpair(coarse().a_y, *s_->gy_coarse, coarse().b_rho);
  }
  return *s_->gs_coarse;
}

const Calibration& Suite::calibration() {
  if (!s_->cal) s_->cal = calibrate_critical(system(), green_y());
  return *s_->cal;
}

CheckReport Suite::run(const std::string& name) {
  const auto& c = cfg_;
  const auto& st = *s_;
  CheckReport r;
  if (name == "levy_system") {
    r = check_levy_system(st.kernel, st.F, c.levy_x, c.levy_t, with_paths(c.sim, c.levy_paths));
  } else if (name == "ground_state") {
    r = check_ground_state(system(), st.kernel, st.mu, st.F);
  } else if (name == "green_cross") {
    r = check_green_cross(system(), coarse(), c.green_probes, c.green_f, st.kernel, st.mu, st.F,
                          with_paths(c.sim, c.green_paths));
  } else if (name == "harmonicity") {
    const DiscretePair d{&system(), &ground_state(), &coarse(), &coarse_state()};
    const auto domains = harmonic_domains(system(), green_y(), ground_state().lambda, c.harmonic_centers);
    r = check_harmonicity(d, domains, ground_state().lambda, st.kernel, st.mu, st.F,
                          with_paths(c.sim, c.harmonic_paths), c.harmonic_budget_fraction);
  } else if (name == "harmonicity_critical") {
    const auto& cal = calibration();
    const auto fine = rescale_mu_plus(system(), cal.c_star);
    const auto crs = rescale_mu_plus(coarse(), cal.c_star);
    (void)coarse_state();
    const auto gf = principal_eigenpair(fine.a_y, green_y(), fine.b_rho);
    const auto gc = principal_eigenpair(crs.a_y, *s_->gy_coarse, crs.b_rho);
    const DiscretePair d{&fine, &gf, &crs, &gc};
    const auto domains = harmonic_domains(fine, green_y(), gf.lambda, c.harmonic_centers);
    r = check_harmonicity(d, domains, 1.0, st.kernel, st.mu.scaled_plus(cal.c_star), st.F,
                          with_paths(c.sim, c.harmonic_paths), c.harmonic_budget_fraction, 51);
    r.name = "harmonicity_critical";
    r.predicate += "; mu+ scaled by c* = " + num(cal.c_star) + " so that lambda = " + num(gf.lambda);
  } else if (name == "gauge_spectral") {
    r = check_gauge_spectral(system(), ground_state().lambda, c.gauge_radius, c.gauge_probes, 1.0, st.kernel, st.mu,
                             st.F, with_paths(c.sim, c.gauge_paths),
                             {c.witness_horizon, c.witness_doublings, c.witness_factor});
  } else if (name == "gauge_supercritical") {
    const double scale = supercritical_scale(system(), ground_state().lambda, c.gauge_radius, c.theta_target);
    r = check_gauge_spectral(system(), ground_state().lambda, c.gauge_radius, c.gauge_probes, scale, st.kernel, st.mu,
                             st.F, with_paths(c.sim, c.gauge_paths),
                             {c.witness_horizon, c.witness_doublings, c.witness_factor}, 61);
    r.name = "gauge_supercritical";
  } else {
    throw ConfigError("unknown check '" + name + "'");
  }
  r.inputs_digest = fnv1a_hex(digest_ + "/" + name);
  return r;
}

}  // namespace stablefk
