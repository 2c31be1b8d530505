#include "stablefk/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stablefk/errors.hpp"

namespace stablefk {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// One path's contribution to an estimator.
struct Outcome {
  double value = 0.0;
  double weight = 0.0;
  double bias = 0.0;
  double sensitivity = 0.0;
  double time = 0.0;
  bool censored = false;
};

template <class PerPath>
std::vector<Outcome> simulate_outcomes(const PathModel& model, std::uint64_t stream, PerPath per_path) {
  const SimConfig& cfg = model.config();
  const int n = cfg.n_paths;
  std::vector<Outcome> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 64)
  for (int i = 0; i < n; ++i) {
    Rng rng(path_seed(cfg.master_seed, stream, static_cast<std::uint64_t>(i)));
    out[static_cast<std::size_t>(i)] = per_path(rng);
  }
  return out;
}

MCEstimate summarize(const std::vector<Outcome>& out, double censor_limit, double weight_cap) {
  const auto n = static_cast<int>(out.size());
  std::vector<double> v(out.size());
  auto mean_of = [&](auto field) {
    for (std::size_t i = 0; i < out.size(); ++i) v[i] = field(out[i]);
    return pairwise_sum(v) / n;
  };
  MCEstimate e;
  e.n_paths = n;
  e.mean = mean_of([](const Outcome& o) { return o.value; });
  const double m = e.mean;
  const double var = mean_of([m](const Outcome& o) { return (o.value - m) * (o.value - m); }) * n / (n - 1.0);
  e.standard_error = std::sqrt(var / n);
  e.bias_bound = mean_of([](const Outcome& o) { return o.bias; });
  e.lambda_sensitivity = mean_of([](const Outcome& o) { return o.sensitivity; });
  e.mean_time = mean_of([](const Outcome& o) { return o.time; });
  e.mean_weight = mean_of([](const Outcome& o) { return o.weight; });
  for (const auto& o : out) {
    e.max_weight_observed = std::max(e.max_weight_observed, o.weight);
    if (o.censored) ++e.censored;
    if (weight_cap > 0.0 && o.weight > weight_cap) ++e.capped;
  }
  e.n_effective = n - e.censored;
  e.usable = e.censored <= censor_limit * n;
  return e;
}

template <class PerPath>
MCEstimate run_estimator(const PathModel& model, std::uint64_t stream, double censor_limit, PerPath per_path) {
  return summarize(simulate_outcomes(model, stream, per_path), censor_limit, model.config().weight_cap);
}

struct AccumulatingVisitor {
  const PathModel& model;
  FunctionalAccumulator acc;
  void hold(double x, double len) { acc.hold(model, x, len); }
  void jump(double, double x, double y) { acc.jump(model, x, y); }
  void step(double, double, double) {}
  bool keep_going(double, double) const { return true; }
};

struct RecordingVisitor {
  std::vector<PathEvent>* events;
  void hold(double, double) {}
  void jump(double t, double x, double y) { events->push_back({t, x, y, EventKind::jump}); }
  void step(double t, double x, double y) { events->push_back({t, x, y, EventKind::step}); }
  bool keep_going(double, double) const { return true; }
};

double curvature_of(const Density& f, double radius) {
  if (!f) return 0.0;
  return DensityTable(radius, std::max(16, static_cast<int>(2.0 * radius / 1e-3)), f).curvature_bound();
}

}  // namespace

void SimConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be > 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("t_max must be > 0");
  if (n_paths < 100) throw DomainError("n_paths must be at least 100");
  if (!(weight_cap >= 0.0)) throw DomainError("weight_cap must be >= 0");
  if (!(channel_step > 0.0)) throw DomainError("channel_step must be > 0");
}

std::uint64_t path_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream * 0xD1B54A32D192ED03ULL + index));
}

bool Domain::contains(double x) const {
  for (const auto& p : parts) {
    if (x > p.lo && x < p.hi) return true;
  }
  return false;
}

Domain Domain::ball(double center, double radius) {
  if (!(radius > 0.0)) throw DomainError("ball radius must be > 0");
  return {{{center - radius, center + radius}}};
}

Domain Domain::interval(double lo, double hi) {
  if (!(hi > lo)) throw DomainError("empty interval");
  return {{{lo, hi}}};
}

Domain Domain::whole_line() {
  const double inf = std::numeric_limits<double>::infinity();
  return {{{-inf, inf}}};
}

Domain Domain::unite(const Domain& other) const {
  std::vector<Interval> all = parts;
  all.insert(all.end(), other.parts.begin(), other.parts.end());
  std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  Domain out;
  for (const auto& p : all) {
    if (!out.parts.empty() && p.lo < out.parts.back().hi) {
      out.parts.back().hi = std::max(out.parts.back().hi, p.hi);
    } else {
      out.parts.push_back(p);
    }
  }
  return out;
}

double Domain::lower() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& p : parts) v = std::min(v, p.lo);
  return v;
}

double Domain::upper() const {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& p : parts) v = std::max(v, p.hi);
  return v;
}

double sample_increment_stable(const StableKernel& kernel, double t, Rng& rng) {
  if (kernel.relativistic()) throw DomainError("exact increments are only available for m = 0");
  if (!(t > 0.0)) throw DomainError("increment time must be > 0");
  const double a = kernel.alpha();
  std::uniform_real_distribution<double> uni(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
  std::exponential_distribution<double> ex(1.0);
  const double v = uni(rng);
  double s;
  if (a == 1.0) {
    s = std::tan(v);
  } else {
    const double w = ex(rng);
    s = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) * std::pow(std::cos((1.0 - a) * v) / w, (1.0 - a) / a);
  }
  return std::pow(kernel.characteristic_coefficient() * t, 1.0 / a) * s;
}

JumpSizeSampler::JumpSizeSampler(const StableKernel& kernel, double epsilon, int table_size)
    : epsilon_(epsilon), alpha_(kernel.alpha()), rate_(tail_mass(epsilon, kernel)), closed_form_(!kernel.relativistic()) {
  if (!(epsilon > 0.0)) throw DomainError("jump cutoff must be > 0");
  if (closed_form_) return;
  if (table_size < 16) throw DomainError("jump table too small");
  // survival below 1e-14 beyond z_max
  double z_max = 2.0 * epsilon;
  while (tail_mass(z_max, kernel) > 1e-14 * rate_) z_max *= 2.0;
  log_z_.resize(static_cast<std::size_t>(table_size));
  log_survival_.resize(static_cast<std::size_t>(table_size));
  const double lo = std::log(epsilon), hi = std::log(z_max);
  for (int k = 0; k < table_size; ++k) log_z_[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (table_size - 1);
  // accumulate the survival downward from z_max, one Gauss-Kronrod panel per cell in log z
  auto dens = [&kernel](double u) {
    const double z = std::exp(u);
    return 2.0 * kernel.intensity(z) * z;
  };
  double surv = tail_mass(z_max, kernel);
  log_survival_.back() = std::log(surv / rate_);
  for (int k = table_size - 2; k >= 0; --k) {
    const auto kk = static_cast<std::size_t>(k);
    surv += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(dens, log_z_[kk], log_z_[kk + 1], 0);
    log_survival_[kk] = std::log(surv / rate_);
  }
  log_survival_.front() = 0.0;
  for (std::size_t k = 1; k < log_survival_.size(); ++k) {
    if (!(log_survival_[k] < log_survival_[k - 1])) throw NumericalError("jump table is not strictly monotone");
  }
}

double JumpSizeSampler::operator()(Rng& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng);
  while (u == 0.0) u = uni(rng);
  if (closed_form_) return epsilon_ * std::pow(u, -1.0 / alpha_);
  const double lu = std::log(u);
  // log_survival_ is decreasing; find k with ls[k] >= lu > ls[k+1]
  auto it = std::upper_bound(log_survival_.begin(), log_survival_.end(), lu, std::greater<double>());
  if (it == log_survival_.end()) return std::exp(log_z_.back());
  const auto k = static_cast<std::size_t>(it - log_survival_.begin());
  const double s0 = log_survival_[k - 1], s1 = log_survival_[k];
  const double w = (s0 - lu) / (s0 - s1);
  return std::exp(log_z_[k - 1] + w * (log_z_[k] - log_z_[k - 1]));
}

PathModel::PathModel(const StableKernel& kernel, const LocalMeasure& mu, const NonlocalPerturbation& F,
                     const SimConfig& cfg)
    : kernel_(kernel), cfg_(cfg), jumps_(kernel, cfg.epsilon), mu_(mu), F_(F) {
  cfg.validate();
  if (!mu_.vplus) mu_.vplus = [](double) { return 0.0; };
  if (!mu_.vminus) mu_.vminus = [](double) { return 0.0; };
  const double beta = F.bound > 0.0 ? F.cert.exponent : 3.0;
  stats_ = jump_truncation_stats(cfg.epsilon, beta, kernel);
  sigma_ = std::sqrt(stats_.small_jump_variance);
  if (F.bound > 0.0) {
    const auto dec = li_decompose(F);
    ng_plus_ = channel_table(dec.plus(), kernel, cfg.channel_step);
    nf_plus_ = channel_table(F.plus(), kernel, cfg.channel_step);
    nf_minus_ = channel_table(F.minus(), kernel, cfg.channel_step);
    small_jump_rate_ = F.cert.constant * stats_.beta_moment;
  }
  const double reach = std::max(mu_.support_radius, 1e-3) + 0.01;
  const double curv = curvature_of(mu_.vplus, reach) + curvature_of(mu_.vminus, reach) + ng_plus_.curvature_bound();
  riemann_rate_ = 0.25 * curv * stats_.small_jump_variance * cfg.dt;
}

PathRealization sample_path(const PathModel& model, double x0, const Domain* U, double horizon, Rng& rng) {
  if (U != nullptr && !U->contains(x0)) throw DomainError("sample_path: start outside the domain");
  PathRealization p;
  p.x0 = x0;
  RecordingVisitor vis{&p.events};
  p.terminal = run_path(model, x0, U, horizon, rng, vis);
  return p;
}

void write_event_log(std::ostream& os, const PathRealization& path) {
  const auto old = os.precision(17);
  for (const auto& e : path.events) {
    os << e.time << ' ' << e.x_before << ' ' << e.x_after << ' ' << (e.kind == EventKind::jump ? "jump" : "step")
       << '\n';
  }
  os << path.terminal.time << ' ' << path.terminal.position << ' ' << path.terminal.position << ' '
     << (path.terminal.exited ? (path.terminal.exit_by_jump ? "exit_jump" : "exit_step")
                              : (path.terminal.censored ? "censored" : "end"))
     << '\n';
  os.precision(old);
}

void FunctionalAccumulator::hold(const PathModel& m, double x, double len) {
  if (len <= 0.0) return;
  a_mu_plus += m.vplus(x) * len;
  a_mu_minus += m.vminus(x) * len;
  if (m.near_F(x)) {
    a_xi_gplus += m.xi_gplus(x) * len;
    a_nf_plus += m.nf_plus(x) * len;
    a_nf_minus += m.nf_minus(x) * len;
    time_near_F += len;
  }
  elapsed += len;
}

void FunctionalAccumulator::jump(const PathModel& m, double x, double y) {
  a_F_plus += m.fplus(x, y);
  a_F_minus += m.fminus(x, y);
  ++jumps;
}

void FunctionalAccumulator::finish(const PathModel& m) {
  a_rho_plus = a_mu_plus + a_xi_gplus;
  bias_bound = m.small_jump_rate() * time_near_F + m.riemann_rate() * elapsed;
}

double FunctionalAccumulator::exponent(double lambda) const {
  return a_mu_plus - a_mu_minus + a_F_plus - a_F_minus + (lambda - 1.0) * a_rho_plus;
}

FunctionalAccumulator& FunctionalAccumulator::operator+=(const FunctionalAccumulator& o) {
  a_mu_plus += o.a_mu_plus;
  a_mu_minus += o.a_mu_minus;
  a_F_plus += o.a_F_plus;
  a_F_minus += o.a_F_minus;
  a_xi_gplus += o.a_xi_gplus;
  a_rho_plus += o.a_rho_plus;
  a_nf_plus += o.a_nf_plus;
  a_nf_minus += o.a_nf_minus;
  elapsed += o.elapsed;
  time_near_F += o.time_near_F;
  jumps += o.jumps;
  bias_bound += o.bias_bound;
  return *this;
}

FunctionalAccumulator accumulate_functionals(const PathRealization& path, const PathModel& model) {
  FunctionalAccumulator acc;
  double t = path.t0;
  double x = path.x0;
  for (const auto& e : path.events) {
    acc.hold(model, x, e.time - t);
    if (e.kind == EventKind::jump) acc.jump(model, e.x_before, e.x_after);
    x = e.x_after;
    t = e.time;
  }
  acc.hold(model, x, path.terminal.time - t);
  acc.finish(model);
  return acc;
}

std::pair<PathRealization, PathRealization> split_path(const PathRealization& path, double s) {
  if (!(s >= path.t0 && s <= path.terminal.time)) throw DomainError("split time outside the path");
  PathRealization a, b;
  a.x0 = path.x0;
  a.t0 = path.t0;
  double x = path.x0;
  std::size_t k = 0;
  for (; k < path.events.size() && path.events[k].time <= s; ++k) {
    a.events.push_back(path.events[k]);
    x = path.events[k].x_after;
  }
  a.terminal.time = s;
  a.terminal.position = x;
  b.x0 = x;
  b.t0 = s;
  b.events.assign(path.events.begin() + static_cast<long>(k), path.events.end());
  b.terminal = path.terminal;
  return {a, b};
}

double pairwise_sum(const std::vector<double>& v) {
  // fixed-shape recursion on index ranges
  struct Rec {
    const std::vector<double>& v;
    double operator()(std::size_t lo, std::size_t hi) const {
      if (hi - lo <= 32) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
      }
      const std::size_t mid = lo + (hi - lo) / 2;
      return (*this)(lo, mid) + (*this)(mid, hi);
    }
  };
  return Rec{v}(0, v.size());
}

MCEstimate feynman_kac_estimate(double x, const Domain& U, const Payoff& payoff, double lambda, const PathModel& model,
                                std::uint64_t stream) {
  if (!U.contains(x)) throw DomainError("feynman_kac_estimate: start outside U");
  const double horizon = model.config().t_max;
  const double lam_factor = 1.0 + std::abs(lambda - 1.0);
  return run_estimator(model, stream, 0.01, [&](Rng& rng) {
    AccumulatingVisitor vis{model, {}};
    const auto term = run_path(model, x, &U, horizon, rng, vis);
    vis.acc.finish(model);
    const auto& a = vis.acc;
    Outcome o;
    o.weight = std::exp(a.exponent(lambda));
    o.value = o.weight * payoff(term.position);
    const double b = model.small_jump_rate() * a.time_near_F + model.riemann_rate() * a.elapsed * lam_factor;
    o.bias = std::abs(o.value) * std::expm1(b);
    o.sensitivity = o.value * a.a_rho_plus;
    o.time = a.elapsed;
    o.censored = term.censored;
    return o;
  });
}

MCEstimate gauge_estimate(double x, const Domain& D, double lambda, const PathModel& model, std::uint64_t stream) {
  return feynman_kac_estimate(x, D, [](double) { return 1.0; }, lambda, model, stream);
}

MCEstimate truncated_gauge_estimate(double x, const Domain& D, double lambda, double horizon, const PathModel& model,
                                    std::uint64_t stream) {
  if (!D.contains(x)) throw DomainError("truncated_gauge_estimate: start outside D");
  if (!(horizon > 0.0)) throw DomainError("horizon must be > 0");
  const double lam_factor = 1.0 + std::abs(lambda - 1.0);
  auto est = run_estimator(model, stream, 1.0, [&](Rng& rng) {
    AccumulatingVisitor vis{model, {}};
    run_path(model, x, &D, horizon, rng, vis);
    vis.acc.finish(model);
    const auto& a = vis.acc;
    Outcome o;
    o.weight = std::exp(a.exponent(lambda));
    o.value = o.weight;
    o.bias = o.value * std::expm1(model.small_jump_rate() * a.time_near_F + model.riemann_rate() * a.elapsed * lam_factor);
    o.sensitivity = o.value * a.a_rho_plus;
    o.time = a.elapsed;
    return o;
  });
  return est;
}

MCEstimate killed_green_estimate(double x, const Density& f, double f_sup, double box, const PathModel& model,
                                 std::uint64_t stream) {
  if (!(std::abs(x) < box)) throw DomainError("killed_green_estimate: start outside the box");
  const Domain U = Domain::interval(-box, box);
  const SimConfig& cfg = model.config();
  const double f_curv = curvature_of(f, box);
  const double sig2 = model.sigma() * model.sigma();

  struct GreenVisitor {
    const PathModel& m;
    const Density& f;
    double a = 0.0;
    double value = 0.0;
    double elapsed = 0.0;
    double near = 0.0;
    void hold(double y, double len) {
      if (len <= 0.0) return;
      const double k = m.vminus(y);
      const double fy = f(y);
      if (fy != 0.0) value += std::exp(-a) * fy * (k > 0.0 ? -std::expm1(-k * len) / k : len);
      a += k * len;
      elapsed += len;
      if (m.near_F(y)) near += len;
    }
    void jump(double, double y0, double y1) { a += m.fminus(y0, y1); }
    void step(double, double, double) {}
    bool keep_going(double, double) const { return a < 18.420680743952367; }  // weight >= 1e-8
  };

  return run_estimator(model, stream, 0.05, [&](Rng& rng) {
    GreenVisitor vis{model, f};
    const auto term = run_path(model, x, &U, cfg.t_max, rng, vis);
    Outcome o;
    o.value = vis.value;
    o.weight = 1.0;
    const double stop_tail = term.exited || term.censored ? 0.0 : std::exp(-vis.a) * f_sup * cfg.t_max;
    o.bias = vis.value * std::expm1(model.small_jump_rate() * vis.near) +
             0.25 * f_curv * sig2 * cfg.dt * vis.elapsed + stop_tail;
    o.time = vis.elapsed;
    o.censored = term.censored;
    return o;
  });
}

LevySystemSample levy_system_estimate(double x, double t, const PathModel& model, bool minus_part,
                                      std::uint64_t stream) {
  if (!(t > 0.0)) throw DomainError("levy_system_estimate: t must be > 0");
  LevySystemSample out;
  const double step = model.config().channel_step;
  // interpolation error of the tabulated NH: curvature * step^2 / 8 per unit time
  const NonlocalPerturbation& F = model.F();
  const double tab_curv =
      F.bound > 0.0 ? channel_table(minus_part ? F.minus() : F.plus(), model.kernel(), step).curvature_bound() : 0.0;
  const double tab_rate = tab_curv * step * step / 8.0;

  const auto joint = simulate_outcomes(model, stream, [&](Rng& rng) {
    AccumulatingVisitor vis{model, {}};
    run_path(model, x, nullptr, t, rng, vis);
    vis.acc.finish(model);
    const auto& a = vis.acc;
    // value = jump sum, sensitivity slot carries the compensator, weight the near-F time
    Outcome o;
    o.value = minus_part ? a.a_F_minus : a.a_F_plus;
    o.sensitivity = minus_part ? a.a_nf_minus : a.a_nf_plus;
    o.weight = a.time_near_F;
    o.time = a.elapsed;
    return o;
  });
  std::vector<Outcome> js(joint.size()), cp(joint.size()), df(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const Outcome& o = joint[i];
    js[i].value = o.value;
    js[i].bias = model.small_jump_rate() * o.weight;
    cp[i].value = o.sensitivity;
    cp[i].bias = tab_rate * o.weight;
    df[i].value = o.value - o.sensitivity;
    df[i].bias = js[i].bias + cp[i].bias;
    js[i].time = cp[i].time = df[i].time = o.time;
  }
  out.jump_sum = summarize(js, 1.0, 0.0);
  out.compensator = summarize(cp, 1.0, 0.0);
  out.difference = summarize(df, 1.0, 0.0);
  return out;
}

std::vector<double> terminal_positions(double x, double t, const PathModel& model, int n, std::uint64_t stream) {
  struct Null {
    void hold(double, double) {}
    void jump(double, double, double) {}
    void step(double, double, double) {}
    bool keep_going(double, double) const { return true; }
  };
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Rng rng(path_seed(model.config().master_seed, stream, static_cast<std::uint64_t>(i)));
    Null vis;
    out[static_cast<std::size_t>(i)] = run_path(model, x, nullptr, t, rng, vis).position - x;
  }
  return out;
}

}  // namespace stablefk
