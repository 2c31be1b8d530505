#ifndef STABLEFK_MONTECARLO_IMPL_HPP
#define STABLEFK_MONTECARLO_IMPL_HPP

// Path engine, included from montecarlo.hpp.

namespace stablefk {

template <class Visitor>
PathTerminal run_path(const PathModel& model, double x0, const Domain* U, double horizon, Rng& rng, Visitor& vis) {
  const SimConfig& cfg = model.config();
  const JumpSizeSampler& jumps = model.jumps();
  const double rate = jumps.rate();
  const double step_sd = model.sigma() * std::sqrt(cfg.dt);
  std::exponential_distribution<double> wait(rate);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  PathTerminal term;
  double t = 0.0;
  double x = x0;
  long k = 0;
  double next_jump = wait(rng);
  for (;;) {
    const double next_grid = static_cast<double>(k + 1) * cfg.dt;
    const double next = std::min(next_jump, next_grid);
    if (next >= horizon) {
      vis.hold(x, horizon - t);
      term.time = horizon;
      term.position = x;
      term.censored = U != nullptr;
      return term;
    }
    vis.hold(x, next - t);
    t = next;
    double y;
    bool by_jump;
    if (next_jump < next_grid) {
      const double z = jumps(rng);
      y = coin(rng) == 0 ? x + z : x - z;
      vis.jump(t, x, y);
      next_jump = t + wait(rng);
      by_jump = true;
    } else {
      y = x + step_sd * gauss(rng);
      vis.step(t, x, y);
      ++k;
      by_jump = false;
    }
    x = y;
    if (U != nullptr && !U->contains(x)) {
      term.time = t;
      term.position = x;
      term.exited = true;
      term.exit_by_jump = by_jump;
      return term;
    }
    if (!vis.keep_going(t, x)) {
      term.time = t;
      term.position = x;
      return term;
    }
  }
}

}  // namespace stablefk

#endif  // STABLEFK_MONTECARLO_IMPL_HPP
