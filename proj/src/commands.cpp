#include "stablefk/commands.hpp"

#include <filesystem>
#include <ostream>

#include "stablefk/errors.hpp"
#include "stablefk/forms.hpp"
#include "stablefk/io.hpp"
#include "stablefk/montecarlo.hpp"
#include "stablefk/verify.hpp"

namespace stablefk {

namespace fs = std::filesystem;

namespace {

std::string out_path(const CommandOptions& opt, const std::string& file) {
  fs::create_directories(opt.out_dir);
  return (fs::path(opt.out_dir) / file).string();
}

std::string digest_of(const RunConfig& cfg) { return fnv1a_hex(canonical_text(cfg)); }

FormSystem assemble(const RunConfig& cfg) {
  return assemble_form_system(cfg.grid(), cfg.kernel(), cfg.mu(), cfg.perturbation());
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opt) {
  RunConfig cfg = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  if (opt.seed) cfg.sim.master_seed = *opt.seed;
  if (opt.paths) {
    const int n = *opt.paths;
    cfg.sim.n_paths = cfg.levy_paths = cfg.green_paths = cfg.harmonic_paths = cfg.gauge_paths = n;
  }
  if (!opt.checks.empty()) cfg.checks = opt.checks;
  cfg.validate();
  return cfg;
}

int cmd_assemble(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const auto sys = assemble(cfg);
  const std::string digest = fnv1a_hex(assembly_text(cfg));
  write_cache(out_path(opt, "forms.cache"), sys, digest);
  Table t;
  t.columns = {"n", "L", "spacing", "alpha", "mass", "kappa", "A_Y_asymmetry", "rho_plus_max", "rho_minus_max",
               "assembly_digest"};
  t.add({std::to_string(sys.size()), num(sys.grid.half_width()), num(sys.grid.spacing()), num(sys.spec.alpha),
         num(sys.spec.mass), num(sys.spec.intensity_multiplier), num(asymmetry(sys.a_y)),
         num(sys.rho_plus.maxCoeff()), num(sys.rho_minus.maxCoeff()), digest});
  write_csv(out_path(opt, "assemble_summary.csv"), t, digest_of(cfg));
  if (!opt.quiet) log << "assembled n = " << sys.size() << ", digest " << digest << "\n";
  return kSuccess;
}

int cmd_groundstate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const FormSystem sys = opt.cache_path.empty() ? assemble(cfg) : read_cache(opt.cache_path);
  const GreenOperator gy(sys.a_y, sys.grid.spacing());
  const auto gs = principal_eigenpair(sys.a_y, gy, sys.b_rho);
  const double bound = gs.lambda * GreenOperator(sys.a_minus, sys.grid.spacing()).apply(sys.rho_plus).maxCoeff();

  const std::string digest = digest_of(cfg);
  Table h;
  h.columns = {"x", "h"};
  for (int i = 0; i < sys.size(); ++i) h.add({num(sys.grid.node(i)), num(gs.h(i))});
  write_csv(out_path(opt, "groundstate.csv"), h, digest);

  CheckReport r;
  r.name = "groundstate";
  r.inputs_digest = fnv1a_hex(digest + "/groundstate");
  r.statistic = gs.residual;
  r.tolerance = 1e-9;
  r.pass = gs.residual <= 1e-9 && gs.lambda > 0.0 && bound >= 1.0 - 1e-8;
  r.predicate = "residual <= tolerance, lambda > 0, lambda ||R^- rho+|| >= 1 - 1e-8";
  r.table.columns = {"lambda", "residual", "normalization", "max_h", "lambda_times_R_rho", "iterations"};
  r.table.add({num(gs.lambda), num(gs.residual), num(gs.normalization), num(gs.max_value), num(bound),
               std::to_string(gs.iterations)});
  const std::string summary = out_path(opt, "groundstate_summary.csv");
  write_csv(summary, r.table, digest);
  r.artifacts = {"groundstate.csv", "groundstate_summary.csv"};
  write_manifest(out_path(opt, "manifest.json"), {r}, digest);
  if (!opt.quiet) log << "lambda = " << num(gs.lambda) << ", residual = " << num(gs.residual) << "\n";
  return r.pass ? kSuccess : kCheckFailure;
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const PathModel model(cfg.kernel(), cfg.mu(), cfg.perturbation(), cfg.sim);
  const Domain D = Domain::interval(-cfg.simulate_radius, cfg.simulate_radius);
  Table t;
  t.columns = {"x", "lambda", "n_paths", "mean", "stderr", "bias_bound", "censored", "max_weight", "mean_exit_time"};
  std::uint64_t k = 0;
  for (double x : cfg.simulate_probes) {
    const auto e = gauge_estimate(x, D, cfg.simulate_lambda, model, 71 + k++);
    t.add({num(x), num(cfg.simulate_lambda), std::to_string(e.n_paths), num(e.mean), num(e.standard_error),
           num(e.bias_bound), std::to_string(e.censored), num(e.max_weight_observed), num(e.mean_time)});
    if (!opt.quiet) log << "x = " << num(x) << ": " << num(e.mean) << " +- " << num(e.standard_error) << "\n";
  }
  write_csv(out_path(opt, "simulate.csv"), t, digest_of(cfg));
  return kSuccess;
}

int cmd_gauge(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  Suite suite(cfg);
  auto r = suite.run("gauge_spectral");
  const std::string digest = digest_of(cfg);
  write_csv(out_path(opt, "gauge.csv"), r.table, digest);
  r.artifacts = {"gauge.csv"};
  write_manifest(out_path(opt, "manifest.json"), {r}, digest);
  if (!opt.quiet) log << r.name << ": " << (r.pass ? "PASS" : "FAIL") << "\n";
  return r.pass ? kSuccess : kCheckFailure;
}

int cmd_verify(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log) {
  const std::vector<std::string> names = cfg.checks.empty() ? check_names() : cfg.checks;
  Suite suite(cfg);
  const std::string digest = digest_of(cfg);
  std::vector<CheckReport> reports;
  Table summary;
  summary.columns = {"name", "statistic", "tolerance", "pass"};
  for (const auto& n : names) {
    auto r = suite.run(n);
    const std::string file = "check_" + r.name + ".csv";
    write_csv(out_path(opt, file), r.table, digest);
    r.artifacts = {file};
    summary.add({r.name, num(r.statistic), num(r.tolerance), r.pass ? "true" : "false"});
    if (!opt.quiet) log << (r.pass ? "PASS " : "FAIL ") << r.name << "  statistic " << num(r.statistic) << "\n";
    reports.push_back(std::move(r));
  }
  write_csv(out_path(opt, "verify_summary.csv"), summary, digest);
  write_manifest(out_path(opt, "manifest.json"), reports, digest);
  for (const auto& r : reports) {
    if (!r.pass) {
      if (!opt.quiet) log << "failing check: " << r.name << "\n";
      return kCheckFailure;
    }
  }
  return kSuccess;
}

int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = resolve_config(opt);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigFailure;
  }
  try {
    if (name == "assemble") return cmd_assemble(cfg, opt, log);
    if (name == "groundstate") return cmd_groundstate(cfg, opt, log);
    if (name == "simulate") return cmd_simulate(cfg, opt, log);
    if (name == "gauge") return cmd_gauge(cfg, opt, log);
    if (name == "verify") return cmd_verify(cfg, opt, log);
    err << "unknown command '" << name << "'\n";
    return kConfigFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const fs::filesystem_error& e) {
    err << "output error: " << e.what() << "\n";
    return kConfigFailure;
  }
}

}  // namespace stablefk
