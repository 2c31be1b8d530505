#include "stablefk/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stablefk/errors.hpp"

namespace stablefk {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double to_double(const std::string& key, const std::string& s) {
  std::string t = boost::trim_copy(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
    throw ConfigError(key + ": not a finite number: '" + s + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& s) {
  std::string t = boost::trim_copy(s);
  long long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": not an integer: '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string t = boost::trim_copy(s);
  if (t.empty()) return parts;
  boost::split(parts, t, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  return parts;
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool assembly = false;
};

Binding real(std::string sec, std::string key, double RunConfig::*m, bool assembly = false) {
  const std::string name = sec + "." + key;
  return {sec, key, [m, name](RunConfig& c, const std::string& s) { c.*m = to_double(name, s); },
          [m](const RunConfig& c) { return fmt(c.*m); }, assembly};
}

template <class Get>
Binding real_at(std::string sec, std::string key, Get get, bool assembly = false) {
  const std::string name = sec + "." + key;
  return {sec, key, [get, name](RunConfig& c, const std::string& s) { get(c) = to_double(name, s); },
          [get](const RunConfig& c) { return fmt(get(const_cast<RunConfig&>(c))); }, assembly};
}

template <class T, class Get>
Binding integer_at(std::string sec, std::string key, Get get, bool assembly = false) {
  const std::string name = sec + "." + key;
  return {sec, key,
          [get, name](RunConfig& c, const std::string& s) {
            const long long v = to_integer(name, s);
            if (v < 0 && std::is_unsigned_v<T>) throw ConfigError(name + ": must be non-negative");
            get(c) = static_cast<T>(v);
          },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }, assembly};
}

Binding real_list(std::string sec, std::string key, std::vector<double> RunConfig::*m) {
  const std::string name = sec + "." + key;
  return {sec, key,
          [m, name](RunConfig& c, const std::string& s) {
            (c.*m).clear();
            for (const auto& p : split_list(s)) (c.*m).push_back(to_double(name, p));
          },
          [m](const RunConfig& c) {
            std::string out;
            for (double v : c.*m) out += (out.empty() ? "" : ", ") + fmt(v);
            return out;
          }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> b = [] {
    std::vector<Binding> v;
    v.push_back(real_at("process", "alpha", [](RunConfig& c) -> double& { return c.process.alpha; }, true));
    v.push_back(real_at("process", "mass", [](RunConfig& c) -> double& { return c.process.mass; }, true));
    v.push_back(
        real_at("process", "intensity_multiplier", [](RunConfig& c) -> double& { return c.process.intensity_multiplier; }, true));
    v.push_back(real("grid", "L", &RunConfig::half_width, true));
    v.push_back(integer_at<int>("grid", "n", [](RunConfig& c) -> int& { return c.nodes; }, true));

    v.push_back(real_at("local", "plus_amplitude", [](RunConfig& c) -> double& { return c.mu_plus.amplitude; }, true));
    v.push_back(real_at("local", "plus_center", [](RunConfig& c) -> double& { return c.mu_plus.center; }, true));
    v.push_back(real_at("local", "plus_width", [](RunConfig& c) -> double& { return c.mu_plus.width; }, true));
    v.push_back(real_at("local", "minus_amplitude", [](RunConfig& c) -> double& { return c.mu_minus.amplitude; }, true));
    v.push_back(real_at("local", "minus_center", [](RunConfig& c) -> double& { return c.mu_minus.center; }, true));
    v.push_back(real_at("local", "minus_width", [](RunConfig& c) -> double& { return c.mu_minus.width; }, true));

    v.push_back(real_at("nonlocal", "aplus", [](RunConfig& c) -> double& { return c.family.aplus; }, true));
    v.push_back(real_at("nonlocal", "aminus", [](RunConfig& c) -> double& { return c.family.aminus; }, true));
    v.push_back(real_at("nonlocal", "beta", [](RunConfig& c) -> double& { return c.family.beta; }, true));
    v.push_back(real_at("nonlocal", "plus_center", [](RunConfig& c) -> double& { return c.family.plus_bump.center; }, true));
    v.push_back(real_at("nonlocal", "plus_width", [](RunConfig& c) -> double& { return c.family.plus_bump.width; }, true));
    v.push_back(real_at("nonlocal", "minus_center", [](RunConfig& c) -> double& { return c.family.minus_bump.center; }, true));
    v.push_back(real_at("nonlocal", "minus_width", [](RunConfig& c) -> double& { return c.family.minus_bump.width; }, true));

    v.push_back(real_at("sim", "epsilon", [](RunConfig& c) -> double& { return c.sim.epsilon; }));
    v.push_back(real_at("sim", "dt", [](RunConfig& c) -> double& { return c.sim.dt; }));
    v.push_back(real_at("sim", "t_max", [](RunConfig& c) -> double& { return c.sim.t_max; }));
    v.push_back(integer_at<int>("sim", "n_paths", [](RunConfig& c) -> int& { return c.sim.n_paths; }));
    v.push_back(integer_at<std::uint64_t>("sim", "master_seed", [](RunConfig& c) -> std::uint64_t& { return c.sim.master_seed; }));
    v.push_back(real_at("sim", "channel_step", [](RunConfig& c) -> double& { return c.sim.channel_step; }));
    v.push_back(real_at("sim", "weight_cap", [](RunConfig& c) -> double& { return c.sim.weight_cap; }));

    v.push_back(real("levy", "x", &RunConfig::levy_x));
    v.push_back(real("levy", "t", &RunConfig::levy_t));
    v.push_back(integer_at<int>("levy", "n_paths", [](RunConfig& c) -> int& { return c.levy_paths; }));

    v.push_back(real_list("green", "probes", &RunConfig::green_probes));
    v.push_back(real_at("green", "f_amplitude", [](RunConfig& c) -> double& { return c.green_f.amplitude; }));
    v.push_back(real_at("green", "f_center", [](RunConfig& c) -> double& { return c.green_f.center; }));
    v.push_back(real_at("green", "f_width", [](RunConfig& c) -> double& { return c.green_f.width; }));
    v.push_back(integer_at<int>("green", "n_paths", [](RunConfig& c) -> int& { return c.green_paths; }));

    v.push_back(real_list("harmonic", "centers", &RunConfig::harmonic_centers));
    v.push_back(integer_at<int>("harmonic", "n_paths", [](RunConfig& c) -> int& { return c.harmonic_paths; }));
    v.push_back(real("harmonic", "budget_fraction", &RunConfig::harmonic_budget_fraction));

    v.push_back(real("gauge", "radius", &RunConfig::gauge_radius));
    v.push_back(real_list("gauge", "probes", &RunConfig::gauge_probes));
    v.push_back(integer_at<int>("gauge", "n_paths", [](RunConfig& c) -> int& { return c.gauge_paths; }));
    v.push_back(real("gauge", "theta_target", &RunConfig::theta_target));
    v.push_back(real("gauge", "witness_horizon", &RunConfig::witness_horizon));
    v.push_back(integer_at<int>("gauge", "witness_doublings", [](RunConfig& c) -> int& { return c.witness_doublings; }));
    v.push_back(real("gauge", "witness_factor", &RunConfig::witness_factor));

    v.push_back(real_list("simulate", "probes", &RunConfig::simulate_probes));
    v.push_back(real("simulate", "radius", &RunConfig::simulate_radius));
    v.push_back(real("simulate", "lambda", &RunConfig::simulate_lambda));

    v.push_back({"verify", "checks",
                 [](RunConfig& c, const std::string& s) { c.checks = split_list(s); },
                 [](const RunConfig& c) { return boost::join(c.checks, ", "); }});
    return v;
  }();
  return b;
}

std::string render(const RunConfig& cfg, bool assembly_only) {
  std::string out, section;
  for (const auto& b : bindings()) {
    if (assembly_only && !b.assembly) continue;
    if (b.section != section) {
      section = b.section;
      out += "[" + section + "]\n";
    }
    out += b.key + " = " + b.get(cfg) + "\n";
  }
  return out;
}

}  // namespace

NonlocalPerturbation RunConfig::perturbation() const {
  if (family.aplus == 0.0 && family.aminus == 0.0) return NonlocalPerturbation::zero(family.beta);
  return NonlocalPerturbation::from_family(family);
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"levy_system",        "ground_state",   "green_cross",
                                              "harmonicity",        "harmonicity_critical",
                                              "gauge_spectral",     "gauge_supercritical"};
  return names;
}

void RunConfig::validate() const {
  try {
    process.validate();
    if (nodes < 16) throw ConfigError("grid.n must be at least 16");
    if (!(half_width > 0.0)) throw ConfigError("grid.L must be > 0");
    (void)grid();
    (void)mu();
    const auto F = perturbation();
    F.validate();
    sim.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (levy_paths < 100 || green_paths < 100 || harmonic_paths < 100 || gauge_paths < 100) {
    throw ConfigError("n_paths must be at least 100 in every section");
  }
  if (!(levy_t > 0.0)) throw ConfigError("levy.t must be > 0");
  for (double x : green_probes) {
    if (!(std::abs(x) < half_width)) throw ConfigError("green.probes must lie inside the grid");
  }
  if (!(green_f.width > 0.0) || green_f.amplitude < 0.0) throw ConfigError("green.f must be a non-negative bump");
  if (harmonic_centers.size() != 2) throw ConfigError("harmonic.centers needs exactly two centres");
  if (!(harmonic_budget_fraction > 0.0)) throw ConfigError("harmonic.budget_fraction must be > 0");
  if (!(gauge_radius > 0.0) || gauge_radius >= half_width) throw ConfigError("gauge.radius must be in (0, L)");
  for (double x : gauge_probes) {
    if (!(std::abs(x) < gauge_radius)) throw ConfigError("gauge.probes must lie inside the gauge domain");
  }
  if (!(theta_target > 0.0 && theta_target < 1.0)) throw ConfigError("gauge.theta_target must be in (0, 1)");
  if (!(witness_horizon > 0.0) || witness_doublings < 1 || !(witness_factor > 1.0)) {
    throw ConfigError("gauge witness settings out of range");
  }
  if (!(simulate_radius > 0.0)) throw ConfigError("simulate.radius must be > 0");
  for (double x : simulate_probes) {
    if (!(std::abs(x) < simulate_radius)) throw ConfigError("simulate.probes must lie inside the domain");
  }
  const auto& known = check_names();
  for (const auto& c : checks) {
    if (std::find(known.begin(), known.end(), c) == known.end()) throw ConfigError("unknown check '" + c + "'");
  }
}

RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig cfg;
  std::set<std::string> sections;
  for (const auto& b : bindings()) sections.insert(b.section);
  for (const auto& [sec, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + sec + "' outside a section");
    if (!sections.count(sec)) throw ConfigError("unknown section [" + sec + "]");
    for (const auto& [key, val] : body) {
      const auto it = std::find_if(bindings().begin(), bindings().end(),
                                   [&](const Binding& b) { return b.section == sec && b.key == key; });
      if (it == bindings().end()) throw ConfigError("unknown key " + sec + "." + key);
      it->set(cfg, val.data());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in);
}

std::string canonical_text(const RunConfig& cfg) { return render(cfg, false); }

std::string assembly_text(const RunConfig& cfg) { return render(cfg, true); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace stablefk
