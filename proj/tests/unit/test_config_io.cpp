#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "stablefk/commands.hpp"
#include "stablefk/config.hpp"
#include "stablefk/errors.hpp"
#include "stablefk/io.hpp"

using namespace stablefk;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("stablefk_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const auto cfg = parse("");
  const RunConfig def;
  CHECK(canonical_text(cfg) == canonical_text(def));
  CHECK(cfg.process.alpha == 1.2);
  CHECK(cfg.nodes == 2000);
  CHECK(cfg.half_width == 20.0);
}

TEST_CASE("config keys are parsed into their fields") {
  const auto cfg = parse(
      "[process]\nalpha = 1.5\nmass = 0.25\n"
      "[grid]\nL = 12\nn = 300\n"
      "[sim]\nepsilon = 0.02\nmaster_seed = 99\n"
      "[green]\nprobes = -1, 0.5, 2\n"
      "[verify]\nchecks = levy_system, ground_state\n");
  CHECK(cfg.process.alpha == 1.5);
  CHECK(cfg.process.mass == 0.25);
  CHECK(cfg.half_width == 12.0);
  CHECK(cfg.nodes == 300);
  CHECK(cfg.sim.epsilon == 0.02);
  CHECK(cfg.sim.master_seed == 99);
  REQUIRE(cfg.green_probes.size() == 3);
  CHECK(cfg.green_probes[1] == 0.5);
  REQUIRE(cfg.checks.size() == 2);
  CHECK(cfg.checks[0] == "levy_system");
}

TEST_CASE("config round trips through its canonical text") {
  const auto cfg = parse("[grid]\nn = 512\n[nonlocal]\nbeta = 2.5\n[gauge]\nprobes = -1, 1\n");
  CHECK(canonical_text(parse(canonical_text(cfg))) == canonical_text(cfg));
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(parse("[grid]\nnodes = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse("[gird]\nn = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse("[grid]\nn = 8\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("[grid]\nn = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse("[process]\nalpha = nan\n"), ConfigError);
  CHECK_THROWS_AS(parse("[process]\nalpha = 2.5\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("[verify]\nchecks = everything\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("[gauge]\nradius = 3\nprobes = 0, 3.5\n").validate(), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/stablefk.ini"), ConfigError);
}

TEST_CASE("digests") {
  // FNV-1a reference values
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");

  const RunConfig a;
  RunConfig b;
  b.sim.master_seed = a.sim.master_seed + 1;
  CHECK(assembly_text(a) == assembly_text(b));
  CHECK(canonical_text(a) != canonical_text(b));
  RunConfig c;
  c.nodes = 1000;
  CHECK(assembly_text(a) != assembly_text(c));
}

TEST_CASE("csv header and quoting") {
  Table t;
  t.columns = {"a", "b"};
  t.add({"1", "x,y"});
  const auto text = csv_text(t, "0123456789abcdef");
  CHECK(text == std::string("# ") + kToolVersion + " config=0123456789abcdef\na,b\n1,\"x,y\"\n");
  CHECK_THROWS(t.add({"only one"}));
}

TEST_CASE("number format keeps full precision") {
  const double v = 0.1 + 0.2;
  CHECK(std::stod(num(v)) == v);
  CHECK(num(1.0) == "1");
}

TEST_CASE("manifest lists every check") {
  CheckReport r;
  r.name = "levy_system";
  r.inputs_digest = "d";
  r.statistic = 0.5;
  r.tolerance = 1.0;
  r.pass = true;
  r.predicate = "stat <= tol";
  r.artifacts = {"check_levy_system.csv"};
  CheckReport s = r;
  s.name = "ground_state";
  s.pass = false;
  const auto j = nlohmann::json::parse(manifest_text({r, s}, "abc"));
  CHECK(j["tool"] == kToolVersion);
  CHECK(j["config_digest"] == "abc");
  CHECK(j["all_pass"] == false);
  REQUIRE(j["checks"].size() == 2);
  CHECK(j["checks"][0]["name"] == "levy_system");
  CHECK(j["checks"][0]["pass"] == true);
  CHECK(j["checks"][1]["artifacts"][0] == "check_levy_system.csv");
}

TEST_CASE("form cache round trip is exact") {
  RunConfig cfg;
  cfg.half_width = 10.0;
  cfg.nodes = 161;
  const auto sys = assemble_form_system(cfg.grid(), cfg.kernel(), cfg.mu(), cfg.perturbation());
  const auto dir = scratch_dir("cache");
  const auto path = (dir / "forms.cache").string();
  write_cache(path, sys, "feedface");
  std::string digest;
  const auto back = read_cache(path, &digest);
  CHECK(digest == "feedface");
  CHECK(back.size() == sys.size());
  CHECK(back.grid.spacing() == sys.grid.spacing());
  CHECK((back.a_y - sys.a_y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.a_schr - sys.a_schr).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.b_rho - sys.b_rho).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.rho_plus - sys.rho_plus).cwiseAbs().maxCoeff() == 0.0);

  // truncation and garbage are config errors
  const auto bytes = slurp(path);
  {
    std::ofstream out(dir / "short.cache", std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(read_cache((dir / "short.cache").string()), ConfigError);
  {
    std::ofstream out(dir / "junk.cache", std::ios::binary);
    out << "not a cache at all";
  }
  CHECK_THROWS_AS(read_cache((dir / "junk.cache").string()), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("command exit codes") {
  const auto dir = scratch_dir("cli");
  std::ostringstream log, err;
  CommandOptions opt;
  opt.out_dir = dir.string();
  opt.quiet = true;

  {
    std::ofstream bad(dir / "bad.ini");
    bad << "[grid]\nwhat = 1\n";
  }
  opt.config_path = (dir / "bad.ini").string();
  CHECK(run_command("groundstate", opt, log, err) == kConfigFailure);

  {
    std::ofstream small(dir / "small.ini");
    small << "[grid]\nL = 10\nn = 200\n";
  }
  opt.config_path = (dir / "small.ini").string();
  CHECK(run_command("groundstate", opt, log, err) == kSuccess);
  CHECK(fs::exists(dir / "groundstate.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["all_pass"] == true);

  CHECK(run_command("assemble", opt, log, err) == kSuccess);
  opt.cache_path = (dir / "forms.cache").string();
  const auto direct = slurp(dir / "groundstate.csv");
  CHECK(run_command("groundstate", opt, log, err) == kSuccess);
  CHECK(slurp(dir / "groundstate.csv") == direct);

  opt.cache_path.clear();
  opt.checks = {"not_a_check"};
  CHECK(run_command("verify", opt, log, err) == kConfigFailure);
  fs::remove_all(dir);
}

TEST_CASE("seed and path overrides") {
  CommandOptions opt;
  opt.seed = 7;
  opt.paths = 250;
  const auto cfg = resolve_config(opt);
  CHECK(cfg.sim.master_seed == 7);
  CHECK(cfg.sim.n_paths == 250);
  CHECK(cfg.levy_paths == 250);
  CHECK(cfg.green_paths == 250);
  CHECK(cfg.harmonic_paths == 250);
  CHECK(cfg.gauge_paths == 250);
  opt.paths = 10;
  CHECK_THROWS_AS(resolve_config(opt), ConfigError);
}

TEST_CASE("simulate output is identical for the same seed") {
  const auto dir = scratch_dir("sim");
  std::ostringstream log, err;
  CommandOptions opt;
  opt.quiet = true;
  opt.paths = 300;
  opt.seed = 11;
  std::string first;
  for (const char* sub : {"a", "b"}) {
    opt.out_dir = (dir / sub).string();
    REQUIRE(run_command("simulate", opt, log, err) == kSuccess);
    const auto text = slurp(dir / sub / "simulate.csv");
    if (first.empty()) {
      first = text;
    } else {
      CHECK(text == first);
    }
  }
  opt.seed = 12;
  opt.out_dir = (dir / "c").string();
  REQUIRE(run_command("simulate", opt, log, err) == kSuccess);
  CHECK(slurp(dir / "c" / "simulate.csv") != first);
  fs::remove_all(dir);
}
