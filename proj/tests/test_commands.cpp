#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "support.hpp"
#include "slowfast/commands.hpp"

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slowfast_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.yaml";
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string small_filter_yaml() {
  std::string text = thermoelastic_yaml();
  const auto set = [&](const std::string& from, const std::string& to) { text.replace(text.find(from), from.size(), to); };
  set("particles: 2000", "particles: 40");
  set("times: [1.0]", "times: [0.25]");
  set("martingale_paths: 1000", "martingale_paths: 4");
  set("martingale_samples: 10000", "martingale_samples: 100");
  set("replications: 20", "replications: 2");
  set("epsilon_list: [0.1, 0.05, 0.025]", "epsilon_list: [0.1, 0.05]");
  return text;
}

}  // namespace

TEST_CASE("check writes a report and manifest") {
  const fs::path dir = scratch("check");
  CommandOptions opts;
  opts.out_dir = dir.string();
  std::ostringstream log, err;
  CHECK(run_command("check", "", opts, log, err) == kExitPass);
  CHECK(log.str().find("hypotheses: pass") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["command"] == "check");
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest["seed"] == 20240601u);
  const ScenarioConfig cfg = thermoelastic_scenario();
  const SystemParams& p = cfg.model.params;
  CHECK(manifest["derived"]["mu"].get<double>() == p.mu);
  CHECK(manifest["derived"]["epsilon0"].get<double>() ==
        doctest::Approx(oracle::epsilon0_bisection(p.lipschitz, p.gamma1, p.gamma2, p.mu)).epsilon(1e-12));
  CHECK(manifest["derived"]["M"][0]["M"].get<double>() ==
        doctest::Approx(oracle::contraction(0.05, p.lipschitz, p.gamma1, p.gamma2, p.mu)).epsilon(1e-14));
  CHECK(manifest["files"][0]["file"] == "check.json");
  const auto check = nlohmann::json::parse(slurp(dir / "check.json"));
  CHECK(check["overall"] == true);
  CHECK(check["gamma2"].get<double>() == 2.0);
}

TEST_CASE("hypothesis failure exit code") {
  const fs::path dir = scratch("kappa");
  std::string text = thermoelastic_yaml();
  text.replace(text.find("kappa: 2.0"), 10, "kappa: 0.4");
  CommandOptions opts;
  opts.out_dir = (dir / "out").string();
  std::ostringstream log, err;
  CHECK(run_command("check", write_config(dir, text), opts, log, err) == kExitHypothesis);
  CHECK(log.str().find("FAIL H4") != std::string::npos);
  CHECK(run_command("simulate", write_config(dir, text), opts, log, err) == kExitHypothesis);
}

TEST_CASE("parse failure exit code names the field") {
  const fs::path dir = scratch("parse");
  std::string text = thermoelastic_yaml();
  text.erase(text.find("  sigma2: 0.5\n"), 14);
  std::ostringstream log, err;
  CHECK(run_command("check", write_config(dir, text), {}, log, err) == kExitUsage);
  CHECK(err.str().find("system.sigma2") != std::string::npos);
  CHECK(run_command("bogus", "", {}, log, err) == kExitUsage);
}

TEST_CASE("simulate is reproducible and records the gap fit") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  CommandOptions opts;
  opts.seed = 99;
  opts.out_dir = a.string();
  std::ostringstream log, err;
  const std::string cfg = support::config_path("decoupled.yaml");
  REQUIRE(run_command("simulate", cfg, opts, log, err) == kExitPass);
  opts.out_dir = b.string();
  opts.threads = 2;
  REQUIRE(run_command("simulate", cfg, opts, log, err) == kExitPass);
  for (const char* f : {"full.csv", "reduced.csv", "gap.csv", "noise_path.bin", "full.bin"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto info = nlohmann::json::parse(slurp(a / "simulate.json"));
  CHECK(info["gap_slope"].get<double>() == doctest::Approx(-2.0 / 0.05).epsilon(0.2));
  std::ifstream bin(a / "noise_path.bin", std::ios::binary);
  const NoisePath path = NoisePath::read(bin);
  CHECK(path.seed() == 99u);
}

TEST_CASE("filter smoke run") {
  const fs::path dir = scratch("filter");
  CommandOptions opts;
  opts.out_dir = (dir / "out").string();
  std::ostringstream log, err;
  REQUIRE(run_command("filter", write_config(dir, small_filter_yaml()), opts, log, err) == kExitPass);
  for (const char* f : {"filter_full.csv", "filter_reduced.csv", "observation.csv", "scaling.csv", "scaling.json",
                        "martingale.json", "manifest.json"}) {
    CHECK(fs::exists(dir / "out" / f));
  }
  const auto sj = nlohmann::json::parse(slurp(dir / "out" / "scaling.json"));
  CHECK(sj["rows"].size() == 2);
}
