// End-to-end tests of the installed CLI binary (path injected by CMake).

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef PREAMP_CLI_PATH
#error "PREAMP_CLI_PATH must be defined by the build"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string out_path = "preamp_cli_out.tmp";
  const std::string cmd =
      std::string(PREAMP_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
#ifdef _WIN32
  result.exit_code = status;
#else
  result.exit_code = WEXITSTATUS(status);
#endif
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  std::remove(out_path.c_str());
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("cli version and help", "[cli]") {
  REQUIRE(run_cli("--version").exit_code == 0);
  const auto help = run_cli("--help");
  REQUIRE(help.exit_code == 0);
  for (const char* sub : {"scenario", "retrodict", "kernel", "cost", "validate"}) {
    REQUIRE_THAT(help.output, Catch::Matchers::ContainsSubstring(sub));
  }
}

TEST_CASE("cli usage errors exit with 1", "[cli]") {
  REQUIRE(run_cli("").exit_code == 1);
  REQUIRE(run_cli("scenario fig9 --out -").exit_code == 1);
  REQUIRE(run_cli("scenario").exit_code == 1);  // missing name
  REQUIRE(run_cli("retrodict --eta 1.4 --outcome 0").exit_code == 1);
  REQUIRE(run_cli("validate --trials 10").exit_code == 1);
  REQUIRE(run_cli("frobnicate").exit_code == 1);
}

TEST_CASE("cli computation failures exit with 2", "[cli]") {
  // unwritable output path
  const auto bad_path = run_cli(
      "scenario fig7 --gain 10 --out /nonexistent_dir_preamp/x.csv");
  REQUIRE(bad_path.exit_code == 2);
  // amplifier cannot reach tolerance within a sane window at this outcome dim
  const auto impossible = run_cli(
      "kernel --eta 0.5 --gain 16 --in-dim 40 --out-dim 0 --tolerance 1e-300");
  REQUIRE(impossible.exit_code == 2);
}

TEST_CASE("cli cost prints the 1/8 anchor", "[cli]") {
  const auto result = run_cli("cost --eta 0.8 --gain 10 --outcome 0");
  REQUIRE(result.exit_code == 0);
  REQUIRE_THAT(std::stod(result.output), Catch::Matchers::WithinAbs(0.125, 2e-3));
}

TEST_CASE("cli retrodict reports the flat-prior anchor", "[cli]") {
  const auto result =
      run_cli("retrodict --eta 0.8 --gain 10 --outcome 0 --out preamp_cli_post.csv");
  REQUIRE(result.exit_code == 0);
  REQUIRE_THAT(result.output,
               Catch::Matchers::ContainsSubstring("fidelity: 0.9756097560975"));
  const auto posterior_csv = slurp("preamp_cli_post.csv");
  REQUIRE_THAT(posterior_csv, Catch::Matchers::ContainsSubstring("m,prior,posterior"));
  std::remove("preamp_cli_post.csv");
}

TEST_CASE("cli scenario output is byte-stable and respects overrides", "[cli]") {
  const std::string a = "preamp_cli_a.csv";
  const std::string b = "preamp_cli_b.csv";
  REQUIRE(run_cli("scenario fig7 --gain 1:0.5:10 --out " + a).exit_code == 0);
  REQUIRE(run_cli("scenario fig7 --gain 1:0.5:10 --out " + b).exit_code == 0);
  REQUIRE(slurp(a) == slurp(b));
  REQUIRE(slurp(a).find("# scenario: fig7") != std::string::npos);
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("cli kernel dumps an identity for the perfect chain", "[cli]") {
  const auto result = run_cli("kernel --eta 1 --gain 1 --in-dim 2 --out-dim 2");
  REQUIRE(result.exit_code == 0);
  REQUIRE_THAT(result.output, Catch::Matchers::ContainsSubstring("n\\m,0,1"));
  REQUIRE_THAT(result.output, Catch::Matchers::ContainsSubstring("0,1,0"));
  REQUIRE_THAT(result.output, Catch::Matchers::ContainsSubstring("1,0,1"));
  REQUIRE_THAT(result.output, Catch::Matchers::ContainsSubstring("deficit,0,0"));
}

TEST_CASE("cli config file feeds options and flags override it", "[cli]") {
  const std::string config_path = "preamp_cli_config.ini";
  {
    std::ofstream config(config_path);
    config << "name=fig7\n"
              "gain=10\n"
              "out=preamp_cli_cfg.csv\n";
  }
  // ".17g" rendering of eta = 0.8
  const std::string eta08 = "0.80000000000000004";
  REQUIRE(run_cli("scenario --config " + config_path).exit_code == 0);
  const auto from_config = slurp("preamp_cli_cfg.csv");
  REQUIRE(from_config.find("# scenario: fig7") != std::string::npos);
  REQUIRE(from_config.find("\n" + eta08 + ",10,") != std::string::npos);

  // --gain on the command line beats the config value
  REQUIRE(run_cli("scenario --config " + config_path + " --gain 4").exit_code ==
          0);
  const auto overridden = slurp("preamp_cli_cfg.csv");
  REQUIRE(overridden.find("\n" + eta08 + ",4,") != std::string::npos);
  REQUIRE(overridden.find("\n" + eta08 + ",10,") == std::string::npos);
  std::remove(config_path.c_str());
  std::remove("preamp_cli_cfg.csv");
}

TEST_CASE("cli validate flags a perturbed kernel with exit code 3", "[cli]") {
  const auto result =
      run_cli("validate --trials 50000 --perturb 3,0,0.05 --out preamp_cli_val.csv");
  REQUIRE(result.exit_code == 3);
  REQUIRE_THAT(result.output,
               Catch::Matchers::ContainsSubstring("[FAIL]"));
  REQUIRE_THAT(result.output,
               Catch::Matchers::ContainsSubstring("eta=0.5 G=10 m=0"));
  std::remove("preamp_cli_val.csv");
}

TEST_CASE("cli validate dumps per-cell histograms on request", "[cli]") {
  const auto result =
      run_cli("validate --trials 10000 --histograms preamp_cli_hist_");
  REQUIRE(result.exit_code == 0);
  const auto hist = slurp("preamp_cli_hist_cell0.csv");
  REQUIRE(hist.rfind("count,tally,frequency\n", 0) == 0);
  for (int i = 0; i <= 12; ++i) {
    std::remove(("preamp_cli_hist_cell" + std::to_string(i) + ".csv").c_str());
  }
}
