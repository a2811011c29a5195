// preamp CLI — scenario tables, single retrodictions, kernel dumps,
// count-probability cost and the Monte Carlo validation suite.
//
// Exit codes: 0 success, 1 usage error, 2 computation failure,
// 3 validation failure.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "preamp/preamp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitComputation = 2;
constexpr int kExitValidation = 3;

struct PriorChoice {
  preamp::PriorDistribution prior;
  std::optional<std::size_t> converged_cutoff;
};

// Resolve a --prior value ("flat", "nonzero_flat", "two_photon" or a file
// path). Converged families settle their cutoff for the given chain unless a
// fixed cutoff is requested.
PriorChoice resolve_prior(const std::string& spec,
                          const preamp::DetectionChainParams& params,
                          std::size_t outcome,
                          std::optional<std::size_t> cutoff) {
  const auto family = [&](preamp::PriorFamily f) -> PriorChoice {
    if (cutoff) return {preamp::make_prior(f, *cutoff), std::nullopt};
    const std::size_t settled = preamp::converged_cutoff(f, params, outcome);
    return {preamp::make_prior(f, settled), settled};
  };
  if (spec.empty() || spec == "flat") return family(preamp::PriorFamily::flat);
  if (spec == "nonzero_flat") return family(preamp::PriorFamily::nonzero_flat);
  if (spec == "two_photon") return {preamp::two_photon_generator_prior(), {}};
  return {preamp::load_prior_file(spec), {}};
}

void write_or_print(const preamp::SweepResult& result,
                    const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    result.write_csv(std::cout);
  } else {
    result.save_csv(out_path);
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// `key = value` lines mirroring the scenario options; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw preamp::io_error("cannot open config file: " + path);
  }
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config file " + path + " line " +
                                  std::to_string(lineno) +
                                  ": expected key = value");
    }
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size()) {
    throw std::invalid_argument("config key '" + key +
                                "': cannot parse number '" + value + "'");
  }
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size()) {
    throw std::invalid_argument("config key '" + key +
                                "': cannot parse integer '" + value + "'");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"preamp — preamplified photon-counting detection chains: "
               "retrodictive fidelity, posteriors and count-probability cost"};
  app.set_version_flag("--version", std::string("preamp ") + preamp::kVersion);
  app.require_subcommand(1);

  int exit_code = kExitOk;

  // ---- scenario --------------------------------------------------------
  auto* scenario = app.add_subcommand(
      "scenario", "Run a named scenario (fig3..fig7, custom) to a CSV table");
  std::string scen_config;
  scenario->add_option("--config", scen_config,
                       "key = value file mirroring these options; command-line "
                       "flags override it");
  std::string scen_name;
  std::string scen_eta, scen_gain, scen_prior, scen_out;
  double scen_dark = 0.0, scen_tol = 1e-12;
  std::int64_t scen_outcome = -1, scen_cutoff = -1;
  unsigned scen_threads = 0;
  scenario->add_option("name,--name", scen_name,
                       "scenario: fig3|fig4|fig5|fig6|fig7|custom");
  scenario->add_option("--eta", scen_eta,
                       "efficiency grid: value, list v1,v2,.. or lo:step:hi");
  scenario->add_option("--gain", scen_gain, "gain grid (same forms)");
  scenario->add_option("--dark", scen_dark, "mean dark counts per window");
  scenario->add_option("--prior", scen_prior,
                       "flat|nonzero_flat|two_photon|<file>");
  scenario->add_option("--outcome", scen_outcome, "postselected count");
  scenario->add_option("--tolerance", scen_tol, "kernel truncation tolerance");
  scenario->add_option("--cutoff", scen_cutoff,
                       "fixed prior cutoff (default: converged)");
  scenario->add_option("--out", scen_out, "output CSV path ('-' = stdout)");
  scenario->add_option("--threads", scen_threads, "worker threads (0 = auto)");
  scenario->callback([&] {
    if (!scen_config.empty()) {
      // file values apply only where no command-line flag was given
      const auto file = read_config_file(scen_config);
      const auto given = [&](const char* flag) {
        return scenario->count(flag) > 0;
      };
      for (const auto& [key, value] : file) {
        if (key == "name") {
          if (!given("--name") && scen_name.empty()) scen_name = value;
        } else if (key == "eta") {
          if (!given("--eta")) scen_eta = value;
        } else if (key == "gain") {
          if (!given("--gain")) scen_gain = value;
        } else if (key == "dark") {
          if (!given("--dark")) scen_dark = to_double(key, value);
        } else if (key == "prior") {
          if (!given("--prior")) scen_prior = value;
        } else if (key == "outcome") {
          if (!given("--outcome")) scen_outcome = to_int(key, value);
        } else if (key == "tolerance") {
          if (!given("--tolerance")) scen_tol = to_double(key, value);
        } else if (key == "cutoff") {
          if (!given("--cutoff")) scen_cutoff = to_int(key, value);
        } else if (key == "out") {
          if (!given("--out")) scen_out = value;
        } else if (key == "threads") {
          if (!given("--threads")) {
            scen_threads = static_cast<unsigned>(to_int(key, value));
          }
        } else {
          throw std::invalid_argument("unknown config key '" + key + "'");
        }
      }
    }
    if (scen_name.empty()) {
      throw std::invalid_argument("scenario requires a name");
    }
    preamp::ScenarioConfig config;
    config.name = preamp::scenario_from_string(scen_name);
    if (!scen_eta.empty()) config.efficiency_grid = preamp::parse_grid(scen_eta);
    if (!scen_gain.empty()) config.gain_grid = preamp::parse_grid(scen_gain);
    config.dark_mean = scen_dark;
    config.prior_spec = scen_prior;
    if (scen_outcome >= 0) {
      config.outcome = static_cast<std::size_t>(scen_outcome);
    }
    config.tolerance = scen_tol;
    if (scen_cutoff >= 0) config.cutoff = static_cast<std::size_t>(scen_cutoff);
    config.max_threads = scen_threads;
    const auto result = preamp::run_scenario(config);
    write_or_print(result, scen_out);
    for (const auto& row : result.rows) {
      if (const auto* status = std::get_if<std::string>(&row.back());
          status && status->rfind("error", 0) == 0) {
        std::cerr << "preamp: some cells failed; see the status column\n";
        exit_code = kExitComputation;
        break;
      }
    }
  });

  // ---- retrodict --------------------------------------------------------
  auto* retro = app.add_subcommand(
      "retrodict", "Retrodict the photon number behind one count outcome");
  double r_eta = 1.0, r_gain = 1.0, r_dark = 0.0, r_tol = 1e-12;
  std::string r_prior, r_out;
  std::int64_t r_outcome = 0, r_cutoff = -1;
  retro->add_option("--eta", r_eta, "detector efficiency")->required();
  retro->add_option("--gain", r_gain, "amplifier gain");
  retro->add_option("--dark", r_dark, "mean dark counts per window");
  retro->add_option("--prior", r_prior, "flat|nonzero_flat|two_photon|<file>");
  retro->add_option("--outcome", r_outcome, "recorded count")->required();
  retro->add_option("--cutoff", r_cutoff, "fixed prior cutoff");
  retro->add_option("--tolerance", r_tol, "kernel truncation tolerance");
  retro->add_option("--out", r_out, "write the posterior as CSV");
  retro->callback([&] {
    if (r_outcome < 0) throw std::invalid_argument("outcome must be >= 0");
    const preamp::DetectionChainParams params{r_gain, r_eta, r_dark};
    params.validate();
    std::optional<std::size_t> cutoff;
    if (r_cutoff >= 0) cutoff = static_cast<std::size_t>(r_cutoff);
    const auto choice = resolve_prior(
        r_prior, params, static_cast<std::size_t>(r_outcome), cutoff);
    const auto report = preamp::retrodict_chain(
        choice.prior, params, static_cast<std::size_t>(r_outcome));
    std::cout << "prior: " << choice.prior.label
              << (choice.converged_cutoff ? " (converged)" : "") << '\n'
              << "outcome: " << report.outcome << '\n'
              << "fidelity: " << preamp::format_double(report.fidelity) << '\n'
              << "count_probability: "
              << preamp::format_double(report.count_probability) << '\n'
              << "posterior_mean: "
              << preamp::format_double(report.posterior_mean) << '\n';
    if (!r_out.empty()) {
      preamp::SweepResult table;
      table.columns = {"m", "prior", "posterior"};
      table.add_meta("tool", std::string("preamp ") + preamp::kVersion);
      table.add_meta("prior", choice.prior.label);
      table.add_meta("eta", preamp::format_double(r_eta));
      table.add_meta("gain", preamp::format_double(r_gain));
      table.add_meta("dark_mean", preamp::format_double(r_dark));
      table.add_meta("outcome", std::to_string(report.outcome));
      table.add_meta("fidelity", preamp::format_double(report.fidelity));
      table.add_meta("count_probability",
                     preamp::format_double(report.count_probability));
      table.add_meta("posterior_mean",
                     preamp::format_double(report.posterior_mean));
      for (std::size_t m = 0; m < report.posterior.size(); ++m) {
        table.rows.push_back({static_cast<std::int64_t>(m), choice.prior[m],
                              report.posterior[m]});
      }
      table.save_csv(r_out);
    }
  });

  // ---- kernel -----------------------------------------------------------
  auto* kernel = app.add_subcommand(
      "kernel", "Dump the compound (optionally +dark) kernel as CSV");
  double k_eta = 1.0, k_gain = 1.0, k_dark = 0.0, k_tol = 1e-12;
  std::uint64_t k_in = 0, k_out = 0;
  std::string k_path;
  kernel->add_option("--eta", k_eta, "detector efficiency")->required();
  kernel->add_option("--gain", k_gain, "amplifier gain");
  kernel->add_option("--dark", k_dark, "mean dark counts per window");
  kernel->add_option("--in-dim", k_in, "input photon-number levels")
      ->required();
  kernel->add_option("--out-dim", k_out,
                     "output count levels (0 = adapt to tolerance)");
  kernel->add_option("--tolerance", k_tol, "kernel truncation tolerance");
  kernel->add_option("--out", k_path, "output CSV path ('-' = stdout)");
  kernel->callback([&] {
    const preamp::DetectionChainParams params{k_gain, k_eta, k_dark};
    params.validate();
    if (k_path.empty() || k_path == "-") {
      preamp::dump_kernel(params, k_in, k_out, k_tol, std::cout);
    } else {
      preamp::dump_kernel_file(params, k_in, k_out, k_tol, k_path);
    }
  });

  // ---- cost -------------------------------------------------------------
  auto* cost = app.add_subcommand(
      "cost",
      "Count probability relative to perfect detection (eta = 1, G = 1)");
  double c_eta = 1.0, c_gain = 1.0, c_dark = 0.0, c_tol = 1e-12;
  std::string c_prior;
  std::int64_t c_outcome = 0, c_cutoff = -1;
  cost->add_option("--eta", c_eta, "detector efficiency")->required();
  cost->add_option("--gain", c_gain, "amplifier gain");
  cost->add_option("--dark", c_dark, "mean dark counts per window");
  cost->add_option("--prior", c_prior, "flat|nonzero_flat|two_photon|<file>");
  cost->add_option("--outcome", c_outcome, "recorded count");
  cost->add_option("--cutoff", c_cutoff, "fixed prior cutoff");
  cost->add_option("--tolerance", c_tol, "kernel truncation tolerance");
  cost->callback([&] {
    if (c_outcome < 0) throw std::invalid_argument("outcome must be >= 0");
    const preamp::DetectionChainParams params{c_gain, c_eta, c_dark};
    params.validate();
    std::optional<std::size_t> cutoff;
    if (c_cutoff >= 0) cutoff = static_cast<std::size_t>(c_cutoff);
    const auto choice = resolve_prior(
        c_prior, params, static_cast<std::size_t>(c_outcome), cutoff);
    const double ratio = preamp::relative_count_probability(
        choice.prior, params, static_cast<std::size_t>(c_outcome), c_tol);
    std::cout << preamp::format_double(ratio) << '\n';
  });

  // ---- validate -----------------------------------------------------------
  auto* validate = app.add_subcommand(
      "validate", "Run the Monte Carlo oracle against the analytic kernels");
  std::uint64_t v_seed = 12345, v_trials = 1000000;
  std::string v_out, v_perturb, v_histograms;
  unsigned v_threads = 0;
  validate->add_option("--seed", v_seed, "RNG seed (documented default 12345)");
  validate->add_option("--trials", v_trials, "trials per check (>= 10000)");
  validate->add_option("--out", v_out, "write the check table as CSV");
  validate->add_option("--histograms", v_histograms,
                       "prefix for per-cell count histograms "
                       "(count,tally,frequency CSVs)");
  validate->add_option("--threads", v_threads, "worker threads (0 = auto)");
  validate
      ->add_option("--perturb", v_perturb,
                   "fault-injection hook: cell,count_index,delta")
      ->group("");  // hidden; used by the test suite
  validate->callback([&] {
    preamp::ValidationOptions opts;
    opts.seed = v_seed;
    opts.trials = v_trials;
    opts.max_threads = v_threads;
    opts.histogram_prefix = v_histograms;
    if (!v_perturb.empty()) {
      const auto parts = preamp::parse_grid(v_perturb);
      if (parts.size() != 3) {
        throw std::invalid_argument("--perturb expects cell,count_index,delta");
      }
      opts.perturb = preamp::PerturbSpec{
          static_cast<std::size_t>(parts[0]),
          static_cast<std::size_t>(parts[1]), parts[2]};
    }
    const auto report = preamp::validate_against_simulation(opts);
    report.print(std::cout);
    if (!v_out.empty()) report.as_sweep_result().save_csv(v_out);
    if (!report.all_pass) exit_code = kExitValidation;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "preamp: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "preamp: " << e.what() << '\n';
    return kExitComputation;
  }
  return exit_code;
}
