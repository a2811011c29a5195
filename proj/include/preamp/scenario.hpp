#pragma once
/*
 * scenario.hpp — named study presets, the CSV scenario runner, kernel dumps
 * and the Monte Carlo validation suite behind the CLI.
 *
 * Preset scenarios (grids are declared defaults, all overridable):
 *   fig3  flat prior, outcome 0: fidelity surface over
 *         eta in [0.05, 1.0] step 0.05, G in [1, 16] step 0.5
 *   fig4  two-photon generator prior, outcome 0:
 *         eta in [0.05, 0.95] step 0.01, G in {1, 2, 4, 8, 16}
 *   fig5  vacuum-free flat prior, outcome 1: same grid as fig4
 *   fig6  flat prior, outcome 0: posterior histograms at eta = 0.5,
 *         G in {1, 10}
 *   fig7  flat prior, outcome 0: count-probability cost and fidelity at
 *         eta = 0.8, G in [1, 16] step 0.25
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "preamp/chain_params.hpp"
#include "preamp/errors.hpp"
#include "preamp/kernels.hpp"
#include "preamp/mc.hpp"
#include "preamp/priors.hpp"
#include "preamp/retrodict.hpp"
#include "preamp/sweep.hpp"
#include "preamp/version.hpp"

namespace preamp {

// --- grids ------------------------------------------------------------------

// Inclusive range with endpoint snapping against floating-point dust.
inline std::vector<double> make_range(double lo, double step, double hi) {
  if (!(step > 0.0) || hi < lo) {
    throw std::invalid_argument("invalid range");
  }
  const std::size_t count =
      static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    double v = lo + static_cast<double>(i) * step;
    if (std::abs(v - hi) < 1e-12) v = hi;
    grid[i] = v;
  }
  if (grid.back() > hi) grid.back() = hi;
  return grid;
}

// Accepts "0.8", "1,2,4,8" or "lo:step:hi".
inline std::vector<double> parse_grid(const std::string& spec) {
  const auto parse_one = [](const std::string& s) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse number: '" + s + "'");
    }
    if (pos != s.size()) {
      throw std::invalid_argument("cannot parse number: '" + s + "'");
    }
    return v;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(parse_one(tok));
    if (parts.size() != 3) {
      throw std::invalid_argument("range must be lo:step:hi, got '" + spec +
                                  "'");
    }
    return make_range(parts[0], parts[1], parts[2]);
  }
  std::vector<double> grid;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) grid.push_back(parse_one(tok));
  if (grid.empty()) {
    throw std::invalid_argument("empty grid spec");
  }
  return grid;
}

// --- scenario configuration --------------------------------------------------

enum class ScenarioName { fig3, fig4, fig5, fig6, fig7, custom };

inline ScenarioName scenario_from_string(const std::string& name) {
  if (name == "fig3") return ScenarioName::fig3;
  if (name == "fig4") return ScenarioName::fig4;
  if (name == "fig5") return ScenarioName::fig5;
  if (name == "fig6") return ScenarioName::fig6;
  if (name == "fig7") return ScenarioName::fig7;
  if (name == "custom") return ScenarioName::custom;
  throw std::invalid_argument("unknown scenario: '" + name +
                              "' (expected fig3|fig4|fig5|fig6|fig7|custom)");
}

inline const char* to_string(ScenarioName name) {
  switch (name) {
    case ScenarioName::fig3: return "fig3";
    case ScenarioName::fig4: return "fig4";
    case ScenarioName::fig5: return "fig5";
    case ScenarioName::fig6: return "fig6";
    case ScenarioName::fig7: return "fig7";
    case ScenarioName::custom: return "custom";
  }
  return "?";
}

struct ScenarioConfig {
  ScenarioName name = ScenarioName::custom;
  std::vector<double> efficiency_grid;  // empty = scenario default
  std::vector<double> gain_grid;        // empty = scenario default
  double dark_mean = 0.0;
  std::string prior_spec;  // "" = default; name or file path otherwise
  std::optional<std::size_t> outcome;
  double tolerance = 1e-12;
  std::optional<std::size_t> cutoff;  // fixed prior cutoff override
  std::string output_path;            // "" = caller handles output
  unsigned max_threads = 0;
};

namespace detail_scenario {

struct ResolvedPrior {
  PriorDistribution prior;
  std::optional<std::size_t> converged_cutoff;  // set for converged families
};

// Named/default priors of the converged families settle their cutoff at the
// slowest-converging grid corner (smallest eta, smallest gain).
inline ResolvedPrior resolve_prior(const std::string& spec,
                                   std::optional<std::size_t> fixed_cutoff,
                                   const std::vector<double>& etas,
                                   const std::vector<double>& gains,
                                   double dark_mean, std::size_t outcome) {
  const auto family_prior = [&](PriorFamily family) -> ResolvedPrior {
    if (fixed_cutoff) {
      return {make_prior(family, *fixed_cutoff), std::nullopt};
    }
    const double eta_min = *std::min_element(etas.begin(), etas.end());
    const double gain_min = *std::min_element(gains.begin(), gains.end());
    const DetectionChainParams corner{gain_min, eta_min, dark_mean};
    const std::size_t cutoff = converged_cutoff(family, corner, outcome);
    return {make_prior(family, cutoff), cutoff};
  };
  if (spec.empty() || spec == "flat") return family_prior(PriorFamily::flat);
  if (spec == "nonzero_flat") return family_prior(PriorFamily::nonzero_flat);
  if (spec == "two_photon") return {two_photon_generator_prior(), std::nullopt};
  return {load_prior_file(spec), std::nullopt};
}

inline void add_common_meta(SweepResult& result, const ScenarioConfig& config,
                            const ResolvedPrior& resolved,
                            std::size_t outcome) {
  result.add_meta("tool", std::string("preamp ") + kVersion);
  result.add_meta("scenario", to_string(config.name));
  result.add_meta("prior", resolved.prior.label);
  if (resolved.converged_cutoff) {
    result.add_meta("converged_cutoff",
                    std::to_string(*resolved.converged_cutoff));
  }
  result.add_meta("outcome", std::to_string(outcome));
  result.add_meta("dark_mean", format_double(config.dark_mean));
  result.add_meta("tolerance", format_double(config.tolerance));
}

// log10(1 - F), clamped at -16 for differences below double resolution.
inline std::pair<double, bool> log10_one_minus(double fidelity) {
  const double diff = 1.0 - fidelity;
  if (diff <= 1e-16) return {-16.0, true};
  return {std::log10(diff), false};
}

}  // namespace detail_scenario

// --- scenario runner ----------------------------------------------------------

inline SweepResult run_scenario(const ScenarioConfig& config) {
  using detail_scenario::add_common_meta;
  using detail_scenario::log10_one_minus;
  using detail_scenario::resolve_prior;

  ScenarioConfig cfg = config;
  std::size_t outcome = 0;
  switch (cfg.name) {
    case ScenarioName::fig3:
      if (cfg.efficiency_grid.empty())
        cfg.efficiency_grid = make_range(0.05, 0.05, 1.0);
      if (cfg.gain_grid.empty()) cfg.gain_grid = make_range(1.0, 0.5, 16.0);
      outcome = cfg.outcome.value_or(0);
      break;
    case ScenarioName::fig4:
      if (cfg.efficiency_grid.empty())
        cfg.efficiency_grid = make_range(0.05, 0.01, 0.95);
      if (cfg.gain_grid.empty()) cfg.gain_grid = {1, 2, 4, 8, 16};
      if (cfg.prior_spec.empty()) cfg.prior_spec = "two_photon";
      outcome = cfg.outcome.value_or(0);
      break;
    case ScenarioName::fig5:
      if (cfg.efficiency_grid.empty())
        cfg.efficiency_grid = make_range(0.05, 0.01, 0.95);
      if (cfg.gain_grid.empty()) cfg.gain_grid = {1, 2, 4, 8, 16};
      if (cfg.prior_spec.empty()) cfg.prior_spec = "nonzero_flat";
      outcome = cfg.outcome.value_or(1);
      break;
    case ScenarioName::fig6:
      if (cfg.efficiency_grid.empty()) cfg.efficiency_grid = {0.5};
      if (cfg.gain_grid.empty()) cfg.gain_grid = {1, 10};
      outcome = cfg.outcome.value_or(0);
      break;
    case ScenarioName::fig7:
      if (cfg.efficiency_grid.empty()) cfg.efficiency_grid = {0.8};
      if (cfg.gain_grid.empty()) cfg.gain_grid = make_range(1.0, 0.25, 16.0);
      outcome = cfg.outcome.value_or(0);
      break;
    case ScenarioName::custom:
      if (cfg.efficiency_grid.empty() || cfg.gain_grid.empty()) {
        throw std::invalid_argument(
            "custom scenario requires explicit --eta and --gain grids");
      }
      if (cfg.prior_spec.empty()) {
        throw std::invalid_argument("custom scenario requires --prior");
      }
      if (!cfg.outcome) {
        throw std::invalid_argument("custom scenario requires --outcome");
      }
      outcome = *cfg.outcome;
      break;
  }

  const auto resolved =
      resolve_prior(cfg.prior_spec, cfg.cutoff, cfg.efficiency_grid,
                    cfg.gain_grid, cfg.dark_mean, outcome);

  SweepResult result;
  if (cfg.name == ScenarioName::fig6) {
    // posterior histograms, one block of rows per gain
    result.columns = {"gain", "m", "posterior"};
    add_common_meta(result, cfg, resolved, outcome);
    const double eta = cfg.efficiency_grid.front();
    result.add_meta("eta", format_double(eta));
    for (double gain : cfg.gain_grid) {
      const DetectionChainParams params{gain, eta, cfg.dark_mean};
      const auto report = retrodict_chain(resolved.prior, params, outcome);
      result.add_meta("fidelity(gain=" + format_double(gain) + ")",
                      format_double(report.fidelity));
      result.add_meta("posterior_mean(gain=" + format_double(gain) + ")",
                      format_double(report.posterior_mean));
      const std::size_t m_max =
          std::min<std::size_t>(50, report.posterior.size() - 1);
      for (std::size_t m = 0; m <= m_max; ++m) {
        result.rows.push_back({gain, static_cast<std::int64_t>(m),
                               report.posterior[m]});
      }
    }
  } else if (cfg.name == ScenarioName::fig7) {
    result.columns = {"eta",
                      "gain",
                      "relative_probability",
                      "fidelity",
                      "count_probability",
                      "posterior_mean",
                      "status"};
    add_common_meta(result, cfg, resolved, outcome);
    for (double eta : cfg.efficiency_grid) {
      for (double gain : cfg.gain_grid) {
        SweepResult::Value rel{}, fid{}, cp{}, mean{};
        std::string status = "ok";
        try {
          const DetectionChainParams params{gain, eta, cfg.dark_mean};
          const auto report = retrodict_chain(resolved.prior, params, outcome);
          rel = relative_count_probability(resolved.prior, params, outcome,
                                           cfg.tolerance);
          fid = report.fidelity;
          cp = report.count_probability;
          mean = report.posterior_mean;
        } catch (const std::exception& e) {
          status = std::string("error: ") + e.what();
        }
        result.rows.push_back({eta, gain, rel, fid, cp, mean, status});
      }
    }
  } else {
    auto surface = fidelity_surface(resolved.prior, outcome,
                                    cfg.efficiency_grid, cfg.gain_grid,
                                    cfg.tolerance, cfg.dark_mean, {},
                                    cfg.max_threads);
    result.columns = {"eta",
                      "gain",
                      "fidelity",
                      "log10_one_minus_fidelity",
                      "count_probability",
                      "posterior_mean",
                      "status"};
    add_common_meta(result, cfg, resolved, outcome);
    for (auto& row : surface.rows) {
      SweepResult::Value logv{};
      std::string status = std::get<std::string>(row[5]);
      if (std::holds_alternative<double>(row[2])) {
        const auto [lg, clamped] = log10_one_minus(std::get<double>(row[2]));
        logv = lg;
        if (clamped && status == "ok") status = "log_clamped";
      }
      result.rows.push_back(
          {row[0], row[1], row[2], logv, row[3], row[4], status});
    }
  }

  if (!cfg.output_path.empty()) result.save_csv(cfg.output_path);
  return result;
}

// --- kernel dump ---------------------------------------------------------------

// Compound chain kernel as CSV, composed with the dark-count kernel when
// params.dark_mean > 0. Header row lists input m, first column output n,
// final row the per-input deficits. output_dim = 0 sizes the output window
// so every column tail is within tolerance.
inline void dump_kernel(const DetectionChainParams& params,
                        std::size_t input_dim, std::size_t output_dim,
                        double tolerance, std::ostream& out) {
  params.validate();
  if (input_dim == 0) {
    throw std::invalid_argument("kernel dimensions must be positive");
  }
  const bool auto_dim = output_dim == 0;
  std::size_t base_dim =
      auto_dim ? compound_output_dim_bound(params.gain, input_dim, tolerance)
               : output_dim;
  TransitionKernel kernel =
      compound_kernel(params, input_dim, base_dim, tolerance,
                      auto_dim ? ColumnPolicy::strict
                               : ColumnPolicy::truncated_block);
  if (params.has_dark_counts()) {
    kernel = compose(
        dark_count_kernel(params.dark_mean, kernel.output_dim(), tolerance),
        kernel);
    if (!auto_dim) kernel = kernel.truncated(output_dim);
  }
  out << "# tool: preamp " << kVersion << '\n';
  out << "# kind: " << (params.has_dark_counts() ? "compound+dark" : "compound")
      << '\n';
  out << "# gain: " << format_double(params.gain) << '\n';
  out << "# efficiency: " << format_double(params.efficiency) << '\n';
  out << "# dark_mean: " << format_double(params.dark_mean) << '\n';
  out << "# tolerance: " << format_double(tolerance) << '\n';
  out << "n\\m";
  for (std::size_t m = 0; m < kernel.input_dim(); ++m) out << ',' << m;
  out << '\n';
  for (std::size_t n = 0; n < kernel.output_dim(); ++n) {
    out << n;
    for (std::size_t m = 0; m < kernel.input_dim(); ++m) {
      out << ',' << format_double(kernel(n, m));
    }
    out << '\n';
  }
  out << "deficit";
  for (std::size_t m = 0; m < kernel.input_dim(); ++m) {
    out << ',' << format_double(kernel.column_deficit(m));
  }
  out << '\n';
}

inline void dump_kernel_file(const DetectionChainParams& params,
                             std::size_t input_dim, std::size_t output_dim,
                             double tolerance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open output file: " + path);
  dump_kernel(params, input_dim, output_dim, tolerance, out);
  out.flush();
  if (!out) throw io_error("failed writing output file: " + path);
}

// --- Monte Carlo validation suite ------------------------------------------------

struct PerturbSpec {
  std::size_t cell = 0;         // index into the designated TV cells
  std::size_t count_index = 0;  // analytic column entry to perturb
  double delta = 0.0;
};

struct ValidationOptions {
  std::uint64_t seed = 12345;
  std::uint64_t trials = 1000000;
  unsigned max_threads = 0;
  std::optional<PerturbSpec> perturb;  // fault-injection hook for tests
  std::string histogram_prefix;  // when set, dump each cell's histogram CSV
};

struct ValidationCheck {
  std::string name;
  double observed = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass = true;

  void add(std::string name, double observed, double limit) {
    const bool pass = observed <= limit;
    all_pass = all_pass && pass;
    checks.push_back({std::move(name), observed, limit, pass});
  }

  void print(std::ostream& out) const {
    for (const auto& c : checks) {
      out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
          << "  observed=" << format_double(c.observed)
          << "  limit=" << format_double(c.limit) << '\n';
    }
    out << (all_pass ? "validation passed" : "VALIDATION FAILED") << " ("
        << checks.size() << " checks)\n";
  }

  SweepResult as_sweep_result() const {
    SweepResult result;
    result.columns = {"check", "observed", "limit", "pass"};
    result.add_meta("tool", std::string("preamp ") + kVersion);
    for (const auto& c : checks) {
      result.rows.push_back({c.name, c.observed, c.limit,
                             std::string(c.pass ? "pass" : "fail")});
    }
    return result;
  }
};

struct TvCell {
  double eta;
  double gain;
  std::size_t m;
  double dark = 0.0;
};

inline const std::vector<TvCell>& validation_tv_cells() {
  static const std::vector<TvCell> cells = {
      {0.5, 2.0, 0},  {0.5, 2.0, 1},  {0.5, 2.0, 2},
      {0.5, 10.0, 0}, {0.5, 10.0, 1}, {0.5, 10.0, 2},
      {0.8, 2.0, 0},  {0.8, 2.0, 1},  {0.8, 2.0, 2},
      {0.8, 10.0, 0}, {0.8, 10.0, 1}, {0.8, 10.0, 2},
  };
  return cells;
}

namespace detail_scenario {

// TV distance between empirical frequencies and an analytic column whose
// mass beyond its stored range is `deficit`.
inline double tv_distance(const std::vector<double>& freq,
                          const std::vector<double>& column, double deficit) {
  double tv = 0.0;
  const std::size_t overlap = std::min(freq.size(), column.size());
  for (std::size_t i = 0; i < overlap; ++i) {
    tv += std::abs(freq[i] - column[i]);
  }
  for (std::size_t i = overlap; i < freq.size(); ++i) tv += freq[i];
  for (std::size_t i = overlap; i < column.size(); ++i) tv += column[i];
  return 0.5 * (tv + deficit);
}

// Largest per-bin z-score over bins with expected tally >= 25.
inline double max_bin_z(const std::vector<double>& freq,
                        const std::vector<double>& column, double trials) {
  double worst = 0.0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    const double p = column[i];
    if (p * trials < 25.0) continue;
    const double f = i < freq.size() ? freq[i] : 0.0;
    const double se = std::sqrt(p * (1.0 - p) / trials);
    worst = std::max(worst, std::abs(f - p) / se);
  }
  return worst;
}

inline double fourth_central_moment(const mc::CountHistogram& hist) {
  const double mu = hist.mean();
  double s = 0.0;
  for (std::size_t i = 0; i < hist.tallies.size(); ++i) {
    const double d = static_cast<double>(i) - mu;
    s += d * d * d * d * static_cast<double>(hist.tallies[i]);
  }
  return s / static_cast<double>(hist.trials);
}

}  // namespace detail_scenario

// Runs the Monte Carlo oracle against the analytic kernels and fidelities.
// The TV limit is stated for 10^6 trials and scaled as sqrt(10^6 / trials)
// for other trial counts (minimum 10^4).
inline ValidationReport validate_against_simulation(
    const ValidationOptions& opts) {
  using detail_scenario::fourth_central_moment;
  using detail_scenario::max_bin_z;
  using detail_scenario::tv_distance;

  if (opts.trials < 10000) {
    throw std::invalid_argument("validate requires trials >= 10000");
  }
  ValidationReport report;
  const double n = static_cast<double>(opts.trials);
  const double tv_limit = 0.01 * std::sqrt(1e6 / n);
  std::uint64_t run = 0;

  // count-distribution cells
  const auto run_cell = [&](const TvCell& cell, std::size_t cell_index,
                            bool is_designated) {
    mc::SampleConfig cfg{opts.trials, opts.seed + run++,
                         {cell.gain, cell.eta, cell.dark}, opts.max_threads};
    const auto hist = mc::sample_chain(cfg, cell.m);
    if (!opts.histogram_prefix.empty()) {
      const std::string path =
          opts.histogram_prefix + "cell" + std::to_string(cell_index) + ".csv";
      std::ofstream out(path);
      if (!out) throw io_error("cannot open histogram file: " + path);
      hist.write_csv(out);
    }
    auto column = compound_column(cell.gain, cell.eta, cell.m, 1e-14);
    if (cell.dark > 0.0) {
      const auto pois = preamp::detail::poisson_pmf_prefix(cell.dark, 1e-14,
                                                           100000);
      std::vector<double> dark_col(column.size() + pois.size() - 1, 0.0);
      for (std::size_t j = 0; j < column.size(); ++j) {
        for (std::size_t k = 0; k < pois.size(); ++k) {
          dark_col[j + k] += column[j] * pois[k];
        }
      }
      column = std::move(dark_col);
    }
    preamp::detail::KahanSum colsum;
    for (double v : column) colsum.add(v);
    double deficit = std::max(0.0, 1.0 - colsum.value());
    if (is_designated && opts.perturb && opts.perturb->cell == cell_index) {
      auto& col = column;
      if (opts.perturb->count_index >= col.size()) {
        col.resize(opts.perturb->count_index + 1, 0.0);
      }
      col[opts.perturb->count_index] += opts.perturb->delta;
    }
    std::ostringstream tag;
    tag << "eta=" << cell.eta << " G=" << cell.gain << " m=" << cell.m;
    if (cell.dark > 0.0) tag << " dark=" << cell.dark;
    const auto freq = hist.frequencies();
    report.add("tv(" + tag.str() + ")", tv_distance(freq, column, deficit),
               tv_limit);
    report.add("zmax(" + tag.str() + ")", max_bin_z(freq, column, n), 5.0);
  };

  const auto& cells = validation_tv_cells();
  for (std::size_t i = 0; i < cells.size(); ++i) run_cell(cells[i], i, true);
  run_cell({0.8, 10.0, 1, 0.5}, cells.size(), false);  // dark-count chain cell

  // amplifier sampler moments: mean (m+1)G - 1, variance (m+1)(G-1)G
  const struct { std::size_t m; double gain; } amp_cases[] = {
      {0, 2.0}, {1, 4.0}, {2, 10.0}, {5, 16.0}};
  for (const auto& c : amp_cases) {
    mc::SampleConfig cfg{opts.trials, opts.seed + run++,
                         {c.gain, 1.0, 0.0}, opts.max_threads};
    const auto hist = mc::sample_amplifier_outputs(cfg, c.m);
    const double mean_th = (static_cast<double>(c.m) + 1.0) * c.gain - 1.0;
    const double var_th =
        (static_cast<double>(c.m) + 1.0) * (c.gain - 1.0) * c.gain;
    const double var_emp = hist.variance();
    const double se_mean = std::sqrt(var_emp / n);
    const double mu4 = fourth_central_moment(hist);
    const double se_var = std::sqrt(
        std::max(0.0, mu4 - var_emp * var_emp) / n);
    std::ostringstream tag;
    tag << "m=" << c.m << " G=" << c.gain;
    report.add("amp_mean(" + tag.str() + ")",
               std::abs(hist.mean() - mean_th), 4.0 * se_mean);
    report.add("amp_var(" + tag.str() + ")", std::abs(var_emp - var_th),
               4.0 * se_var);
  }

  // Poisson sampler moments at lambda = 0.7
  {
    const double lambda = 0.7;
    const auto hist =
        mc::sample_poisson(opts.trials, opts.seed + run++, lambda,
                           opts.max_threads);
    const double var_emp = hist.variance();
    const double se_mean = std::sqrt(var_emp / n);
    const double mu4 = fourth_central_moment(hist);
    const double se_var =
        std::sqrt(std::max(0.0, mu4 - var_emp * var_emp) / n);
    report.add("poisson_mean(lambda=0.7)", std::abs(hist.mean() - lambda),
               4.0 * se_mean);
    report.add("poisson_var(lambda=0.7)", std::abs(var_emp - lambda),
               4.0 * se_var);
  }

  // empirical retrodictive fidelity, two-photon prior, outcome 0
  {
    const DetectionChainParams params{16.0, 0.5, 0.0};
    const PriorDistribution prior = two_photon_generator_prior();
    mc::SampleConfig cfg{opts.trials, opts.seed + run++, params,
                         opts.max_threads};
    const auto sample = mc::sample_retrodiction(cfg, prior, 0);
    const auto analytic = retrodict_chain(prior, params, 0);
    const double se =
        std::sqrt(analytic.fidelity * (1.0 - analytic.fidelity) /
                  static_cast<double>(sample.kept));
    report.add("retrodiction_fidelity(two_photon eta=0.5 G=16)",
               std::abs(sample.empirical_fidelity(0) - analytic.fidelity),
               3.0 * se);
  }

  return report;
}

}  // namespace preamp
