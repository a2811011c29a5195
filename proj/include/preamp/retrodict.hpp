#pragma once
/*
 * retrodict.hpp — Bayesian inversion of the detection chain.
 *
 * For a recorded count n, prior photon-number probabilities p_m and chain
 * conditional probabilities P(n | m):
 *
 *     posterior(m | n) = p_m P(n|m) / sum_m' p_m' P(n|m')
 *     F_r(n)           = posterior(n | n)      (0 beyond the prior support)
 *     P(n)             = the denominator (count probability)
 *
 * The retrodictive fidelity F_r(n) is the confidence that the measurement
 * arm really held n photons when the detector said n; it is a lower bound on
 * a postselecting device's output fidelity.
 *
 * "Converged flat prior" evaluations double the prior cutoff from 200 until
 * fidelity and posterior mean move by less than 1e-9 (cap 6400), which
 * operationalizes an infinite flat prior reproducibly.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "preamp/chain_params.hpp"
#include "preamp/errors.hpp"
#include "preamp/kernels.hpp"
#include "preamp/numeric.hpp"
#include "preamp/priors.hpp"
#include "preamp/sweep.hpp"
#include "preamp/transition_kernel.hpp"

namespace preamp {

struct RetrodictionReport {
  std::size_t outcome = 0;
  double fidelity = 0.0;           // F_r(outcome)
  double count_probability = 0.0;  // P(outcome) under the prior
  std::vector<double> posterior;   // over m = 0..prior cutoff
  double posterior_mean = 0.0;
};

// Count probability P(outcome) = sum_m p_m row[m].
inline double count_probability(const PriorDistribution& prior,
                                std::span<const double> row) {
  if (row.size() < prior.size()) {
    throw std::invalid_argument("kernel row shorter than prior support");
  }
  detail::KahanSum s;
  for (std::size_t m = 0; m < prior.size(); ++m) {
    s.add(prior[m] * row[m]);
  }
  return s.value();
}

inline RetrodictionReport retrodict_from_row(const PriorDistribution& prior,
                                             std::span<const double> row,
                                             std::size_t outcome) {
  prior.validate();
  const double denom = count_probability(prior, row);
  if (denom <= 0.0) {
    throw impossible_outcome_error(
        "outcome " + std::to_string(outcome) +
            " has zero probability under this prior and kernel",
        outcome);
  }
  RetrodictionReport report;
  report.outcome = outcome;
  report.count_probability = denom;
  report.posterior.resize(prior.size());
  for (std::size_t m = 0; m < prior.size(); ++m) {
    report.posterior[m] = prior[m] * row[m] / denom;
  }
  // pin the posterior sum to 1 at machine precision
  detail::KahanSum norm;
  for (double p : report.posterior) norm.add(p);
  detail::KahanSum mean;
  for (std::size_t m = 0; m < report.posterior.size(); ++m) {
    report.posterior[m] /= norm.value();
    mean.add(static_cast<double>(m) * report.posterior[m]);
  }
  report.posterior_mean = mean.value();
  report.fidelity =
      outcome < report.posterior.size() ? report.posterior[outcome] : 0.0;
  return report;
}

inline RetrodictionReport retrodict(const PriorDistribution& prior,
                                    const TransitionKernel& kernel,
                                    std::size_t outcome) {
  if (outcome >= kernel.output_dim()) {
    throw std::invalid_argument("outcome " + std::to_string(outcome) +
                                " is outside the kernel output range");
  }
  if (kernel.input_dim() < prior.size()) {
    throw std::invalid_argument(
        "kernel input dimension is smaller than the prior support");
  }
  return retrodict_from_row(prior, kernel.row(outcome), outcome);
}

// Row-based evaluation of the full chain (amplifier, attenuator, dark
// counts); avoids materializing large kernels in sweeps.
inline RetrodictionReport retrodict_chain(const PriorDistribution& prior,
                                          const DetectionChainParams& params,
                                          std::size_t outcome,
                                          const KernelLimits& limits = {}) {
  const auto row = chain_row(params, outcome, prior.size(), limits);
  return retrodict_from_row(prior, row, outcome);
}

// --- converged improper priors ----------------------------------------------

enum class PriorFamily { flat, nonzero_flat };

inline PriorDistribution make_prior(PriorFamily family, std::size_t cutoff) {
  return family == PriorFamily::flat ? flat_prior(cutoff)
                                     : nonzero_flat_prior(cutoff);
}

inline const char* family_name(PriorFamily family) {
  return family == PriorFamily::flat ? "flat" : "nonzero_flat";
}

struct ConvergencePolicy {
  std::size_t initial_cutoff = 200;
  std::size_t max_cutoff = 6400;
  double tolerance = 1e-9;  // on fidelity and posterior mean between doublings
};

struct ConvergedReport {
  RetrodictionReport report;
  std::size_t cutoff = 0;
  bool converged = false;
};

inline ConvergedReport converged_retrodict(
    PriorFamily family, const DetectionChainParams& params,
    std::size_t outcome, const ConvergencePolicy& policy = {},
    const KernelLimits& limits = {}) {
  RetrodictionReport prev =
      retrodict_chain(make_prior(family, policy.initial_cutoff), params,
                      outcome, limits);
  std::size_t cutoff = policy.initial_cutoff;
  while (cutoff * 2 <= policy.max_cutoff) {
    cutoff *= 2;
    RetrodictionReport cur =
        retrodict_chain(make_prior(family, cutoff), params, outcome, limits);
    const bool settled =
        std::abs(cur.fidelity - prev.fidelity) < policy.tolerance &&
        std::abs(cur.posterior_mean - prev.posterior_mean) <
            policy.tolerance * std::max(1.0, std::abs(cur.posterior_mean));
    prev = std::move(cur);
    if (settled) {
      return {std::move(prev), cutoff, true};
    }
  }
  return {std::move(prev), cutoff, false};
}

// Smallest cutoff in the doubling ladder at which the report is converged.
inline std::size_t converged_cutoff(PriorFamily family,
                                    const DetectionChainParams& params,
                                    std::size_t outcome,
                                    const ConvergencePolicy& policy = {},
                                    const KernelLimits& limits = {}) {
  return converged_retrodict(family, params, outcome, policy, limits).cutoff;
}

// --- count-probability cost ---------------------------------------------

// P(outcome; params) / P(outcome; eta = 1, G = 1), both with the same prior.
// truncation_tolerance caps the certified per-entry series tails (the series
// always certifies far below it).
inline double relative_count_probability(const PriorDistribution& prior,
                                         const DetectionChainParams& params,
                                         std::size_t outcome,
                                         double truncation_tolerance = 1e-12,
                                         const KernelLimits& limits = {}) {
  if (!(truncation_tolerance > 0.0)) {
    throw std::invalid_argument("truncation tolerance must be positive");
  }
  params.validate();
  prior.validate();
  const auto row = chain_row(params, outcome, prior.size(), limits);
  const DetectionChainParams perfect{1.0, 1.0, 0.0};
  const auto ref_row = chain_row(perfect, outcome, prior.size(), limits);
  const double reference = count_probability(prior, ref_row);
  if (reference <= 0.0) {
    throw zero_reference_error(
        "reference count probability P(" + std::to_string(outcome) +
        "; eta=1, G=1) is zero for this prior");
  }
  return count_probability(prior, row) / reference;
}

// --- scaling-law checks ---------------------------------------------------

struct ScalingCheck {
  double mean_with_gain = 0.0;     // outcome-0 posterior mean at (eta, G)
  double mean_without_gain = 0.0;  // same at (eta, G = 1)
};

// Converged flat prior, outcome 0: the amplifier scales the retrodicted mean
// photon number by 1/G.
inline ScalingCheck posterior_mean_scaling_check(
    double efficiency, double gain, const ConvergencePolicy& policy = {},
    const KernelLimits& limits = {}) {
  const DetectionChainParams with{gain, efficiency, 0.0};
  const DetectionChainParams without{1.0, efficiency, 0.0};
  with.validate();
  // identical prior for both: the larger of the two converged cutoffs
  const std::size_t cutoff =
      std::max(converged_cutoff(PriorFamily::flat, with, 0, policy, limits),
               converged_cutoff(PriorFamily::flat, without, 0, policy, limits));
  const PriorDistribution prior = flat_prior(cutoff);
  return {retrodict_chain(prior, with, 0, limits).posterior_mean,
          retrodict_chain(prior, without, 0, limits).posterior_mean};
}

struct DarkInvarianceCheck {
  double fidelity_with_dark = 0.0;
  double fidelity_without_dark = 0.0;
};

// F_r(0) with and without the dark-count stage; zero recorded counts imply
// zero dark counts, so the two must match to machine precision.
inline DarkInvarianceCheck dark_count_invariance_check(
    const DetectionChainParams& params, const PriorDistribution& prior,
    const KernelLimits& limits = {}) {
  return {retrodict_chain(prior, params, 0, limits).fidelity,
          retrodict_chain(prior, params.without_dark(), 0, limits).fidelity};
}

// --- one-count gain threshold --------------------------------------------
//
// The efficiency eta* above which an infinitesimal gain increase stops
// improving F_r(1) for the given prior, located by bisection on the sign of
// F_r(1; G = 1 + gain_step) - F_r(1; G = 1) between bracketing grid points.

// gain_step of 1e-3 probes the small-gain limit the claim is about.
inline double one_count_threshold(double gain_step,
                                  std::span<const double> efficiency_grid,
                                  const PriorDistribution& prior,
                                  const KernelLimits& limits = {}) {
  if (!(gain_step > 0.0)) {
    throw std::invalid_argument("gain_step must be positive");
  }
  if (efficiency_grid.size() < 2) {
    throw std::invalid_argument("efficiency grid must have >= 2 points");
  }
  const auto delta = [&](double eta) {
    const DetectionChainParams base{1.0, eta, 0.0};
    const DetectionChainParams bumped{1.0 + gain_step, eta, 0.0};
    return retrodict_chain(prior, bumped, 1, limits).fidelity -
           retrodict_chain(prior, base, 1, limits).fidelity;
  };
  double prev_eta = efficiency_grid[0];
  double prev_delta = delta(prev_eta);
  double first_delta = prev_delta;
  if (prev_delta == 0.0) return prev_eta;
  for (std::size_t i = 1; i < efficiency_grid.size(); ++i) {
    const double eta = efficiency_grid[i];
    if (eta <= prev_eta) {
      throw std::invalid_argument("efficiency grid must be increasing");
    }
    const double d = delta(eta);
    if (d == 0.0) return eta;
    if ((prev_delta > 0.0) != (d > 0.0)) {
      // bisection on [prev_eta, eta]; keep the sign of the low end at lo
      const bool low_positive = prev_delta > 0.0;
      double lo = prev_eta, hi = eta;
      for (int iter = 0; iter < 60 && hi - lo > 1e-7; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if ((delta(mid) > 0.0) == low_positive) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_eta = eta;
    prev_delta = d;
  }
  const char* verdict = (first_delta > 0.0 && prev_delta > 0.0)
                            ? "always positive"
                        : (first_delta < 0.0 && prev_delta < 0.0)
                            ? "always negative"
                            : "no bracket";
  throw no_sign_change_error(
      std::string("no sign change of the gain first-difference across the "
                  "efficiency grid (") +
          verdict + "; delta at grid ends: " + format_double(first_delta) +
          ", " + format_double(prev_delta) + ")",
      first_delta, prev_delta);
}

// --- fidelity surface -----------------------------------------------------

// One row per (eta, G), eta-major order, for a fixed prior and outcome.
// Cells run concurrently; failures land in the status column.
inline SweepResult fidelity_surface(const PriorDistribution& prior,
                                    std::size_t outcome,
                                    std::span<const double> efficiency_grid,
                                    std::span<const double> gain_grid,
                                    double truncation_tolerance = 1e-12,
                                    double dark_mean = 0.0,
                                    const KernelLimits& limits = {},
                                    unsigned max_threads = 0) {
  if (efficiency_grid.empty() || gain_grid.empty()) {
    throw std::invalid_argument("sweep grids must be non-empty");
  }
  if (!(truncation_tolerance > 0.0)) {
    throw std::invalid_argument("truncation tolerance must be positive");
  }
  prior.validate();
  for (double eta : efficiency_grid) {
    DetectionChainParams{1.0, eta, 0.0}.validate();
  }
  for (double gain : gain_grid) {
    DetectionChainParams{gain, 1.0, 0.0}.validate();
  }

  SweepResult result;
  result.columns = {"eta",  "gain",           "fidelity",
                    "count_probability", "posterior_mean", "status"};
  const std::size_t cells = efficiency_grid.size() * gain_grid.size();
  result.rows.resize(cells);

  const auto run_cell = [&](std::size_t idx) {
    const double eta = efficiency_grid[idx / gain_grid.size()];
    const double gain = gain_grid[idx % gain_grid.size()];
    auto& row = result.rows[idx];
    row = {eta, gain, std::monostate{}, std::monostate{}, std::monostate{},
           std::string("ok")};
    try {
      const DetectionChainParams params{gain, eta, dark_mean};
      const auto report = retrodict_chain(prior, params, outcome, limits);
      row[2] = report.fidelity;
      row[3] = report.count_probability;
      row[4] = report.posterior_mean;
    } catch (const std::exception& e) {
      row[5] = std::string("error: ") + e.what();
    }
  };

  unsigned threads = max_threads ? max_threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, cells));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells; ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < cells; i += threads) run_cell(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  result.add_meta("prior", prior.label);
  result.add_meta("outcome", std::to_string(outcome));
  result.add_meta("tolerance", format_double(truncation_tolerance));
  return result;
}

}  // namespace preamp
