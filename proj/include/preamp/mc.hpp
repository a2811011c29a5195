#pragma once
/*
 * mc.hpp — independent Monte Carlo simulation of the physical chain, used to
 * cross-validate the analytic kernels and fidelities.
 *
 * The sampling path deliberately shares no code with the analytic kernels:
 *
 *   amplifier  photon-birth process: Bernoulli trials with success
 *              probability (G-1)/G, counted until m+1 failures occur;
 *              output q = m + #successes. This realizes
 *              P(q|m) = C(q,m) (G-1)^(q-m) / G^(q+1) without ever
 *              evaluating it.
 *   detector   q Bernoulli(eta) survival trials.
 *   dark       Knuth Poisson sampler (product of uniforms vs e^-lambda).
 *
 * RNG: SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom number
 * generators", 2014). A run with seed s partitions its trials into fixed
 * blocks of 65536; partition p draws from the stream with initial state
 * mix64(s) ^ mix64(0x9E3779B97F4A7C15 * (p + 1)), so histograms are
 * bit-identical for a given (seed, trials) regardless of thread count.
 *
 * Shortcut conventions (they change which uniforms are consumed, so they are
 * part of the reproducibility contract): G = 1 draws nothing and returns m;
 * eta = 1 returns q and eta = 0 returns 0 without drawing; lambda = 0 adds
 * nothing without drawing.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "preamp/chain_params.hpp"
#include "preamp/errors.hpp"
#include "preamp/kernels.hpp"
#include "preamp/priors.hpp"

namespace preamp::mc {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kPartitionTrials = 65536;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct SplitMix64 {
  std::uint64_t state = 0;

  std::uint64_t next() {
    state += kGolden;
    return mix64(state);
  }

  // uniform in [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }
};

inline SplitMix64 partition_stream(std::uint64_t seed,
                                   std::uint64_t partition) {
  return SplitMix64{mix64(seed) ^ mix64(kGolden * (partition + 1))};
}

// --- elementary samplers ----------------------------------------------------

// Amplifier output q for input m: photon-birth Bernoulli process.
inline std::size_t draw_amplifier_output(SplitMix64& rng, std::size_t m,
                                         double gain) {
  if (gain <= 1.0) return m;
  const double birth = (gain - 1.0) / gain;
  std::size_t births = 0;
  std::size_t deaths = 0;
  while (deaths < m + 1) {
    if (rng.bernoulli(birth)) {
      ++births;
    } else {
      ++deaths;
    }
  }
  return m + births;
}

// Binomial thinning: survivors of q photons through transmission eta.
inline std::size_t draw_binomial_thinning(SplitMix64& rng, std::size_t q,
                                          double eta) {
  if (eta >= 1.0) return q;
  if (eta <= 0.0) return 0;
  std::size_t survivors = 0;
  for (std::size_t i = 0; i < q; ++i) {
    if (rng.bernoulli(eta)) ++survivors;
  }
  return survivors;
}

// Knuth Poisson sampler.
inline std::size_t draw_poisson(SplitMix64& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  std::size_t k = 0;
  double product = 1.0;
  do {
    ++k;
    product *= rng.uniform01();
  } while (product > limit);
  return k - 1;
}

inline std::size_t draw_chain_count(SplitMix64& rng,
                                    const DetectionChainParams& params,
                                    std::size_t input_photons) {
  const std::size_t q = draw_amplifier_output(rng, input_photons, params.gain);
  const std::size_t n = draw_binomial_thinning(rng, q, params.efficiency);
  return n + draw_poisson(rng, params.dark_mean);
}

// --- histograms and runs ----------------------------------------------------

struct SampleConfig {
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  DetectionChainParams params{};
  unsigned max_threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (trials < 1) {
      throw std::invalid_argument("trials must be >= 1");
    }
    params.validate();
  }
};

struct CountHistogram {
  std::vector<std::uint64_t> tallies;  // index = count
  std::uint64_t trials = 0;

  std::vector<double> frequencies() const {
    std::vector<double> f(tallies.size());
    for (std::size_t i = 0; i < tallies.size(); ++i) {
      f[i] = static_cast<double>(tallies[i]) / static_cast<double>(trials);
    }
    return f;
  }

  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < tallies.size(); ++i) {
      s += static_cast<double>(i) * static_cast<double>(tallies[i]);
    }
    return s / static_cast<double>(trials);
  }

  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < tallies.size(); ++i) {
      const double d = static_cast<double>(i) - mu;
      s += d * d * static_cast<double>(tallies[i]);
    }
    return s / static_cast<double>(trials);
  }

  // count, tally, frequency
  void write_csv(std::ostream& out) const {
    out << "count,tally,frequency\n";
    const auto freq = frequencies();
    for (std::size_t i = 0; i < tallies.size(); ++i) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", freq[i]);
      out << i << ',' << tallies[i] << ',' << buf << '\n';
    }
  }
};

namespace detail {

// Runs `per_trial(rng)` for every trial, tallying its value. Partitions are
// fixed blocks with independent streams; merging is pure addition, so the
// result does not depend on thread scheduling.
template <typename PerTrial>
CountHistogram run_partitioned(std::uint64_t trials, std::uint64_t seed,
                               unsigned max_threads, PerTrial per_trial) {
  const std::uint64_t partitions =
      (trials + kPartitionTrials - 1) / kPartitionTrials;
  CountHistogram merged;
  merged.trials = trials;
  std::mutex merge_mutex;
  std::atomic<std::uint64_t> next_partition{0};

  const auto worker = [&] {
    std::vector<std::uint64_t> local;
    for (;;) {
      const std::uint64_t p = next_partition.fetch_add(1);
      if (p >= partitions) break;
      auto rng = partition_stream(seed, p);
      const std::uint64_t begin = p * kPartitionTrials;
      const std::uint64_t end = std::min(trials, begin + kPartitionTrials);
      for (std::uint64_t t = begin; t < end; ++t) {
        const std::size_t value = per_trial(rng);
        if (value >= local.size()) local.resize(value + 1, 0);
        ++local[value];
      }
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    if (local.size() > merged.tallies.size()) {
      merged.tallies.resize(local.size(), 0);
    }
    for (std::size_t i = 0; i < local.size(); ++i) {
      merged.tallies[i] += local[i];
    }
  };

  unsigned threads =
      max_threads ? max_threads
                  : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, partitions));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (merged.tallies.empty()) merged.tallies.resize(1, 0);
  return merged;
}

}  // namespace detail

// Empirical count distribution of the full chain for a fixed photon input.
inline CountHistogram sample_chain(const SampleConfig& config,
                                   std::size_t input_photons) {
  config.validate();
  return detail::run_partitioned(
      config.trials, config.seed, config.max_threads, [&](SplitMix64& rng) {
        return draw_chain_count(rng, config.params, input_photons);
      });
}

// Amplifier stage alone (for sampler moment checks: mean (m+1)(G-1) + m,
// variance (m+1)(G-1)G of the output).
inline CountHistogram sample_amplifier_outputs(const SampleConfig& config,
                                               std::size_t input_photons) {
  config.validate();
  return detail::run_partitioned(
      config.trials, config.seed, config.max_threads, [&](SplitMix64& rng) {
        return draw_amplifier_output(rng, input_photons, config.params.gain);
      });
}

inline CountHistogram sample_poisson(std::uint64_t trials, std::uint64_t seed,
                                     double lambda, unsigned max_threads = 0) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  return detail::run_partitioned(trials, seed, max_threads,
                                 [&](SplitMix64& rng) {
                                   return draw_poisson(rng, lambda);
                                 });
}

// --- acceptance-rejection retrodiction --------------------------------------

struct RetrodictionSample {
  std::vector<std::uint64_t> kept_by_photon_number;  // index m
  std::uint64_t kept = 0;
  std::uint64_t trials = 0;

  double acceptance_rate() const {
    return static_cast<double>(kept) / static_cast<double>(trials);
  }

  std::vector<double> posterior() const {
    std::vector<double> p(kept_by_photon_number.size());
    for (std::size_t m = 0; m < p.size(); ++m) {
      p[m] = static_cast<double>(kept_by_photon_number[m]) /
             static_cast<double>(kept);
    }
    return p;
  }

  double empirical_fidelity(std::size_t outcome) const {
    return outcome < kept_by_photon_number.size()
               ? static_cast<double>(kept_by_photon_number[outcome]) /
                     static_cast<double>(kept)
               : 0.0;
  }
};

// Draw m from the prior, simulate the chain, keep trials whose recorded count
// equals `outcome`, and histogram the kept m.
inline RetrodictionSample sample_retrodiction(const SampleConfig& config,
                                              const PriorDistribution& prior,
                                              std::size_t outcome) {
  config.validate();
  prior.validate();
  std::vector<double> cdf(prior.size());
  double acc = 0.0;
  for (std::size_t m = 0; m < prior.size(); ++m) {
    acc += prior[m];
    cdf[m] = acc;
  }
  cdf.back() = 1.0;

  // kept trials are tallied at m, rejected ones at prior.size()
  const std::size_t reject_slot = prior.size();
  const auto hist = detail::run_partitioned(
      config.trials, config.seed, config.max_threads, [&](SplitMix64& rng) {
        const double u = rng.uniform01();
        const std::size_t m = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const std::size_t count = draw_chain_count(rng, config.params, m);
        return count == outcome ? m : reject_slot;
      });

  RetrodictionSample sample;
  sample.trials = config.trials;
  sample.kept_by_photon_number.assign(prior.size(), 0);
  for (std::size_t m = 0; m < prior.size() && m < hist.tallies.size(); ++m) {
    sample.kept_by_photon_number[m] = hist.tallies[m];
    sample.kept += hist.tallies[m];
  }
  if (sample.kept == 0) {
    // analytic acceptance estimate, for the diagnostic only
    double expected = 0.0;
    try {
      const auto row = chain_row(config.params, outcome, prior.size());
      for (std::size_t m = 0; m < prior.size(); ++m) {
        expected += prior[m] * row[m];
      }
    } catch (const std::exception&) {
      expected = -1.0;  // estimate unavailable
    }
    throw zero_acceptance_error(
        "no trial produced outcome " + std::to_string(outcome) + " in " +
            std::to_string(config.trials) +
            " trials (expected acceptance ~" + std::to_string(expected) + ")",
        expected);
  }
  return sample;
}

}  // namespace preamp::mc
