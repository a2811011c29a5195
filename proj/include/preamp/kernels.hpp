#pragma once
/*
 * kernels.hpp — Fock-basis transition kernels of the detection chain.
 *
 * Attenuator of transmission eta (binomial loss):
 *     P(n | q) = C(q,n) eta^n (1-eta)^(q-n),             n <= q.
 *
 * Ideal phase-insensitive amplifier of gain G (shifted negative binomial):
 *     P(q | m) = C(q,m) (G-1)^(q-m) / G^(q+1),           q >= m,
 * with column mean (m+1)G - 1 and variance (m+1)(G-1)G.
 *
 * Compound chain (amplifier followed by the attenuator):
 *     P(n | m) = sum_{q >= max(n,m)} C(q,n) eta^n (1-eta)^(q-n)
 *                                    C(q,m) (G-1)^(q-m) / G^(q+1),
 * evaluated per entry by the certified mode-centred series in numeric.hpp.
 *
 * Dark counts are a separate additive Poisson kernel
 *     P(c | n) = e^-lambda lambda^(c-n) / (c-n)!,        c >= n,
 * composed after the compound kernel when lambda > 0.
 *
 * Conventions: G = 1 makes the amplifier the identity, eta in {0, 1} makes
 * the attenuator total loss / identity (0^0 = 1 throughout), so sweep grids
 * may include the endpoints.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "preamp/chain_params.hpp"
#include "preamp/errors.hpp"
#include "preamp/numeric.hpp"
#include "preamp/transition_kernel.hpp"

namespace preamp {

// Hard caps on the summation index and adaptive output dimensions. The
// defaults fail loudly long before silent under-truncation becomes possible.
struct KernelLimits {
  std::size_t q_cap = 100000;
  std::size_t output_dim_cap = 100000;
};

// Exact binomial-loss kernel. Requires output_dim >= input_dim so that no
// probability mass is lost (the attenuator never adds photons): deficit 0.
inline TransitionKernel attenuator_kernel(double efficiency,
                                          std::size_t input_dim,
                                          std::size_t output_dim) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("efficiency must be in [0, 1], got " +
                                std::to_string(efficiency));
  }
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("kernel dimensions must be positive");
  }
  if (output_dim < input_dim) {
    throw std::invalid_argument(
        "attenuator output_dim must be >= input_dim (loss never increases "
        "photon number)");
  }
  std::vector<double> entries(output_dim * input_dim, 0.0);
  std::vector<double> column(output_dim);
  for (std::size_t q = 0; q < input_dim; ++q) {
    detail::binomial_column(q, efficiency, column.data(), output_dim);
    for (std::size_t n = 0; n < output_dim; ++n) {
      entries[n * input_dim + q] = column[n];
    }
  }
  return TransitionKernel(output_dim, input_dim, std::move(entries),
                          std::vector<double>(input_dim, 0.0), 0.0);
}

inline TransitionKernel identity_kernel(std::size_t dim) {
  return attenuator_kernel(1.0, dim, dim);
}

// Amplifier kernel with adaptively chosen output dimension: the smallest
// number of rows for which every column's certified tail is <= tolerance.
inline TransitionKernel amplifier_kernel(double gain, std::size_t input_dim,
                                         double truncation_tolerance,
                                         const KernelLimits& limits = {}) {
  if (!(gain >= 1.0)) {
    throw std::invalid_argument("gain must be >= 1, got " +
                                std::to_string(gain));
  }
  if (input_dim == 0) {
    throw std::invalid_argument("kernel dimensions must be positive");
  }
  if (!(truncation_tolerance > 0.0)) {
    throw std::invalid_argument("truncation tolerance must be positive");
  }
  std::size_t output_dim = input_dim;  // gain 1: identity
  if (gain > 1.0) {
    for (std::size_t m = 0; m < input_dim; ++m) {
      output_dim = std::max(
          output_dim, detail::amp_required_dim(gain, m, truncation_tolerance,
                                               limits.output_dim_cap));
    }
  }
  std::vector<double> entries(output_dim * input_dim, 0.0);
  std::vector<double> column(output_dim);
  for (std::size_t m = 0; m < input_dim; ++m) {
    detail::amp_column(gain, m, column.data(), output_dim);
    for (std::size_t q = 0; q < output_dim; ++q) {
      entries[q * input_dim + m] = column[q];
    }
  }
  return TransitionKernel(output_dim, input_dim, std::move(entries),
                          truncation_tolerance);
}

// Single compound-chain entry P(n | m); dark counts are not part of the
// compound chain. Certified to ~1e-18 relative (see numeric.hpp).
inline double compound_entry(double gain, double efficiency, std::size_t n,
                             std::size_t m, const KernelLimits& limits = {}) {
  if (gain <= 1.0) return detail::binomial_pmf(n, m, efficiency);
  if (efficiency >= 1.0) {
    // attenuator is the identity: amplifier pmf
    if (n < m) return 0.0;
    const double lp = detail::amp_log_pmf(n, m, gain);
    return lp < detail::kLogFloor ? 0.0 : std::exp(lp);
  }
  if (efficiency <= 0.0) return n == 0 ? 1.0 : 0.0;  // every photon is lost
  return detail::compound_series(n, m, efficiency, gain, limits.q_cap);
}

// Row `outcome` of the compound kernel: P(outcome | m) for m = 0..input_dim-1.
inline std::vector<double> compound_row(double gain, double efficiency,
                                        std::size_t outcome,
                                        std::size_t input_dim,
                                        const KernelLimits& limits = {}) {
  std::vector<double> row(input_dim);
  for (std::size_t m = 0; m < input_dim; ++m) {
    row[m] = compound_entry(gain, efficiency, outcome, m, limits);
  }
  return row;
}

// Column m of the compound kernel over n = 0..out_dim-1. The attenuator only
// removes photons, so the amplifier's certified output dimension bounds the
// compound one; with out_dim = 0 that bound is used.
inline std::vector<double> compound_column(double gain, double efficiency,
                                           std::size_t m, double tolerance,
                                           std::size_t out_dim = 0,
                                           const KernelLimits& limits = {}) {
  if (out_dim == 0) {
    out_dim = gain > 1.0 ? detail::amp_required_dim(gain, m, tolerance,
                                                    limits.output_dim_cap)
                         : m + 1;
  }
  std::vector<double> column(out_dim);
  for (std::size_t n = 0; n < out_dim; ++n) {
    column[n] = compound_entry(gain, efficiency, n, m, limits);
  }
  return column;
}

// Output dimension sufficient for every compound column of the given input
// range to have tail <= tolerance.
inline std::size_t compound_output_dim_bound(double gain,
                                             std::size_t input_dim,
                                             double tolerance,
                                             const KernelLimits& limits = {}) {
  if (gain <= 1.0) return input_dim;
  std::size_t dim = 1;
  for (std::size_t m = 0; m < input_dim; ++m) {
    dim = std::max(dim, detail::amp_required_dim(gain, m, tolerance,
                                                 limits.output_dim_cap));
  }
  return dim;
}

// Direct-summation compound kernel (Eq. (3) contraction done per entry).
// params.dark_mean is deliberately ignored here; see dark_count_kernel.
inline TransitionKernel compound_kernel(const DetectionChainParams& params,
                                        std::size_t input_dim,
                                        std::size_t output_dim,
                                        double truncation_tolerance,
                                        ColumnPolicy policy =
                                            ColumnPolicy::strict,
                                        const KernelLimits& limits = {}) {
  params.validate();
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("kernel dimensions must be positive");
  }
  if (!(truncation_tolerance > 0.0)) {
    throw std::invalid_argument("truncation tolerance must be positive");
  }
  std::vector<double> entries(output_dim * input_dim, 0.0);
  for (std::size_t n = 0; n < output_dim; ++n) {
    for (std::size_t m = 0; m < input_dim; ++m) {
      entries[n * input_dim + m] =
          compound_entry(params.gain, params.efficiency, n, m, limits);
    }
  }
  return TransitionKernel(output_dim, input_dim, std::move(entries),
                          truncation_tolerance, policy);
}

// Additive Poisson dark-count kernel: P(c | n) = e^-lambda lambda^(c-n)/(c-n)!
// for c >= n. Output dimension adapts so every column tail is <= tolerance.
inline TransitionKernel dark_count_kernel(double dark_mean,
                                          std::size_t input_dim,
                                          double truncation_tolerance,
                                          const KernelLimits& limits = {}) {
  if (!(dark_mean >= 0.0)) {
    throw std::invalid_argument("dark_mean must be >= 0, got " +
                                std::to_string(dark_mean));
  }
  if (input_dim == 0) {
    throw std::invalid_argument("kernel dimensions must be positive");
  }
  if (!(truncation_tolerance > 0.0)) {
    throw std::invalid_argument("truncation tolerance must be positive");
  }
  const std::vector<double> pois = detail::poisson_pmf_prefix(
      dark_mean, truncation_tolerance, limits.output_dim_cap);
  const std::size_t output_dim = input_dim + pois.size() - 1;
  std::vector<double> entries(output_dim * input_dim, 0.0);
  for (std::size_t n = 0; n < input_dim; ++n) {
    for (std::size_t k = 0; k < pois.size(); ++k) {
      entries[(n + k) * input_dim + n] = pois[k];
    }
  }
  return TransitionKernel(output_dim, input_dim, std::move(entries),
                          truncation_tolerance);
}

// Chained stochastic maps as a matrix product. Deficits propagate exactly:
//   deficit(m) = inner_deficit(m) + sum_q outer_deficit(q) * inner(q, m).
inline TransitionKernel compose(const TransitionKernel& outer,
                                const TransitionKernel& inner) {
  if (inner.output_dim() != outer.input_dim()) {
    throw std::invalid_argument(
        "compose: inner output dimension " +
        std::to_string(inner.output_dim()) +
        " does not match outer input dimension " +
        std::to_string(outer.input_dim()));
  }
  const std::size_t out = outer.output_dim();
  const std::size_t mid = outer.input_dim();
  const std::size_t in = inner.input_dim();
  std::vector<double> entries(out * in, 0.0);
  for (std::size_t n = 0; n < out; ++n) {
    const auto orow = outer.row(n);
    for (std::size_t q = 0; q < mid; ++q) {
      const double o = orow[q];
      if (o == 0.0) continue;
      const auto irow = inner.row(q);
      double* dst = entries.data() + n * in;
      for (std::size_t m = 0; m < in; ++m) {
        dst[m] += o * irow[m];
      }
    }
  }
  std::vector<double> deficits(in, 0.0);
  for (std::size_t m = 0; m < in; ++m) {
    detail::KahanSum d;
    d.add(inner.column_deficit(m));
    for (std::size_t q = 0; q < mid; ++q) {
      d.add(outer.column_deficit(q) * inner(q, m));
    }
    deficits[m] = std::min(1.0, std::max(0.0, d.value()));
  }
  const ColumnPolicy policy =
      (outer.policy() == ColumnPolicy::strict &&
       inner.policy() == ColumnPolicy::strict)
          ? ColumnPolicy::strict
          : ColumnPolicy::truncated_block;
  return TransitionKernel(
      out, in, std::move(entries), std::move(deficits),
      outer.truncation_tolerance() + inner.truncation_tolerance(), policy);
}

// Row `outcome` of the full chain including dark counts:
//   P_rec(c | m) = sum_{j <= c} Poisson(c - j; lambda) P(j | m).
inline std::vector<double> chain_row(const DetectionChainParams& params,
                                     std::size_t outcome,
                                     std::size_t input_dim,
                                     const KernelLimits& limits = {}) {
  params.validate();
  if (!params.has_dark_counts()) {
    return compound_row(params.gain, params.efficiency, outcome, input_dim,
                        limits);
  }
  std::vector<double> row(input_dim, 0.0);
  double pois = std::exp(-params.dark_mean);  // Poisson(outcome - j) at j=outcome
  for (std::size_t back = 0; back <= outcome; ++back) {
    const std::size_t j = outcome - back;
    if (pois > 0.0) {
      const auto base =
          compound_row(params.gain, params.efficiency, j, input_dim, limits);
      for (std::size_t m = 0; m < input_dim; ++m) {
        row[m] += pois * base[m];
      }
    }
    pois *= params.dark_mean / static_cast<double>(back + 1);
  }
  return row;
}

}  // namespace preamp
