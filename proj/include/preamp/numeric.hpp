#pragma once
/*
 * numeric.hpp — numerically safe building blocks for the kernel constructors:
 * compensated summation, log-domain binomials, and mode-centred evaluation of
 * the binomial / negative-binomial / compound photon-count series.
 *
 * Every series summed here has nonnegative terms whose successive ratio
 * decreases monotonically in the summation index, so a geometric majorant
 * anchored at the last evaluated term certifies the neglected tail. Each
 * series places exactly one log-gamma evaluation (at the mode); every other
 * term follows by exact ratio recurrences, which keeps both overflow and
 * error accumulation out of the picture even for gains and photon numbers
 * where the raw terms span hundreds of orders of magnitude.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "preamp/errors.hpp"

namespace preamp::detail {

// Relative tail certification applied inside every series; far below any
// user-facing tolerance, so per-entry accuracy is limited by double rounding.
inline constexpr double kSeriesRelTail = 1e-18;

// log-domain values below this produce entries < ~1e-290; returned as 0.
inline constexpr double kLogFloor = -668.0;

// Kahan–Neumaier compensated accumulator.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

inline double log_factorial(std::size_t n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

// log C(n, k); -inf for k > n.
inline double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// Binomial(n, p) probability of k successes. Exact at p in {0, 1}.
inline double binomial_pmf(std::size_t k, std::size_t n, double p) {
  if (k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  const double lp = log_binomial(n, k) + static_cast<double>(k) * std::log(p) +
                    static_cast<double>(n - k) * std::log1p(-p);
  return lp < kLogFloor ? 0.0 : std::exp(lp);
}

// Fill out[0..n] with the Binomial(n, p) pmf by a mode-centred ratio
// recurrence: pmf(k+1)/pmf(k) = ((n-k)/(k+1)) * (p/(1-p)).
inline void binomial_column(std::size_t n, double p, double* out,
                            std::size_t out_len) {
  const std::size_t len = std::min(out_len, n + 1);
  std::fill(out, out + out_len, 0.0);
  if (p <= 0.0) {
    out[0] = 1.0;
    return;
  }
  if (p >= 1.0) {
    if (n < out_len) out[n] = 1.0;
    return;
  }
  std::size_t mode = static_cast<std::size_t>(
      std::min(static_cast<double>(n), std::floor((n + 1) * p)));
  const double odds = p / (1.0 - p);
  const double lmode = log_binomial(n, mode) + mode * std::log(p) +
                       static_cast<double>(n - mode) * std::log1p(-p);
  const double pmode = std::exp(lmode);
  if (mode < out_len) out[mode] = pmode;
  double w = pmode;
  for (std::size_t k = mode; k > 0; --k) {
    // downward: pmf(k-1) = pmf(k) * k / ((n-k+1) * odds)
    w *= static_cast<double>(k) / (static_cast<double>(n - k + 1) * odds);
    if (k - 1 < out_len) out[k - 1] = w;
    if (w == 0.0) break;
  }
  w = pmode;
  for (std::size_t k = mode; k + 1 < len; ++k) {
    w *= static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
    out[k + 1] = w;
    if (w == 0.0) break;
  }
  if (len == n + 1) {
    // full support stored: normalizing by the computed sum removes the
    // log-gamma scale error, which grows past 1e-12 for n in the hundreds
    KahanSum sum;
    for (std::size_t k = 0; k < len; ++k) sum.add(out[k]);
    const double total = sum.value();
    for (std::size_t k = 0; k < len; ++k) out[k] /= total;
  }
}

// Poisson(lambda) pmf prefix p_0..p_K, extended until the certified tail
// beyond K is <= tol (ratio lambda/(j+1) is decreasing, so once < 1 the
// remaining mass is bounded by p_K * r/(1-r)).
inline std::vector<double> poisson_pmf_prefix(double lambda, double tol,
                                              std::size_t cap) {
  std::vector<double> pmf;
  if (lambda <= 0.0) {
    pmf.push_back(1.0);
    return pmf;
  }
  double w = std::exp(-lambda);
  pmf.push_back(w);
  for (std::size_t j = 0;; ++j) {
    const double r = lambda / static_cast<double>(j + 1);
    if (r < 1.0 && w * r / (1.0 - r) <= 0.5 * tol) break;
    if (pmf.size() >= cap) {
      throw truncation_error(
          "poisson tail does not reach tolerance within cap " +
              std::to_string(cap),
          cap + static_cast<std::size_t>(4.0 * lambda) + 64, w);
    }
    w *= r;
    pmf.push_back(w);
  }
  return pmf;
}

// --- amplifier output series -----------------------------------------------
//
// Column m of the ideal amplifier: P(q | m) = C(q,m) (G-1)^(q-m) / G^(q+1),
// q >= m. Successive ratio r(q) = ((q+1)/(q+1-m)) * (G-1)/G decreases toward
// (G-1)/G, with mode at q = max(m, floor(m*G - 1)).

inline double amp_log_pmf(std::size_t q, std::size_t m, double gain) {
  return log_binomial(q, m) +
         static_cast<double>(q - m) * std::log(gain - 1.0) -
         static_cast<double>(q + 1) * std::log(gain);
}

inline double amp_ratio(std::size_t q, std::size_t m, double gain) {
  return static_cast<double>(q + 1) / static_cast<double>(q + 1 - m) *
         (gain - 1.0) / gain;
}

// Smallest output dimension N such that the certified amplifier tail beyond
// N-1 for input column m is <= tol/2 (the other half of the budget absorbs
// column-sum roundoff when deficits are recomputed as 1 - column sum).
// Throws truncation_error past dim_cap.
inline std::size_t amp_required_dim(double gain, std::size_t m, double tol,
                                    std::size_t dim_cap) {
  if (gain <= 1.0) return m + 1;
  const std::size_t mode =
      std::max(m, static_cast<std::size_t>(std::max(
                      0.0, std::floor(m * gain - 1.0))));
  double w = std::exp(amp_log_pmf(mode, m, gain));
  std::size_t q = mode;
  while (true) {
    const double r = amp_ratio(q, m, gain);
    if (r < 1.0 && w * r / (1.0 - r) <= 0.5 * tol) return q + 1;
    if (q + 1 >= dim_cap) {
      // geometric extrapolation at the limiting ratio (G-1)/G
      const double rinf = (gain - 1.0) / gain;
      const double need =
          std::log(std::max(tol, 1e-300) / std::max(w, 1e-300)) /
          std::log(rinf);
      throw truncation_error(
          "amplifier column m=" + std::to_string(m) +
              " cannot reach tolerance within output-dimension cap " +
              std::to_string(dim_cap),
          q + 1 + static_cast<std::size_t>(std::max(0.0, need)) + 1, w);
    }
    w *= r;
    ++q;
  }
}

// Fill out[0..out_len) with P(q | m) for q = 0..out_len-1.
inline void amp_column(double gain, std::size_t m, double* out,
                       std::size_t out_len) {
  std::fill(out, out + out_len, 0.0);
  if (gain <= 1.0) {
    if (m < out_len) out[m] = 1.0;
    return;
  }
  if (m >= out_len) return;
  const std::size_t mode = std::min(
      out_len - 1, std::max(m, static_cast<std::size_t>(std::max(
                                   0.0, std::floor(m * gain - 1.0)))));
  const double pmode = std::exp(amp_log_pmf(mode, m, gain));
  out[mode] = pmode;
  double w = pmode;
  for (std::size_t q = mode; q > m; --q) {
    w /= amp_ratio(q - 1, m, gain);
    out[q - 1] = w;
    if (w == 0.0) break;
  }
  w = pmode;
  for (std::size_t q = mode; q + 1 < out_len; ++q) {
    w *= amp_ratio(q, m, gain);
    out[q + 1] = w;
    if (w == 0.0) break;
  }
}

// --- compound chain series --------------------------------------------------
//
// P(n | m) = sum_{q >= max(n,m)} t(q) with
//   t(q) = C(q,n) eta^n (1-eta)^(q-n) C(q,m) (G-1)^(q-m) / G^(q+1).
// Successive ratio
//   r(q) = (q+1)^2 / ((q+1-n)(q+1-m)) * x,   x = (1-eta)(G-1)/G < 1,
// decreases monotonically toward x, so the series has a single mode and a
// certified geometric tail.

inline double log_compound_term(std::size_t q, std::size_t n, std::size_t m,
                                double eta, double gain) {
  return log_binomial(q, n) + static_cast<double>(n) * std::log(eta) +
         static_cast<double>(q - n) * std::log1p(-eta) + log_binomial(q, m) +
         static_cast<double>(q - m) * std::log(gain - 1.0) -
         static_cast<double>(q + 1) * std::log(gain);
}

// Linear-domain term, for the exact-rational agreement checks. Requires
// 0 < eta < 1 and gain > 1 (edge cases never reach the series path).
inline double compound_term(std::size_t q, std::size_t n, std::size_t m,
                            double eta, double gain) {
  if (q < n || q < m) return 0.0;
  return std::exp(log_compound_term(q, n, m, eta, gain));
}

inline double compound_ratio(std::size_t q, std::size_t n, std::size_t m,
                             double x) {
  const double u = static_cast<double>(q + 1);
  return u * u / ((u - static_cast<double>(n)) * (u - static_cast<double>(m))) *
         x;
}

// Certified evaluation of P(n | m) for the compound chain, 0 < eta < 1,
// gain > 1. q_cap bounds the summation index.
inline double compound_series(std::size_t n, std::size_t m, double eta,
                              double gain, std::size_t q_cap) {
  const double x = (1.0 - eta) * (gain - 1.0) / gain;
  const std::size_t qlo = std::max(n, m);
  // last index with nondecreasing terms: largest u = q+1 with
  // (1-x) u^2 - (n+m) u + n m <= 0
  const double a = 1.0 - x;
  const double s = static_cast<double>(n + m);
  const double disc =
      s * s - 4.0 * a * static_cast<double>(n) * static_cast<double>(m);
  const double uplus = (s + std::sqrt(std::max(0.0, disc))) / (2.0 * a);
  std::size_t qmode = qlo;
  if (uplus > static_cast<double>(qlo) + 1.0) {
    qmode = std::max(qlo, static_cast<std::size_t>(uplus) - 1);
  }
  if (qmode >= q_cap) {
    throw truncation_error("compound series mode beyond q-cap " +
                               std::to_string(q_cap),
                           qmode + 1, 0.0);
  }
  const double logmode = log_compound_term(qmode, n, m, eta, gain);
  if (logmode < kLogFloor) return 0.0;  // entry below ~1e-290

  KahanSum rel;
  rel.add(1.0);
  // downward sweep: remaining mass below q bounded by w * (q - qlo)
  double w = 1.0;
  for (std::size_t q = qmode; q > qlo; --q) {
    w /= compound_ratio(q - 1, n, m, x);
    rel.add(w);
    if (w * static_cast<double>(q - 1 - qlo) < kSeriesRelTail * rel.sum) break;
  }
  // upward sweep with geometric-majorant stop
  w = 1.0;
  std::size_t q = qmode;
  while (true) {
    const double r = compound_ratio(q, n, m, x);
    if (r < 1.0 && w * r / (1.0 - r) < kSeriesRelTail * rel.sum) break;
    if (q + 1 >= q_cap) {
      throw truncation_error(
          "compound series for entry (n=" + std::to_string(n) +
              ", m=" + std::to_string(m) + ") did not converge within q-cap " +
              std::to_string(q_cap),
          q + 2, w * std::exp(logmode));
    }
    w *= r;
    rel.add(w);
    ++q;
  }
  return std::exp(logmode + std::log(rel.value()));
}

}  // namespace preamp::detail
