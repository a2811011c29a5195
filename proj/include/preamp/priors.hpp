#pragma once
/*
 * priors.hpp — prior photon-number distributions for the measurement arm.
 *
 * Built-in shapes:
 *   flat_prior(cutoff)            p_m = 1/(cutoff+1), m = 0..cutoff
 *   two_photon_generator_prior()  (1/2, 0, 1/2)
 *   nonzero_flat_prior(cutoff)    p_0 = 0, p_m = 1/cutoff, m = 1..cutoff
 *
 * plus user-supplied vectors and one-probability-per-line text files
 * ('#' starts a comment). Everything is normalized on construction.
 */

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "preamp/errors.hpp"
#include "preamp/numeric.hpp"

namespace preamp {

struct PriorDistribution {
  std::vector<double> probabilities;  // index m = photon number
  std::string label;
  // |sum(raw) - 1| seen by prior_from_values before normalizing; a value
  // above 1e-9 is worth a warning on user-supplied input.
  double normalization_shift = 0.0;

  std::size_t size() const { return probabilities.size(); }
  double operator[](std::size_t m) const { return probabilities[m]; }
  double at_or_zero(std::size_t m) const {
    return m < probabilities.size() ? probabilities[m] : 0.0;
  }
  bool renormalization_warning() const { return normalization_shift > 1e-9; }

  void validate() const {
    if (probabilities.empty()) {
      throw std::invalid_argument("prior must have at least one entry");
    }
    detail::KahanSum s;
    for (double p : probabilities) {
      if (!std::isfinite(p) || p < 0.0) {
        throw std::invalid_argument("prior entries must be finite and >= 0");
      }
      s.add(p);
    }
    if (std::abs(s.value() - 1.0) > 1e-12) {
      throw std::invalid_argument("prior is not normalized: sum = " +
                                  std::to_string(s.value()));
    }
  }
};

namespace detail {

inline PriorDistribution normalized_prior(std::vector<double> values,
                                          std::string label) {
  KahanSum s;
  for (double v : values) s.add(v);
  const double total = s.value();
  for (double& v : values) v /= total;
  // one more pass pins the Kahan sum to 1 to machine precision
  KahanSum s2;
  for (double v : values) s2.add(v);
  const double total2 = s2.value();
  for (double& v : values) v /= total2;
  PriorDistribution prior{std::move(values), std::move(label),
                          std::abs(total - 1.0)};
  prior.validate();
  return prior;
}

}  // namespace detail

inline PriorDistribution flat_prior(std::size_t cutoff) {
  std::vector<double> p(cutoff + 1, 1.0);
  return detail::normalized_prior(std::move(p),
                                  "flat(cutoff=" + std::to_string(cutoff) +
                                      ")");
}

inline PriorDistribution two_photon_generator_prior() {
  return detail::normalized_prior({0.5, 0.0, 0.5}, "two_photon");
}

inline PriorDistribution nonzero_flat_prior(std::size_t cutoff) {
  if (cutoff == 0) {
    throw std::invalid_argument("nonzero_flat_prior requires cutoff >= 1");
  }
  std::vector<double> p(cutoff + 1, 1.0);
  p[0] = 0.0;
  return detail::normalized_prior(
      std::move(p), "nonzero_flat(cutoff=" + std::to_string(cutoff) + ")");
}

inline PriorDistribution prior_from_values(std::vector<double> values,
                                           std::string label = "custom") {
  if (values.empty()) {
    throw std::invalid_argument("prior must have at least one entry");
  }
  double total = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("prior entry is not finite");
    }
    if (v < 0.0) {
      throw std::invalid_argument("prior entry is negative: " +
                                  std::to_string(v));
    }
    total += v;
  }
  if (total <= 0.0) {
    throw std::invalid_argument("prior entries sum to zero");
  }
  return detail::normalized_prior(std::move(values), std::move(label));
}

// One probability per line; blank lines and '#' comments ignored.
inline PriorDistribution load_prior_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open prior file: " + path);
  }
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    if (ls >> v) {
      values.push_back(v);
      std::string rest;
      if (ls >> rest) {
        throw io_error("prior file " + path + " line " +
                       std::to_string(lineno) + ": trailing content");
      }
    } else {
      std::string rest;
      ls.clear();
      if (ls >> rest) {
        throw io_error("prior file " + path + " line " +
                       std::to_string(lineno) + ": not a number");
      }
    }
  }
  if (values.empty()) {
    throw io_error("prior file " + path + " contains no values");
  }
  return prior_from_values(std::move(values), "file:" + path);
}

}  // namespace preamp
