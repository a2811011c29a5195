#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace preamp {

// Requested truncation tolerance cannot be met within the configured caps.
// Carries an estimate of the dimension that would have been needed.
class truncation_error : public std::runtime_error {
 public:
  truncation_error(const std::string& what, std::size_t required_dim_estimate,
                   double last_term)
      : std::runtime_error(what),
        required_dim_estimate_(required_dim_estimate),
        last_term_(last_term) {}

  std::size_t required_dim_estimate() const { return required_dim_estimate_; }
  double last_term() const { return last_term_; }

 private:
  std::size_t required_dim_estimate_;
  double last_term_;
};

// The Bayes denominator vanished: the requested count outcome has zero
// probability under the given prior and kernel. Reported as its own type so
// model inconsistency is distinguishable from genuine zero confidence.
class impossible_outcome_error : public std::runtime_error {
 public:
  impossible_outcome_error(const std::string& what, std::size_t outcome)
      : std::runtime_error(what), outcome_(outcome) {}

  std::size_t outcome() const { return outcome_; }

 private:
  std::size_t outcome_;
};

// Reference count probability P(outcome; eta=1, G=1) is zero, so a relative
// probability is undefined.
class zero_reference_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The gain first-difference of the fidelity kept one sign over the whole
// efficiency grid; there is no threshold to bracket.
class no_sign_change_error : public std::runtime_error {
 public:
  no_sign_change_error(const std::string& what, double delta_at_min,
                       double delta_at_max)
      : std::runtime_error(what),
        delta_at_min_(delta_at_min),
        delta_at_max_(delta_at_max) {}

  double delta_at_min() const { return delta_at_min_; }
  double delta_at_max() const { return delta_at_max_; }
  bool always_positive() const {
    return delta_at_min_ > 0.0 && delta_at_max_ > 0.0;
  }
  bool always_negative() const {
    return delta_at_min_ < 0.0 && delta_at_max_ < 0.0;
  }

 private:
  double delta_at_min_;
  double delta_at_max_;
};

// No simulated trial produced the requested outcome. Carries the analytic
// acceptance estimate so callers can tell "needs more trials" from "impossible".
class zero_acceptance_error : public std::runtime_error {
 public:
  zero_acceptance_error(const std::string& what, double expected_acceptance)
      : std::runtime_error(what), expected_acceptance_(expected_acceptance) {}

  double expected_acceptance() const { return expected_acceptance_; }

 private:
  double expected_acceptance_;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace preamp
