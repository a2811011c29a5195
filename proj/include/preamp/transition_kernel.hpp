#pragma once
/*
 * transition_kernel.hpp — column-stochastic transition kernels on a truncated
 * photon-number basis.
 *
 * Orientation is fixed once for the whole library:
 *
 *     entries(n, m) = P(n | m),  n = output (row), m = input (column),
 *
 * so every column is a probability distribution over outputs.
 * column_deficit(m) is the probability mass falling beyond the stored output
 * range for input m; column sum + deficit = 1 within 1e-12 for every column.
 *
 * ColumnPolicy::strict rejects construction when any deficit exceeds the
 * requested truncation tolerance. ColumnPolicy::truncated_block represents a
 * deliberately clipped output window (deficits may be large); it is what
 * fixed-dimension comparisons and CSV dumps of small blocks use.
 */

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "preamp/errors.hpp"
#include "preamp/numeric.hpp"

namespace preamp {

enum class ColumnPolicy {
  strict,
  truncated_block,
};

class TransitionKernel {
 public:
  // Deficits computed as 1 - column sum.
  TransitionKernel(std::size_t output_dim, std::size_t input_dim,
                   std::vector<double> entries, double truncation_tolerance,
                   ColumnPolicy policy = ColumnPolicy::strict)
      : TransitionKernel(output_dim, input_dim, std::move(entries), {},
                         truncation_tolerance, policy) {}

  // Overload for constructions that know the deficits exactly (e.g. the
  // attenuator, whose columns carry no mass beyond the stored range).
  TransitionKernel(std::size_t output_dim, std::size_t input_dim,
                   std::vector<double> entries, std::vector<double> deficits,
                   double truncation_tolerance,
                   ColumnPolicy policy = ColumnPolicy::strict)
      : output_dim_(output_dim),
        input_dim_(input_dim),
        entries_(std::move(entries)),
        deficits_(std::move(deficits)),
        tolerance_(truncation_tolerance),
        policy_(policy) {
    if (output_dim_ == 0 || input_dim_ == 0) {
      throw std::invalid_argument("kernel dimensions must be positive");
    }
    if (entries_.size() != output_dim_ * input_dim_) {
      throw std::invalid_argument("kernel entry count does not match dims");
    }
    if (!deficits_.empty() && deficits_.size() != input_dim_) {
      throw std::invalid_argument("deficit vector length mismatch");
    }
    validate();
  }

  std::size_t output_dim() const { return output_dim_; }
  std::size_t input_dim() const { return input_dim_; }
  double truncation_tolerance() const { return tolerance_; }
  ColumnPolicy policy() const { return policy_; }

  double operator()(std::size_t n, std::size_t m) const {
    return entries_[n * input_dim_ + m];
  }

  // Row n as a contiguous view: P(n | m) for m = 0..input_dim-1.
  std::span<const double> row(std::size_t n) const {
    if (n >= output_dim_) {
      throw std::invalid_argument("row index " + std::to_string(n) +
                                  " out of range");
    }
    return {entries_.data() + n * input_dim_, input_dim_};
  }

  double column_sum(std::size_t m) const {
    detail::KahanSum s;
    for (std::size_t n = 0; n < output_dim_; ++n) {
      s.add(entries_[n * input_dim_ + m]);
    }
    return s.value();
  }

  double column_deficit(std::size_t m) const { return deficits_[m]; }
  const std::vector<double>& column_deficits() const { return deficits_; }

  // Clip the output window to new_output_dim rows; the dropped mass moves
  // into the deficits. The result is a truncated block by definition.
  TransitionKernel truncated(std::size_t new_output_dim) const {
    if (new_output_dim == 0 || new_output_dim > output_dim_) {
      throw std::invalid_argument("invalid truncation dimension");
    }
    std::vector<double> clipped(
        entries_.begin(),
        entries_.begin() +
            static_cast<std::ptrdiff_t>(new_output_dim * input_dim_));
    std::vector<double> deficits(input_dim_, 0.0);
    for (std::size_t m = 0; m < input_dim_; ++m) {
      detail::KahanSum dropped;
      dropped.add(deficits_[m]);
      for (std::size_t n = new_output_dim; n < output_dim_; ++n) {
        dropped.add(entries_[n * input_dim_ + m]);
      }
      deficits[m] = std::min(1.0, std::max(0.0, dropped.value()));
    }
    return TransitionKernel(new_output_dim, input_dim_, std::move(clipped),
                            std::move(deficits), tolerance_,
                            ColumnPolicy::truncated_block);
  }

 private:
  void validate() {
    for (double& e : entries_) {
      if (!std::isfinite(e) || e < -1e-12 || e > 1.0 + 1e-12) {
        throw std::invalid_argument("kernel entry outside [0, 1]: " +
                                    std::to_string(e));
      }
      e = std::min(1.0, std::max(0.0, e));
    }
    const bool computed = deficits_.empty();
    if (computed) deficits_.resize(input_dim_, 0.0);
    for (std::size_t m = 0; m < input_dim_; ++m) {
      const double colsum = column_sum(m);
      if (computed) {
        deficits_[m] = std::min(1.0, std::max(0.0, 1.0 - colsum));
      }
      if (std::abs(colsum + deficits_[m] - 1.0) > 1e-12) {
        throw std::invalid_argument(
            "column " + std::to_string(m) +
            " is not stochastic: sum + deficit = " +
            std::to_string(colsum + deficits_[m]));
      }
      if (policy_ == ColumnPolicy::strict &&
          deficits_[m] > tolerance_ + 1e-15) {
        throw truncation_error(
            "column " + std::to_string(m) + " deficit " +
                std::to_string(deficits_[m]) +
                " exceeds truncation tolerance " + std::to_string(tolerance_),
            output_dim_ + 1, deficits_[m]);
      }
    }
  }

  std::size_t output_dim_;
  std::size_t input_dim_;
  std::vector<double> entries_;
  std::vector<double> deficits_;
  double tolerance_;
  ColumnPolicy policy_;
};

}  // namespace preamp
