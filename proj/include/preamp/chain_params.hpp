#pragma once
/*
 * chain_params.hpp — physical parameters of a preamplified detection chain.
 *
 * The modeled chain is, in signal order:
 *
 *   ideal phase-insensitive amplifier of gain G
 *     -> attenuator of transmission eta (the detector quantum efficiency)
 *     -> perfect photon counter
 *     -> additive Poisson dark counts of mean lambda (optional)
 */

#include <cmath>
#include <stdexcept>
#include <string>

namespace preamp {

struct DetectionChainParams {
  double gain = 1.0;        // photon-number gain G, >= 1
  double efficiency = 1.0;  // quantum efficiency eta, in [0, 1]
  double dark_mean = 0.0;   // mean dark counts per window lambda, >= 0

  void validate() const {
    if (!std::isfinite(gain) || gain < 1.0) {
      throw std::invalid_argument("gain must be finite and >= 1, got " +
                                  std::to_string(gain));
    }
    if (!std::isfinite(efficiency) || efficiency < 0.0 || efficiency > 1.0) {
      throw std::invalid_argument("efficiency must be in [0, 1], got " +
                                  std::to_string(efficiency));
    }
    if (!std::isfinite(dark_mean) || dark_mean < 0.0) {
      throw std::invalid_argument("dark_mean must be finite and >= 0, got " +
                                  std::to_string(dark_mean));
    }
  }

  bool has_dark_counts() const { return dark_mean > 0.0; }

  DetectionChainParams without_dark() const {
    return {gain, efficiency, 0.0};
  }
};

}  // namespace preamp
