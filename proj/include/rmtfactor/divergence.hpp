#pragma once

#include <span>
#include <vector>

#include "rmtfactor/spectral_density.hpp"

namespace rmtfactor {

/// Zero bins receive `epsilon` and nonzero bins are scaled by
/// alpha = 1 - zeros * epsilon, keeping the total mass at 1.
struct ZeroHandlingPolicy {
  double epsilon = 1e-12;

  std::vector<double> smooth(std::span<const double> masses) const;
  /// Throws Error(kInvalidArgument) unless 0 < epsilon < 1/K.
  void validate(std::size_t bins) const;
};

/// sum_i P_i log(P_i / Q_i) on smoothed inputs (natural log).
/// Throws Error(kBinMismatch) when the edges differ.
double kl_divergence(const SpectralDensity& p, const SpectralDensity& q,
                     const ZeroHandlingPolicy& policy = {});

/// (KL(P||M) + KL(Q||M)) / 2 with M = (P~ + Q~) / 2 formed from the smoothed
/// inputs and smoothed again.
double js_divergence(const SpectralDensity& p, const SpectralDensity& q,
                     const ZeroHandlingPolicy& policy = {});

/// Raw-mass variants used on hot paths; inputs must already share a partition.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     const ZeroHandlingPolicy& policy = {});
double js_divergence(std::span<const double> p, std::span<const double> q,
                     const ZeroHandlingPolicy& policy = {});

}  // namespace rmtfactor
