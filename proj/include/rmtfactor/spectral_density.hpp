#pragma once

#include <vector>

namespace rmtfactor {

/// Binned probability density: K masses over K + 1 strictly increasing edges.
/// Both the empirical eigenvalue density and the model density use this type,
/// and any two densities that are compared must share identical edges.
struct SpectralDensity {
  std::vector<double> bin_edges;
  std::vector<double> masses;

  std::size_t bins() const noexcept { return masses.size(); }
  double total_mass() const noexcept;
  /// Throws Error(kInvalidArgument) when edges are not strictly increasing,
  /// sizes disagree, any mass is negative, or the total is not 1 within tol.
  void validate(double tol = 1e-9) const;
};

/// K uniform bins over [lo, hi]. Throws Error(kEmptyBins) when K < 2.
std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

bool same_edges(const SpectralDensity& a, const SpectralDensity& b) noexcept;

}  // namespace rmtfactor
