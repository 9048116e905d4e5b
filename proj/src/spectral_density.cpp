#include "rmtfactor/spectral_density.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rmtfactor/error.hpp"

namespace rmtfactor {

double SpectralDensity::total_mass() const noexcept {
  return std::accumulate(masses.begin(), masses.end(), 0.0);
}

void SpectralDensity::validate(double tol) const {
  if (bin_edges.size() != masses.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument, "density needs K+1 edges for K masses");
  }
  for (std::size_t k = 1; k < bin_edges.size(); ++k) {
    if (!(bin_edges[k] > bin_edges[k - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "bin edges must be strictly increasing");
    }
  }
  for (double m : masses) {
    if (!(m >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative bin mass");
  }
  if (std::abs(total_mass() - 1.0) > tol) {
    throw Error(ErrorCode::kInvalidArgument,
                "density mass " + std::to_string(total_mass()) + " is not 1");
  }
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (bins < 2) throw Error(ErrorCode::kEmptyBins, "need at least 2 bins");
  if (!(hi > lo)) throw Error(ErrorCode::kInvalidArgument, "bin range is empty");
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k <= bins; ++k) edges[k] = lo + width * static_cast<double>(k);
  edges.back() = hi;
  return edges;
}

bool same_edges(const SpectralDensity& a, const SpectralDensity& b) noexcept {
  return a.bin_edges == b.bin_edges;
}

}  // namespace rmtfactor
