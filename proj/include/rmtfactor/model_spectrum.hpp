#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rmtfactor/spectral_density.hpp"

namespace rmtfactor {

using Complex = std::complex<double>;

/// AR(1) residual model with identity cross-covariance. b is the lag-one
/// autocorrelation, c = N / T.
struct NoiseModelParams {
  double b = 0.0;
  double c = 118.0 / 250.0;
  double b_max = 0.95;

  double a() const;  // sqrt(1 - b^2)
  /// Throws Error(kInvalidArgument) unless 0 <= b <= b_max < 1 and c > 0.
  void validate() const;
};

/// z = lambda + i * epsilon with epsilon > 0.
struct ComplexPoint {
  double lambda = 0.0;
  double epsilon = 1e-3;

  Complex z() const { return {lambda, epsilon}; }
};

/// Coefficients of the quartic in M, highest degree first:
///   a^4 c^2 M^4 + 2 a^2 c (a^2 c - (1 + b^2) z) M^3
///   + ((1 - b^2)^2 z^2 - 2 a^2 c (1 + b^2) z + (c^2 - 1) a^4) M^2
///   - 2 a^4 M - a^4 = 0
std::array<Complex, 5> moment_polynomial(Complex z, const NoiseModelParams& params);

/// |P(M)| / sum_k |a_k| |M|^k, the backward error of a candidate root.
double scaled_residual(const std::array<Complex, 5>& coefficients, Complex m);

/// All four roots via companion-matrix eigenvalues plus Newton polishing.
/// Requires Im z > 0. Throws Error(kSolverFailure) when any scaled residual
/// stays above 1e-8.
std::array<Complex, 4> solve_moment_polynomial(Complex z, const NoiseModelParams& params);
inline std::array<Complex, 4> solve_moment_polynomial(const ComplexPoint& point,
                                                      const NoiseModelParams& params) {
  return solve_moment_polynomial(point.z(), params);
}

/// Picks the root whose Green's function is a Stieltjes transform branch
/// (Im G <= 0, so the density is nonnegative). With `previous`, the closest
/// admissible root wins; without it the reference comes from continuing the
/// asymptotic root M ~ 1/z down from far above the real axis.
/// Throws Error(kNoPhysicalRoot) when no root gives density >= -1e-8.
Complex select_physical_root(std::span<const Complex> roots, Complex z,
                             const NoiseModelParams& params,
                             std::optional<Complex> previous = std::nullopt);

/// G = (M + 1) / z.
Complex green_function(Complex m, Complex z);

/// Moment generating function M_B(z) = z G_B(z) - 1 of the AR(1)
/// autocovariance B_st = b^|s-t|:
///   M_B(z) = -1 / (sqrt(1 - z (1-b)/(1+b)) * sqrt(1 - z (1+b)/(1-b)))
/// with principal square roots. Throws Error(kBranchCut) on the cut
/// [(1-b)/(1+b), (1+b)/(1-b)] of the real axis and Error(kInvalidCoefficient)
/// for |b| >= 1.
Complex ar1_mgf(Complex z, double b);

/// Density rho(lambda) = -Im G(lambda + i eps) / pi sampled on a grid.
struct ModelCurve {
  NoiseModelParams params;
  double epsilon = 1e-3;
  std::vector<double> lambda;  // ascending
  std::vector<double> rho;
  std::size_t clipped = 0;     // small negative values clipped to 0
  double raw_mass = 0.0;       // trapezoid integral before any renormalization
  double upper_edge = 0.0;     // largest lambda with rho > 1e-3

  double first_moment() const;
};

struct ModelGridOptions {
  std::size_t points = 2000;
  double epsilon = 1e-3;
  // Extra abscissae that resolve the sharp structure near lambda = 0 and the
  // Lorentzian leak to lambda < 0 produced by a finite epsilon.
  std::size_t refine_points = 300;
  std::size_t negative_tail_points = 100;
  double negative_tail = 0.05;
};

/// Evaluates rho along an ascending grid with continuity-tracked root
/// selection. Values in [-1e-3, 0) are clipped; lower values raise
/// Error(kNoPhysicalRoot).
ModelCurve model_curve(const NoiseModelParams& params, std::span<const double> lambda_grid,
                       double epsilon = 1e-3);

/// Upper grid end u: starts at (1+sqrt c)^2 * 1.5 and grows by 1.5x until
/// rho(u) < 1e-6, capped at (1+sqrt c)^2 (1+b)/(1-b) * 1.5.
double model_grid_upper(const NoiseModelParams& params, double epsilon = 1e-3);

/// The default integration grid over [-negative_tail, u].
std::vector<double> default_lambda_grid(const NoiseModelParams& params,
                                        const ModelGridOptions& options = {});

ModelCurve model_curve(const NoiseModelParams& params, const ModelGridOptions& options = {});

/// Integrates the piecewise-linear curve over each bin (mass outside the edge
/// range is clamped into the end bins) and renormalizes to 1. Throws
/// Error(kSupportNotCovered) when the raw mass misses 1 by more than 1%.
SpectralDensity bin_model_curve(const ModelCurve& curve, const std::vector<double>& bin_edges);

SpectralDensity model_density(const NoiseModelParams& params,
                              std::span<const double> lambda_grid, double epsilon,
                              const std::vector<double>& bin_edges);

/// CSV with header "lambda,rho".
void write_model_curve(std::ostream& out, const ModelCurve& curve);

}  // namespace rmtfactor
