#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rmtfactor/data_model.hpp"
#include "rmtfactor/spectral_density.hpp"

namespace rmtfactor {

/// p-level split of a standardized window into L * F + U.
struct FactorDecomposition {
  int p = 0;
  Eigen::MatrixXd factors;   // p x T, orthonormal rows
  Eigen::MatrixXd loadings;  // N x p
  Eigen::MatrixXd residual;  // N x T
};

struct ResidualCovariance {
  Eigen::MatrixXd matrix;  // N x N, symmetric PSD
  int p = 0;
};

struct EmpiricalDensity {
  SpectralDensity density;
  std::size_t clamped_below = 0;
  std::size_t clamped_above = 0;
};

/// Removes the top-p principal components. F rows are the leading unit
/// eigenvectors of X^T X, each signed so its largest-magnitude entry is
/// positive; L = X F^T and U = X - L F.
FactorDecomposition decompose(const StandardizedWindow& window, int p);

/// C = U U^T / T, symmetrized.
ResidualCovariance residual_covariance(const FactorDecomposition& d, Eigen::Index length);

/// Ascending eigenvalues of a symmetric matrix.
std::vector<double> sorted_eigenvalues(const Eigen::MatrixXd& symmetric);

/// Histogram of eigenvalues normalized to unit mass; values outside the edge
/// range are clamped into the first/last bin and counted.
EmpiricalDensity histogram_density(std::span<const double> eigenvalues,
                                   const std::vector<double>& bin_edges);

EmpiricalDensity empirical_density(const ResidualCovariance& c,
                                   const std::vector<double>& bin_edges);

/// Eigenvalues of C_real^(p) for every requested p from a single
/// eigendecomposition of X X^T / T. Removing the top-p components maps the
/// spectrum {l_1 >= ... >= l_N} to {l_{p+1}, ..., l_N} plus p zeros, which is
/// what decompose + residual_covariance would produce.
class ResidualSpectra {
 public:
  explicit ResidualSpectra(const StandardizedWindow& window);

  /// Full-window covariance eigenvalues, descending.
  const std::vector<double>& descending() const noexcept { return descending_; }
  double largest() const noexcept { return descending_.front(); }
  /// Ascending eigenvalues of the p-level residual covariance.
  std::vector<double> at_level(int p) const;

 private:
  std::vector<double> descending_;
};

/// Shared edges for one window: K uniform bins over
/// [0, 1.05 * max(empirical_max, model_upper_edge)].
std::vector<double> shared_bin_edges(double empirical_max, double model_upper_edge,
                                     std::size_t bins);

/// One CSV line: end_index followed by ascending eigenvalues.
void write_eigenvalue_row(std::ostream& out, Eigen::Index end_index,
                          std::span<const double> eigenvalues);

}  // namespace rmtfactor
