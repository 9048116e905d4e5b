#include "rmtfactor/empirical_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "rmtfactor/error.hpp"

namespace rmtfactor {
namespace {

// Leading p right singular vectors of x as the rows of a p x T matrix.
Eigen::MatrixXd leading_factors(const Eigen::MatrixXd& x, int p) {
  const Eigen::Index n = x.rows();
  const Eigen::Index t = x.cols();
  Eigen::MatrixXd f(p, t);
  if (p == 0) return f;

  if (n < t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x * x.transpose());
    const Eigen::VectorXd& w = es.eigenvalues();
    const double scale = std::max(w(n - 1), 0.0);
    int filled = 0;
    for (; filled < p; ++filled) {
      const double lambda = w(n - 1 - filled);
      if (!(lambda > 1e-24 * std::max(scale, 1e-300))) break;
      f.row(filled) = (x.transpose() * es.eigenvectors().col(n - 1 - filled)).transpose() /
                      std::sqrt(lambda);
    }
    // Null directions: any orthonormal completion leaves L * F unchanged
    // because X maps them to zero.
    for (Eigen::Index e = 0; filled < p && e < t; ++e) {
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Unit(t, e);
      for (int k = 0; k < filled; ++k) v -= v.dot(f.row(k)) * f.row(k);
      const double norm = v.norm();
      if (norm < 1e-6) continue;
      f.row(filled++) = v / norm;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.transpose() * x);
    for (int k = 0; k < p; ++k) f.row(k) = es.eigenvectors().col(t - 1 - k).transpose();
  }

  for (int k = 0; k < p; ++k) {
    Eigen::Index arg = 0;
    f.row(k).cwiseAbs().maxCoeff(&arg);
    if (f(k, arg) < 0) f.row(k) *= -1.0;
  }
  return f;
}

}  // namespace

FactorDecomposition decompose(const StandardizedWindow& window, int p) {
  const auto limit = std::min(window.rows(), window.cols());
  if (p < 0 || p > limit) {
    throw Error(ErrorCode::kInvalidFactorCount,
                "p=" + std::to_string(p) + " outside [0, " + std::to_string(limit) + "]");
  }
  FactorDecomposition d;
  d.p = p;
  d.factors = leading_factors(window.values, p);
  d.loadings = window.values * d.factors.transpose();
  d.residual = window.values - d.loadings * d.factors;
  return d;
}

ResidualCovariance residual_covariance(const FactorDecomposition& d, Eigen::Index length) {
  if (d.residual.cols() != length) {
    throw Error(ErrorCode::kDimensionMismatch,
                "residual has " + std::to_string(d.residual.cols()) +
                    " columns, expected " + std::to_string(length));
  }
  ResidualCovariance c;
  c.p = d.p;
  Eigen::MatrixXd raw = d.residual * d.residual.transpose() / static_cast<double>(length);
  c.matrix = 0.5 * (raw + raw.transpose());
  return c;
}

std::vector<double> sorted_eigenvalues(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
  const auto& w = es.eigenvalues();
  return {w.data(), w.data() + w.size()};
}

EmpiricalDensity histogram_density(std::span<const double> eigenvalues,
                                   const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 3) throw Error(ErrorCode::kEmptyBins, "need at least 2 bins");
  if (eigenvalues.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no eigenvalues to histogram");
  }
  EmpiricalDensity out;
  const std::size_t bins = bin_edges.size() - 1;
  std::vector<double> counts(bins, 0.0);
  for (double x : eigenvalues) {
    std::size_t k;
    if (x < bin_edges.front()) {
      k = 0;
      ++out.clamped_below;
    } else if (x > bin_edges.back()) {
      k = bins - 1;
      ++out.clamped_above;
    } else {
      auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), x);
      k = std::min<std::size_t>(static_cast<std::size_t>(it - bin_edges.begin()) - 1, bins - 1);
    }
    counts[k] += 1.0;
  }
  const double n = static_cast<double>(eigenvalues.size());
  for (double& c : counts) c /= n;
  out.density.bin_edges = bin_edges;
  out.density.masses = std::move(counts);
  return out;
}

EmpiricalDensity empirical_density(const ResidualCovariance& c,
                                   const std::vector<double>& bin_edges) {
  auto eig = sorted_eigenvalues(c.matrix);
  return histogram_density(eig, bin_edges);
}

ResidualSpectra::ResidualSpectra(const StandardizedWindow& window) {
  const double t = static_cast<double>(window.cols());
  Eigen::MatrixXd s = window.values * window.values.transpose() / t;
  auto asc = sorted_eigenvalues(0.5 * (s + s.transpose()));
  descending_.assign(asc.rbegin(), asc.rend());
}

std::vector<double> ResidualSpectra::at_level(int p) const {
  const auto n = static_cast<int>(descending_.size());
  if (p < 0 || p > n) {
    throw Error(ErrorCode::kInvalidFactorCount, "p=" + std::to_string(p) + " out of range");
  }
  std::vector<double> out(static_cast<std::size_t>(p), 0.0);
  out.insert(out.end(), descending_.rbegin(), descending_.rend() - p);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> shared_bin_edges(double empirical_max, double model_upper_edge,
                                     std::size_t bins) {
  const double hi = 1.05 * std::max(empirical_max, model_upper_edge);
  return uniform_edges(0.0, hi, bins);
}

void write_eigenvalue_row(std::ostream& out, Eigen::Index end_index,
                          std::span<const double> eigenvalues) {
  out << end_index;
  out << std::setprecision(12);
  for (double v : eigenvalues) out << ',' << v;
  out << '\n';
}

}  // namespace rmtfactor
