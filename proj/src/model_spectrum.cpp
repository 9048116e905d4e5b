#include "rmtfactor/model_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "rmtfactor/error.hpp"

namespace rmtfactor {
namespace {

constexpr double kImagTolerance = std::numbers::pi * 1e-8;  // rho >= -1e-8
constexpr double kClipFloor = -1e-3;
constexpr int kMaxSubdivision = 18;

Complex horner(const std::array<Complex, 5>& a, Complex m) {
  Complex v = a[0];
  for (std::size_t k = 1; k < a.size(); ++k) v = v * m + a[k];
  return v;
}

Complex horner_derivative(const std::array<Complex, 5>& a, Complex m) {
  Complex v = 4.0 * a[0];
  v = v * m + 3.0 * a[1];
  v = v * m + 2.0 * a[2];
  v = v * m + a[3];
  return v;
}

// Parlett-Reinsch diagonal similarity scaling; companion matrices of
// polynomials whose roots span many decades are badly scaled otherwise.
void balance(Eigen::Matrix4cd& a) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (int i = 0; i < 4; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (int j = 0; j < 4; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

double nearest_other(const std::array<Complex, 4>& roots, std::size_t self) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < roots.size(); ++k) {
    if (k != self) best = std::min(best, std::abs(roots[k] - roots[self]));
  }
  return best;
}

bool admissible(Complex m, Complex z) { return green_function(m, z).imag() <= kImagTolerance; }

double second_moment(const NoiseModelParams& p) {
  return (1.0 + p.b * p.b) / (1.0 - p.b * p.b) + p.c;
}

// Follows the physical root from (z0, m0) to z1, halving the step while the
// closest admissible root at z1 is not clearly separated from its neighbours.
Complex continue_root(const NoiseModelParams& params, Complex z0, Complex m0, Complex z1,
                      int depth = 0) {
  const auto roots = solve_moment_polynomial(z1, params);
  std::size_t best = roots.size();
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < roots.size(); ++k) {
    if (!admissible(roots[k], z1)) continue;
    const double d = std::abs(roots[k] - m0);
    if (d < best_distance) {
      best_distance = d;
      best = k;
    }
  }
  const bool found = best < roots.size();
  if (found && (best_distance < 0.5 * nearest_other(roots, best) || depth >= kMaxSubdivision)) {
    return roots[best];
  }
  if (depth >= kMaxSubdivision) {
    throw Error(ErrorCode::kNoPhysicalRoot,
                "no admissible root near z = (" + std::to_string(z1.real()) + ", " +
                    std::to_string(z1.imag()) + ")");
  }
  const Complex mid = 0.5 * (z0 + z1);
  const Complex m_mid = continue_root(params, z0, m0, mid, depth + 1);
  return continue_root(params, mid, m_mid, z1, depth + 1);
}

// Physical root at z reached from far above the real axis, where it is the
// unique root close to 1/z + m2/z^2.
Complex anchor_root(const NoiseModelParams& params, Complex z) {
  const double m2 = second_moment(params);
  const double height = 100.0 * std::max({1.0, std::abs(z.real()), m2});
  Complex top{z.real(), std::max(height, z.imag())};
  const auto roots = solve_moment_polynomial(top, params);
  const Complex guess = 1.0 / top + m2 / (top * top);
  Complex m = *std::min_element(roots.begin(), roots.end(), [&](Complex x, Complex y) {
    return std::abs(x - guess) < std::abs(y - guess);
  });
  if (top.imag() <= z.imag()) return m;

  const int steps = static_cast<int>(std::ceil(std::log(top.imag() / z.imag()) / std::log(1.5)));
  const double ratio = std::pow(z.imag() / top.imag(), 1.0 / steps);
  Complex current = top;
  for (int s = 1; s <= steps; ++s) {
    Complex next{z.real(), s == steps ? z.imag() : top.imag() * std::pow(ratio, s)};
    m = continue_root(params, current, m, next);
    current = next;
  }
  return m;
}

double density_at(Complex m, Complex z) { return -green_function(m, z).imag() / std::numbers::pi; }

// Exact integral of the linear interpolant over [lambda[0], x].
class PiecewiseLinearIntegral {
 public:
  PiecewiseLinearIntegral(const std::vector<double>& x, const std::vector<double>& y)
      : x_(x), y_(y), cumulative_(x.size(), 0.0) {
    for (std::size_t i = 1; i < x.size(); ++i) {
      cumulative_[i] = cumulative_[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
  }

  double total() const { return cumulative_.back(); }

  double operator()(double at) const {
    if (at <= x_.front()) return 0.0;
    if (at >= x_.back()) return total();
    const auto i = static_cast<std::size_t>(
        std::upper_bound(x_.begin(), x_.end(), at) - x_.begin() - 1);
    const double h = x_[i + 1] - x_[i];
    const double t = at - x_[i];
    const double slope = (y_[i + 1] - y_[i]) / h;
    return cumulative_[i] + y_[i] * t + 0.5 * slope * t * t;
  }

 private:
  const std::vector<double>& x_;
  const std::vector<double>& y_;
  std::vector<double> cumulative_;
};

}  // namespace

double NoiseModelParams::a() const { return std::sqrt(1.0 - b * b); }

void NoiseModelParams::validate() const {
  if (!(b_max < 1.0)) throw Error(ErrorCode::kInvalidArgument, "b_max must be < 1");
  if (!(b >= 0.0 && b <= b_max)) {
    throw Error(ErrorCode::kInvalidArgument,
                "b=" + std::to_string(b) + " outside [0, " + std::to_string(b_max) + "]");
  }
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw Error(ErrorCode::kInvalidArgument, "aspect ratio c must be positive");
  }
}

std::array<Complex, 5> moment_polynomial(Complex z, const NoiseModelParams& params) {
  const double b2 = params.b * params.b;
  const double a2 = 1.0 - b2;
  const double a4 = a2 * a2;
  const double c = params.c;
  return {Complex(a4 * c * c),
          2.0 * a2 * c * (-(1.0 + b2) * z + a2 * c),
          (1.0 - b2) * (1.0 - b2) * z * z - 2.0 * a2 * c * (1.0 + b2) * z + (c * c - 1.0) * a4,
          Complex(-2.0 * a4),
          Complex(-a4)};
}

double scaled_residual(const std::array<Complex, 5>& coefficients, Complex m) {
  double scale = 0.0;
  double power = 1.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
    scale += std::abs(*it) * power;
    power *= std::abs(m);
  }
  return std::abs(horner(coefficients, m)) / scale;
}

std::array<Complex, 4> solve_moment_polynomial(Complex z, const NoiseModelParams& params) {
  if (!(z.imag() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation point needs Im z > 0");
  }
  const auto a = moment_polynomial(z, params);

  Eigen::Matrix4cd companion = Eigen::Matrix4cd::Zero();
  for (int k = 0; k < 4; ++k) companion(0, k) = -a[k + 1] / a[0];
  for (int k = 1; k < 4; ++k) companion(k, k - 1) = 1.0;
  balance(companion);
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> solver(companion, false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kSolverFailure, "companion eigenvalue iteration failed");
  }

  std::array<Complex, 4> roots;
  for (int k = 0; k < 4; ++k) roots[k] = solver.eigenvalues()(k);

  for (std::size_t k = 0; k < roots.size(); ++k) {
    for (int iter = 0; iter < 4; ++iter) {
      const Complex derivative = horner_derivative(a, roots[k]);
      if (derivative == Complex(0.0)) break;
      const Complex step = horner(a, roots[k]) / derivative;
      const Complex polished = roots[k] - step;
      if (!(scaled_residual(a, polished) < scaled_residual(a, roots[k])) ||
          std::abs(step) > 0.5 * nearest_other(roots, k)) {
        break;
      }
      roots[k] = polished;
    }
    const double residual = scaled_residual(a, roots[k]);
    if (!(residual < 1e-8)) {
      throw Error(ErrorCode::kSolverFailure,
                  "root residual " + std::to_string(residual) + " exceeds 1e-8");
    }
  }
  return roots;
}

Complex select_physical_root(std::span<const Complex> roots, Complex z,
                             const NoiseModelParams& params, std::optional<Complex> previous) {
  const Complex reference = previous ? *previous : anchor_root(params, z);
  const Complex* best = nullptr;
  for (const Complex& m : roots) {
    if (!admissible(m, z)) continue;
    if (!best || std::abs(m - reference) < std::abs(*best - reference)) best = &m;
  }
  if (!best) {
    throw Error(ErrorCode::kNoPhysicalRoot, "every root gives a negative density");
  }
  return *best;
}

Complex green_function(Complex m, Complex z) { return (m + 1.0) / z; }

Complex ar1_mgf(Complex z, double b) {
  if (!(std::abs(b) < 1.0)) {
    throw Error(ErrorCode::kInvalidCoefficient, "|b| must be < 1");
  }
  const double ratio = (1.0 + b) / (1.0 - b);
  const double lo = std::min(ratio, 1.0 / ratio);
  const double hi = std::max(ratio, 1.0 / ratio);
  if (std::abs(z.imag()) < 1e-12 && z.real() >= lo - 1e-12 && z.real() <= hi + 1e-12) {
    throw Error(ErrorCode::kBranchCut, "z lies on the cut [" + std::to_string(lo) + ", " +
                                           std::to_string(hi) + "]");
  }
  return -1.0 / (std::sqrt(1.0 - z / ratio) * std::sqrt(1.0 - z * ratio));
}

double ModelCurve::first_moment() const {
  double s = 0.0;
  for (std::size_t i = 1; i < lambda.size(); ++i) {
    s += 0.5 * (rho[i] * lambda[i] + rho[i - 1] * lambda[i - 1]) * (lambda[i] - lambda[i - 1]);
  }
  return s;
}

ModelCurve model_curve(const NoiseModelParams& params, std::span<const double> lambda_grid,
                       double epsilon) {
  params.validate();
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  if (lambda_grid.size() < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs 2 points");
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
    throw Error(ErrorCode::kInvalidArgument, "grid must be ascending");
  }

  ModelCurve curve;
  curve.params = params;
  curve.epsilon = epsilon;
  curve.lambda.assign(lambda_grid.begin(), lambda_grid.end());
  curve.rho.resize(curve.lambda.size());

  // Sweep downward from the top of the grid, which sits above the support.
  const std::size_t n = curve.lambda.size();
  Complex z{curve.lambda[n - 1], epsilon};
  Complex m = anchor_root(params, z);
  for (std::size_t idx = n; idx-- > 0;) {
    const Complex next{curve.lambda[idx], epsilon};
    if (next != z) m = continue_root(params, z, m, next);
    z = next;
    double rho = density_at(m, z);
    if (rho < 0.0) {
      if (rho < kClipFloor) {
        throw Error(ErrorCode::kNoPhysicalRoot,
                    "density " + std::to_string(rho) + " at lambda " + std::to_string(z.real()));
      }
      rho = 0.0;
      ++curve.clipped;
    }
    curve.rho[idx] = rho;
  }

  PiecewiseLinearIntegral integral(curve.lambda, curve.rho);
  curve.raw_mass = integral.total();
  for (std::size_t idx = n; idx-- > 0;) {
    if (curve.rho[idx] > 1e-3) {
      curve.upper_edge = curve.lambda[idx];
      break;
    }
  }
  return curve;
}

double model_grid_upper(const NoiseModelParams& params, double epsilon) {
  params.validate();
  const double mp_edge = std::pow(1.0 + std::sqrt(params.c), 2);
  const double cap = mp_edge * (1.0 + params.b) / (1.0 - params.b) * 1.5;
  double u = std::min(mp_edge * 1.5, cap);
  while (u < cap) {
    const Complex z{u, epsilon};
    if (density_at(anchor_root(params, z), z) < 1e-6) break;
    u = std::min(u * 1.5, cap);
  }
  return u;
}

std::vector<double> default_lambda_grid(const NoiseModelParams& params,
                                        const ModelGridOptions& options) {
  if (options.points < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs 2 points");
  const double u = model_grid_upper(params, options.epsilon);
  std::vector<double> grid;
  grid.reserve(options.points + options.refine_points + options.negative_tail_points);
  for (std::size_t i = 0; i < options.points; ++i) {
    grid.push_back(u * static_cast<double>(i) / static_cast<double>(options.points - 1));
  }
  auto geometric = [&](double lo, double hi, std::size_t count, double sign) {
    if (count < 2) return;
    const double r = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      grid.push_back(sign * lo * std::exp(r * static_cast<double>(i)));
    }
  };
  geometric(1e-6, 0.05 * u, options.refine_points, 1.0);
  geometric(1e-6, options.negative_tail, options.negative_tail_points, -1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

ModelCurve model_curve(const NoiseModelParams& params, const ModelGridOptions& options) {
  const auto grid = default_lambda_grid(params, options);
  return model_curve(params, grid, options.epsilon);
}

SpectralDensity bin_model_curve(const ModelCurve& curve, const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 3) throw Error(ErrorCode::kEmptyBins, "need at least 2 bins");
  PiecewiseLinearIntegral integral(curve.lambda, curve.rho);
  if (std::abs(integral.total() - 1.0) > 0.01) {
    throw Error(ErrorCode::kSupportNotCovered,
                "model mass " + std::to_string(integral.total()) + " misses 1 by more than 1%");
  }
  SpectralDensity out;
  out.bin_edges = bin_edges;
  out.masses.resize(bin_edges.size() - 1);
  double previous = integral(bin_edges.front());
  for (std::size_t k = 0; k < out.masses.size(); ++k) {
    const double next = integral(bin_edges[k + 1]);
    out.masses[k] = std::max(next - previous, 0.0);
    previous = next;
  }
  out.masses.front() += integral(bin_edges.front());
  out.masses.back() += integral.total() - integral(bin_edges.back());
  double total = 0.0;
  for (double m : out.masses) total += m;
  for (double& m : out.masses) m /= total;
  return out;
}

SpectralDensity model_density(const NoiseModelParams& params,
                              std::span<const double> lambda_grid, double epsilon,
                              const std::vector<double>& bin_edges) {
  return bin_model_curve(model_curve(params, lambda_grid, epsilon), bin_edges);
}

void write_model_curve(std::ostream& out, const ModelCurve& curve) {
  out << "lambda,rho\n" << std::setprecision(12);
  for (std::size_t i = 0; i < curve.lambda.size(); ++i) {
    out << curve.lambda[i] << ',' << curve.rho[i] << '\n';
  }
}

}  // namespace rmtfactor
