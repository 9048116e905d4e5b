#include "rmtfactor/divergence.hpp"

#include <cmath>
#include <string>

#include "rmtfactor/error.hpp"

namespace rmtfactor {
namespace {

double kl_smoothed(std::span<const double> p, std::span<const double> q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] * std::log(p[i] / q[i]);
  return sum;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kBinMismatch,
                std::to_string(a) + " bins vs " + std::to_string(b) + " bins");
  }
}

void check_edges(const SpectralDensity& p, const SpectralDensity& q) {
  if (!same_edges(p, q)) throw Error(ErrorCode::kBinMismatch, "densities use different edges");
}

}  // namespace

std::vector<double> ZeroHandlingPolicy::smooth(std::span<const double> masses) const {
  std::size_t zeros = 0;
  for (double m : masses) zeros += (m == 0.0);
  const double alpha = 1.0 - static_cast<double>(zeros) * epsilon;
  std::vector<double> out(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) {
    out[i] = masses[i] > 0.0 ? alpha * masses[i] : epsilon;
  }
  return out;
}

void ZeroHandlingPolicy::validate(std::size_t bins) const {
  if (!(epsilon > 0.0) || !(epsilon * static_cast<double>(bins) < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "zero-mass epsilon must lie in (0, 1/K)");
  }
}

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     const ZeroHandlingPolicy& policy) {
  check_sizes(p.size(), q.size());
  policy.validate(p.size());
  const auto ps = policy.smooth(p);
  const auto qs = policy.smooth(q);
  return kl_smoothed(ps, qs);
}

double js_divergence(std::span<const double> p, std::span<const double> q,
                     const ZeroHandlingPolicy& policy) {
  check_sizes(p.size(), q.size());
  policy.validate(p.size());
  const auto ps = policy.smooth(p);
  const auto qs = policy.smooth(q);
  std::vector<double> mix(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) mix[i] = 0.5 * (ps[i] + qs[i]);
  const auto ms = policy.smooth(mix);
  return 0.5 * kl_smoothed(ps, ms) + 0.5 * kl_smoothed(qs, ms);
}

double kl_divergence(const SpectralDensity& p, const SpectralDensity& q,
                     const ZeroHandlingPolicy& policy) {
  check_edges(p, q);
  return kl_divergence(std::span<const double>(p.masses), std::span<const double>(q.masses),
                       policy);
}

double js_divergence(const SpectralDensity& p, const SpectralDensity& q,
                     const ZeroHandlingPolicy& policy) {
  check_edges(p, q);
  return js_divergence(std::span<const double>(p.masses), std::span<const double>(q.masses),
                       policy);
}

}  // namespace rmtfactor
