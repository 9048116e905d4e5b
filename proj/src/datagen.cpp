#include "rmtfactor/datagen.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "rmtfactor/empirical_spectrum.hpp"
#include "rmtfactor/error.hpp"

namespace rmtfactor {
namespace {

enum Stream : std::uint64_t {
  kBaselineStream = 1,
  kNoiseStream = 2,
  kTrialStream = 3,
  kLoadingStream = 4,
  kFactorStream = 5,
};

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

Eigen::VectorXd event_loading(std::uint64_t seed, std::size_t event, Eigen::Index rows,
                              Eigen::Index channel) {
  std::mt19937_64 rng(derive_seed(seed, kLoadingStream, event));
  Eigen::VectorXd z = gaussian_matrix(rng, rows, 1).col(0);
  z(channel) += z(channel) < 0 ? -3.0 : 3.0;
  return z / z.norm();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

Eigen::MatrixXd generate_ar1(const Ar1Spec& spec, Eigen::Index rows, Eigen::Index cols,
                             Eigen::Index burn_in) {
  if (!(std::abs(spec.b) < 1.0)) {
    throw Error(ErrorCode::kInvalidCoefficient, "AR(1) coefficient must satisfy |b| < 1");
  }
  if (rows < 1 || cols < 1 || burn_in < 0) {
    throw Error(ErrorCode::kInvalidArgument, "AR(1) dimensions must be positive");
  }
  if (spec.innovation == Innovation::kStudentT && !(spec.student_dof > 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Student-t innovations need dof > 2");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::student_t_distribution<double> student(spec.student_dof);
  const double t_scale = std::sqrt((spec.student_dof - 2.0) / spec.student_dof);
  const double sd = std::sqrt(1.0 - spec.b * spec.b);
  auto innovation = [&] {
    return spec.innovation == Innovation::kGaussian ? normal(rng) : t_scale * student(rng);
  };

  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double x = innovation();
    for (Eigen::Index s = 0; s < burn_in; ++s) x = spec.b * x + sd * innovation();
    for (Eigen::Index s = 0; s < cols; ++s) {
      x = spec.b * x + sd * innovation();
      out(i, s) = x;
    }
  }
  return out;
}

void EventSchedule::validate(Eigen::Index rows, Eigen::Index cols) const {
  for (const auto& e : events) {
    const Eigen::Index offset = e.offset.value_or(cols);
    if (e.channel < 1 || e.channel > rows) {
      throw Error(ErrorCode::kScheduleOutOfRange,
                  "channel " + std::to_string(e.channel) + " outside [1, " +
                      std::to_string(rows) + "]");
    }
    if (e.onset < 1 || offset > cols || e.onset > offset) {
      throw Error(ErrorCode::kScheduleOutOfRange,
                  "event span [" + std::to_string(e.onset) + ", " + std::to_string(offset) +
                      "] outside [1, " + std::to_string(cols) + "]");
    }
    if (!std::isfinite(e.amplitude)) {
      throw Error(ErrorCode::kScheduleOutOfRange, "event amplitude is not finite");
    }
  }
}

EventSchedule reference_schedule(const std::string& name) {
  if (name == "case1") return {{{52, 500, std::nullopt, 100.0}}};
  if (name == "case2") return {{{52, 1300, std::nullopt, 100.0}, {117, 1400, 1799, 150.0}}};
  if (name == "case3") {
    return {{{52, 2250, std::nullopt, 100.0},
             {117, 2300, std::nullopt, 150.0},
             {75, 2400, std::nullopt, 400.0}}};
  }
  if (name == "null") return {};
  throw Error(ErrorCode::kConfigError, "unknown case '" + name + "'");
}

Eigen::Index reference_length(const std::string& name) {
  if (name == "case1" || name == "null") return 899;
  if (name == "case2") return 1899;
  if (name == "case3") return 2500;
  throw Error(ErrorCode::kConfigError, "unknown case '" + name + "'");
}

EventSchedule read_schedule_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
    EventSchedule schedule;
    for (const auto& item : doc.at("events")) {
      ScheduledEvent e;
      e.channel = item.at("channel").get<Eigen::Index>();
      e.onset = item.at("onset").get<Eigen::Index>();
      if (item.contains("offset") && !item.at("offset").is_null()) {
        e.offset = item.at("offset").get<Eigen::Index>();
      }
      e.amplitude = item.at("amplitude").get<double>();
      schedule.events.push_back(e);
    }
    return schedule;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParseError, std::string("schedule: ") + ex.what());
  }
}

void write_schedule_json(std::ostream& out, const EventSchedule& schedule) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : schedule.events) {
    events.push_back({{"channel", e.channel},
                      {"onset", e.onset},
                      {"offset", e.offset ? nlohmann::json(*e.offset) : nlohmann::json()},
                      {"amplitude", e.amplitude}});
  }
  out << nlohmann::json{{"events", events}}.dump(2) << '\n';
}

Eigen::MatrixXd planted_signal(const PlantedFactorSpec& spec, Eigen::Index rows,
                               Eigen::Index cols) {
  if (spec.k < 0 || spec.k > rows) {
    throw Error(ErrorCode::kInvalidArgument, "planted factor count must lie in [0, N]");
  }
  if (!(spec.spike_strength >= 0.0) || !(spec.bulk_edge > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "spike strength and bulk edge must be positive");
  }
  Eigen::MatrixXd loadings = spec.loadings;
  if (loadings.size() == 0) {
    std::mt19937_64 rng(derive_seed(spec.seed, kLoadingStream));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(rng, rows, spec.k));
    loadings = qr.householderQ() * Eigen::MatrixXd::Identity(rows, spec.k);
  }
  if (loadings.rows() != rows || loadings.cols() != spec.k) {
    throw Error(ErrorCode::kDimensionMismatch, "loadings must be N x k");
  }
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    if (std::abs(loadings.col(j).norm() - 1.0) > 1e-10) {
      throw Error(ErrorCode::kInvalidArgument, "loadings must have unit norm");
    }
  }

  std::mt19937_64 rng(derive_seed(spec.seed, kFactorStream));
  std::uniform_real_distribution<double> uniform;
  Eigen::MatrixXd factors(spec.k, cols);
  for (int j = 0; j < spec.k; ++j) {
    auto f = factors.row(j);
    switch (spec.shape) {
      case FactorShape::kGaussian:
        f = gaussian_matrix(rng, 1, cols);
        break;
      case FactorShape::kStep: {
        const auto onset = static_cast<Eigen::Index>(cols * (0.25 + 0.5 * uniform(rng)));
        for (Eigen::Index s = 0; s < cols; ++s) f(s) = s < onset ? 0.0 : 1.0;
        break;
      }
      case FactorShape::kSmooth: {
        const double freq = 1.0 + 4.0 * uniform(rng);
        const double phase = 2.0 * std::numbers::pi * uniform(rng);
        for (Eigen::Index s = 0; s < cols; ++s) {
          f(s) = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(s) /
                              static_cast<double>(cols) + phase);
        }
        break;
      }
    }
    f.array() -= f.mean();
    const double rms = std::sqrt(f.squaredNorm() / static_cast<double>(cols));
    if (rms > 0.0) f /= rms;
  }
  const double scale = std::sqrt(spec.spike_strength * spec.bulk_edge);
  return scale * loadings * factors;
}

Eigen::MatrixXd event_signal(const EventSchedule& schedule, Eigen::Index rows,
                             Eigen::Index cols, const CaseOptions& options) {
  schedule.validate(rows, cols);
  Eigen::MatrixXd signal = Eigen::MatrixXd::Zero(rows, cols);
  for (std::size_t k = 0; k < schedule.events.size(); ++k) {
    const auto& e = schedule.events[k];
    const Eigen::Index first = e.onset - 1;
    const Eigen::Index span = e.offset.value_or(cols) - e.onset + 1;
    if (options.mode == EventMode::kDirect) {
      signal.row(e.channel - 1).segment(first, span).array() += e.amplitude;
    } else {
      const Eigen::VectorXd l = event_loading(options.loading_seed, k, rows, e.channel - 1);
      signal.middleCols(first, span).colwise() += e.amplitude * options.event_gain * l;
    }
  }
  return signal;
}

RawDataSource synthesize_case(const EventSchedule& schedule, const Ar1Spec& base,
                              Eigen::Index rows, Eigen::Index cols, const CaseOptions& options) {
  schedule.validate(rows, cols);
  std::mt19937_64 rng(derive_seed(base.seed, kBaselineStream));
  std::uniform_real_distribution<double> uniform(options.baseline_low, options.baseline_high);
  Eigen::VectorXd baseline(rows);
  for (Eigen::Index i = 0; i < rows; ++i) baseline(i) = uniform(rng);

  Ar1Spec noise = base;
  noise.seed = derive_seed(base.seed, kNoiseStream);
  Eigen::MatrixXd values = generate_ar1(noise, rows, cols, options.burn_in);
  values.colwise() += baseline;
  values += event_signal(schedule, rows, cols, options);
  return RawDataSource(std::move(values));
}

std::vector<double> pooled_ar1_eigenvalues(double b, Eigen::Index rows, Eigen::Index cols,
                                           int trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(trials));
  for (int trial = 0; trial < trials; ++trial) {
    Ar1Spec spec{b, derive_seed(seed, kTrialStream, static_cast<std::uint64_t>(trial))};
    const Eigen::MatrixXd u = generate_ar1(spec, rows, cols);
    const Eigen::MatrixXd c = u * u.transpose() / static_cast<double>(cols);
    const auto eig = sorted_eigenvalues(c);
    pooled.insert(pooled.end(), eig.begin(), eig.end());
  }
  return pooled;
}

SpectralDensity brute_force_spectrum(double b, Eigen::Index rows, Eigen::Index cols, int trials,
                                     std::uint64_t seed, const std::vector<double>& bin_edges) {
  const auto pooled = pooled_ar1_eigenvalues(b, rows, cols, trials, seed);
  return histogram_density(pooled, bin_edges).density;
}

}  // namespace rmtfactor
