#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtfactor/data_model.hpp"
#include "rmtfactor/spectral_density.hpp"

namespace rmtfactor {

/// splitmix64 mix of (seed, stream, index): independent child seeds for
/// runs, trials and sub-streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

enum class Innovation { kGaussian, kStudentT };

/// Stationary AR(1): U_t = b U_{t-1} + xi_t with var(xi) = 1 - b^2, so each
/// row has unit marginal variance.
struct Ar1Spec {
  double b = 0.5;
  std::uint64_t seed = 0;
  Innovation innovation = Innovation::kGaussian;
  double student_dof = 5.0;  // must exceed 2; draws are rescaled to unit variance
};

/// N x T matrix of independent AR(1) rows. The first state is drawn from the
/// stationary law and then run through `burn_in` extra steps.
/// Throws Error(kInvalidCoefficient) when |b| >= 1.
Eigen::MatrixXd generate_ar1(const Ar1Spec& spec, Eigen::Index rows, Eigen::Index cols,
                             Eigen::Index burn_in = 200);

/// One step change. Channels and samples are 1-based; offset is inclusive and
/// defaults to the end of the record.
struct ScheduledEvent {
  Eigen::Index channel = 1;
  Eigen::Index onset = 1;
  std::optional<Eigen::Index> offset;
  double amplitude = 0.0;
};

struct EventSchedule {
  std::vector<ScheduledEvent> events;

  /// Throws Error(kScheduleOutOfRange) when a channel or sample index falls
  /// outside the record or onset > offset.
  void validate(Eigen::Index rows, Eigen::Index cols) const;
};

/// Event schedules of the three reference cases. case1: channel 52 steps
/// 0 -> 100 at sample 500 (t = 899). case2: channel 52 +100 from 1300, channel
/// 117 +150 over 1400..1799 (t = 1899). case3: 52 +100 at 2250, 117 +150 at
/// 2300, 75 +400 at 2400 (t = 2500).
EventSchedule reference_schedule(const std::string& name);
Eigen::Index reference_length(const std::string& name);

EventSchedule read_schedule_json(std::istream& in);
void write_schedule_json(std::ostream& out, const EventSchedule& schedule);

enum class FactorShape { kGaussian, kStep, kSmooth };

/// Planted factors: X = noise + sum_j s * l_j f_j^T with unit-norm loadings,
/// unit mean-square factor series and s^2 = spike_strength * bulk_edge, so the
/// population spike sits at about spike_strength times the bulk edge.
struct PlantedFactorSpec {
  int k = 1;
  double spike_strength = 5.0;
  double bulk_edge = 1.0;
  FactorShape shape = FactorShape::kGaussian;
  std::uint64_t seed = 0;
  // Optional explicit loadings (N x k, unit-norm columns); drawn when empty.
  Eigen::MatrixXd loadings;
};

/// Loadings and factor series of a planted model, returned as the N x T signal.
Eigen::MatrixXd planted_signal(const PlantedFactorSpec& spec, Eigen::Index rows,
                               Eigen::Index cols);

enum class EventMode {
  kDirect,   // the step lands on the scheduled channel only
  kLoading,  // the step drives a unit-norm loading centred on that channel
};

struct CaseOptions {
  EventMode mode = EventMode::kLoading;
  // Loading mode multiplies schedule amplitudes by this gain; the signal is
  // amplitude * gain * l with a unit-norm loading l, in noise-std units.
  double event_gain = 1.0;
  double baseline_low = 20.0;
  double baseline_high = 200.0;
  std::uint64_t loading_seed = 0;
  Eigen::Index burn_in = 200;
};

/// Deterministic event contribution alone (N x t).
Eigen::MatrixXd event_signal(const EventSchedule& schedule, Eigen::Index rows,
                             Eigen::Index cols, const CaseOptions& options = {});

/// baseline constants + AR(1) noise + event signal. Noise and baselines come
/// from `base.seed` and do not depend on the schedule.
RawDataSource synthesize_case(const EventSchedule& schedule, const Ar1Spec& base,
                              Eigen::Index rows, Eigen::Index cols,
                              const CaseOptions& options = {});

/// Eigenvalues of (1/T) U U^T pooled over independent AR(1) trials.
std::vector<double> pooled_ar1_eigenvalues(double b, Eigen::Index rows, Eigen::Index cols,
                                           int trials, std::uint64_t seed);

/// Pooled eigenvalues binned onto `bin_edges`.
SpectralDensity brute_force_spectrum(double b, Eigen::Index rows, Eigen::Index cols, int trials,
                                     std::uint64_t seed, const std::vector<double>& bin_edges);

}  // namespace rmtfactor
