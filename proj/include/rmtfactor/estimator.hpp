#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "rmtfactor/data_model.hpp"
#include "rmtfactor/divergence.hpp"
#include "rmtfactor/model_spectrum.hpp"

namespace rmtfactor {

struct SearchGrid {
  std::vector<int> p_values;
  std::vector<double> b_values;
  double epsilon = 1e-3;
  std::size_t bins = 100;
  double b_max = 0.95;
  ZeroHandlingPolicy zero_policy;

  /// p in 0..10, b in 0, 0.05, ..., 0.95.
  static SearchGrid standard(int p_max = 10, double b_step = 0.05, double b_max = 0.95);
  void validate() const;
};

/// Model curves keyed by (b, c, epsilon). The curve does not depend on the
/// window, so one instance is shared by every window and every p; rebinning
/// onto a window's edges is cheap. Safe for concurrent use.
class ModelSpectrumCache {
 public:
  explicit ModelSpectrumCache(ModelGridOptions options = {}) : options_(options) {}

  std::shared_ptr<const ModelCurve> curve(double b, double c, double epsilon, double b_max = 0.95);
  std::size_t size() const;

 private:
  ModelGridOptions options_;
  mutable std::mutex mutex_;
  std::map<std::tuple<double, double, double>, std::shared_ptr<const ModelCurve>> curves_;
};

struct EstimationResult {
  Eigen::Index end_index = 0;
  int p_hat = -1;
  double b_hat = 0.0;
  double divergence = 0.0;
  // rows follow grid.p_values, columns grid.b_values; +inf marks failed pairs
  std::optional<Eigen::MatrixXd> divergence_surface;
  // set when the window could not be estimated; the fields above are then unset
  std::optional<std::string> failure;

  bool ok() const noexcept { return !failure.has_value(); }
};

struct EstimateOptions {
  bool retain_surface = false;
  StandardizeOptions standardize;
};

/// Grid-search argmin of js(rho_real(p), rho_model(b)); ties go to the smaller
/// p, then the smaller b. Throws Error(kGridExhausted) when no pair could be
/// evaluated.
EstimationResult estimate_window(const StandardizedWindow& window, const SearchGrid& grid,
                                 ModelSpectrumCache& cache, bool retain_surface = false);
EstimationResult estimate_window(const StandardizedWindow& window, const SearchGrid& grid,
                                 bool retain_surface = false);

struct ChangeAnnotation {
  Eigen::Index end_index = 0;
  int direction = 0;   // +1 rise, -1 drop
  double shift = 0.0;  // p_ave minus the trailing median before the flag
};

struct Timeline {
  WindowSpec spec;
  std::vector<EstimationResult> results;  // ascending end_index, step = stride
  std::vector<ChangeAnnotation> annotations;

  std::size_t failures() const;
};

struct SweepOptions {
  std::size_t workers = 1;
  EstimateOptions estimate;
};

/// One estimate per end_index T, T + stride, ... <= t. Per-window failures are
/// recorded in the result rather than thrown.
Timeline sweep(const RawDataSource& source, const WindowSpec& spec, const SearchGrid& grid,
               ModelSpectrumCache& cache, const SweepOptions& options = {});
Timeline sweep(const RawDataSource& source, const WindowSpec& spec, const SearchGrid& grid,
               const SweepOptions& options = {});

struct RunAverage {
  std::vector<Eigen::Index> end_index;
  std::vector<double> p_mean;
  std::vector<double> b_mean;
  std::vector<std::size_t> runs_used;  // runs with a successful estimate there
  std::size_t run_count = 0;
  std::vector<ChangeAnnotation> annotations;
};

/// Mean p_hat and b_hat per end_index over runs. Throws Error(kIndexMismatch)
/// unless all timelines cover identical end_index sequences.
RunAverage average_runs(const std::vector<Timeline>& timelines);

/// Flags index i when every p_ave in [i, i + hold) differs from the median of
/// the `hold` values before i by at least `threshold`, all with the same sign.
/// Scanning resumes `hold` windows after a flag.
std::vector<ChangeAnnotation> detect_changes(const RunAverage& average, double threshold,
                                             std::size_t hold);

}  // namespace rmtfactor
