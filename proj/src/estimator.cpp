#include "rmtfactor/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rmtfactor/empirical_spectrum.hpp"
#include "rmtfactor/error.hpp"
#include "rmtfactor/parallel.hpp"

namespace rmtfactor {

SearchGrid SearchGrid::standard(int p_max, double b_step, double b_max) {
  if (p_max < 0) throw Error(ErrorCode::kInvalidArgument, "p_max must be >= 0");
  if (!(b_step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "b step must be > 0");
  SearchGrid grid;
  grid.b_max = b_max;
  for (int p = 0; p <= p_max; ++p) grid.p_values.push_back(p);
  const auto steps = static_cast<int>(std::floor(b_max / b_step + 1e-9));
  for (int k = 0; k <= steps; ++k) {
    // rounded so cache keys agree across differently accumulated grids
    grid.b_values.push_back(std::round(k * b_step * 1e12) / 1e12);
  }
  return grid;
}

void SearchGrid::validate() const {
  if (p_values.empty()) throw Error(ErrorCode::kInvalidArgument, "p_values is empty");
  if (b_values.empty()) throw Error(ErrorCode::kInvalidArgument, "b_values is empty");
  for (int p : p_values) {
    if (p < 0) throw Error(ErrorCode::kInvalidArgument, "p values must be >= 0");
  }
  for (double b : b_values) {
    if (!(b >= 0.0 && b <= b_max)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "b=" + std::to_string(b) + " outside [0, " + std::to_string(b_max) + "]");
    }
  }
  if (!(b_max < 1.0)) throw Error(ErrorCode::kInvalidArgument, "b_max must be < 1");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  if (bins < 2) throw Error(ErrorCode::kEmptyBins, "need at least 2 bins");
  zero_policy.validate(bins);
}

std::shared_ptr<const ModelCurve> ModelSpectrumCache::curve(double b, double c, double epsilon,
                                                            double b_max) {
  const auto key = std::make_tuple(b, c, epsilon);
  std::lock_guard lock(mutex_);
  auto it = curves_.find(key);
  if (it != curves_.end()) return it->second;
  ModelGridOptions options = options_;
  options.epsilon = epsilon;
  auto made = std::make_shared<const ModelCurve>(
      model_curve(NoiseModelParams{b, c, b_max}, options));
  curves_.emplace(key, made);
  return made;
}

std::size_t ModelSpectrumCache::size() const {
  std::lock_guard lock(mutex_);
  return curves_.size();
}

EstimationResult estimate_window(const StandardizedWindow& window, const SearchGrid& grid,
                                 ModelSpectrumCache& cache, bool retain_surface) {
  grid.validate();
  const double c = static_cast<double>(window.rows()) / static_cast<double>(window.cols());
  const auto p_limit = std::min(window.rows(), window.cols());
  const auto np = grid.p_values.size();
  const auto nb = grid.b_values.size();
  constexpr double kFailed = std::numeric_limits<double>::infinity();

  std::vector<std::shared_ptr<const ModelCurve>> curves(nb);
  double model_edge = 0.0;
  for (std::size_t j = 0; j < nb; ++j) {
    try {
      curves[j] = cache.curve(grid.b_values[j], c, grid.epsilon, grid.b_max);
      model_edge = std::max(model_edge, curves[j]->upper_edge);
    } catch (const Error&) {
      curves[j].reset();
    }
  }

  const ResidualSpectra spectra(window);
  const auto edges = shared_bin_edges(spectra.largest(), model_edge, grid.bins);

  std::vector<std::optional<std::vector<double>>> model(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    if (!curves[j]) continue;
    try {
      model[j] = bin_model_curve(*curves[j], edges).masses;
    } catch (const Error&) {
    }
  }

  Eigen::MatrixXd surface = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(nb), kFailed);
  EstimationResult result;
  result.end_index = window.end_index;
  double best = kFailed;
  for (std::size_t i = 0; i < np; ++i) {
    const int p = grid.p_values[i];
    if (p > p_limit) continue;
    const auto eig = spectra.at_level(p);
    const auto real = histogram_density(eig, edges).density.masses;
    for (std::size_t j = 0; j < nb; ++j) {
      if (!model[j]) continue;
      const double d = js_divergence(real, *model[j], grid.zero_policy);
      surface(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      const bool better = d < best ||
                          (d == best && (p < result.p_hat ||
                                         (p == result.p_hat && grid.b_values[j] < result.b_hat)));
      if (better) {
        best = d;
        result.p_hat = p;
        result.b_hat = grid.b_values[j];
      }
    }
  }
  if (result.p_hat < 0) {
    throw Error(ErrorCode::kGridExhausted,
                "no (p, b) pair could be evaluated at end_index " +
                    std::to_string(window.end_index));
  }
  result.divergence = best;
  if (retain_surface) result.divergence_surface = std::move(surface);
  return result;
}

EstimationResult estimate_window(const StandardizedWindow& window, const SearchGrid& grid,
                                 bool retain_surface) {
  ModelSpectrumCache cache;
  return estimate_window(window, grid, cache, retain_surface);
}

std::size_t Timeline::failures() const {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.ok(); }));
}

Timeline sweep(const RawDataSource& source, const WindowSpec& spec, const SearchGrid& grid,
               ModelSpectrumCache& cache, const SweepOptions& options) {
  spec.validate();
  grid.validate();
  if (spec.rows != source.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "window rows differ from source rows");
  }
  if (source.t() < spec.length) {
    throw Error(ErrorCode::kWindowOutOfRange, "source shorter than the window");
  }
  Timeline timeline;
  timeline.spec = spec;
  const auto count = static_cast<std::size_t>(window_count(source.t(), spec));
  timeline.results.resize(count);

  // Warm the cache so worker threads only read it.
  const double c = spec.aspect_ratio();
  for (double b : grid.b_values) {
    try {
      cache.curve(b, c, grid.epsilon, grid.b_max);
    } catch (const Error&) {
    }
  }

  parallel_for(count, options.workers, [&](std::size_t k) {
    const Eigen::Index end = spec.length + static_cast<Eigen::Index>(k) * spec.stride;
    EstimationResult& slot = timeline.results[k];
    try {
      const auto raw = cut_window(source, spec, end);
      const auto window = standardize(raw, options.estimate.standardize);
      slot = estimate_window(window, grid, cache, options.estimate.retain_surface);
    } catch (const Error& e) {
      slot = EstimationResult{};
      slot.end_index = end;
      slot.failure = e.what();
    }
  });
  return timeline;
}

Timeline sweep(const RawDataSource& source, const WindowSpec& spec, const SearchGrid& grid,
               const SweepOptions& options) {
  ModelSpectrumCache cache;
  return sweep(source, spec, grid, cache, options);
}

RunAverage average_runs(const std::vector<Timeline>& timelines) {
  if (timelines.empty()) throw Error(ErrorCode::kIndexMismatch, "no timelines to average");
  const auto& first = timelines.front().results;
  for (const auto& t : timelines) {
    bool same = t.results.size() == first.size();
    for (std::size_t k = 0; same && k < first.size(); ++k) {
      same = t.results[k].end_index == first[k].end_index;
    }
    if (!same) throw Error(ErrorCode::kIndexMismatch, "timelines cover different end indices");
  }
  RunAverage avg;
  avg.run_count = timelines.size();
  for (std::size_t k = 0; k < first.size(); ++k) {
    double p = 0.0;
    double b = 0.0;
    std::size_t used = 0;
    for (const auto& t : timelines) {
      const auto& r = t.results[k];
      if (!r.ok()) continue;
      p += r.p_hat;
      b += r.b_hat;
      ++used;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    avg.end_index.push_back(first[k].end_index);
    avg.p_mean.push_back(used ? p / static_cast<double>(used) : nan);
    avg.b_mean.push_back(used ? b / static_cast<double>(used) : nan);
    avg.runs_used.push_back(used);
  }
  return avg;
}

std::vector<ChangeAnnotation> detect_changes(const RunAverage& average, double threshold,
                                             std::size_t hold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be > 0");
  if (hold < 1) throw Error(ErrorCode::kInvalidArgument, "hold must be >= 1");
  const auto& p = average.p_mean;
  std::vector<ChangeAnnotation> flags;
  std::vector<double> trailing(hold);

  std::size_t i = hold;
  while (i + hold <= p.size()) {
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(i - hold),
              p.begin() + static_cast<std::ptrdiff_t>(i), trailing.begin());
    bool usable = std::none_of(trailing.begin(), trailing.end(),
                               [](double v) { return std::isnan(v); });
    double baseline = 0.0;
    if (usable) {
      std::sort(trailing.begin(), trailing.end());
      baseline = hold % 2 ? trailing[hold / 2]
                          : 0.5 * (trailing[hold / 2 - 1] + trailing[hold / 2]);
    }
    int sign = 0;
    for (std::size_t j = i; usable && j < i + hold; ++j) {
      const double shift = p[j] - baseline;
      const int s = shift > 0 ? 1 : -1;
      if (std::isnan(shift) || std::abs(shift) < threshold || (sign != 0 && s != sign)) {
        usable = false;
      }
      sign = s;
    }
    if (usable) {
      flags.push_back({average.end_index[i], sign, p[i] - baseline});
      i += hold;
    } else {
      ++i;
    }
  }
  return flags;
}

}  // namespace rmtfactor
