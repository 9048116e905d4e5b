#include "rmtfactor/data_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rmtfactor/error.hpp"

namespace rmtfactor {

RawDataSource::RawDataSource(Eigen::MatrixXd values, double sample_period)
    : values_(std::move(values)), sample_period_(sample_period) {
  if (values_.rows() < 2 || values_.cols() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "raw data source needs at least 2 rows and 2 columns, got " +
                    std::to_string(values_.rows()) + "x" +
                    std::to_string(values_.cols()));
  }
  if (!values_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "raw data source contains non-finite entries");
  }
}

void WindowSpec::validate() const {
  if (rows < 1) throw Error(ErrorCode::kInvalidArgument, "window rows must be >= 1");
  if (length < 2) throw Error(ErrorCode::kInvalidArgument, "window length must be >= 2");
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
}

RawWindow cut_window(const RawDataSource& source, const WindowSpec& spec,
                     Eigen::Index end_index) {
  spec.validate();
  if (spec.rows != source.n()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "window rows " + std::to_string(spec.rows) +
                    " != source rows " + std::to_string(source.n()));
  }
  if (end_index < spec.length || end_index > source.t()) {
    throw Error(ErrorCode::kWindowOutOfRange,
                "end_index " + std::to_string(end_index) + " outside [" +
                    std::to_string(spec.length) + ", " +
                    std::to_string(source.t()) + "]");
  }
  RawWindow window;
  window.values = source.values().middleCols(end_index - spec.length, spec.length);
  window.end_index = end_index;
  return window;
}

StandardizedWindow standardize(const RawWindow& window,
                               const StandardizeOptions& options) {
  StandardizedWindow out;
  out.values = window.values;
  out.end_index = window.end_index;
  const auto cols = static_cast<double>(out.values.cols());

  for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
    auto row = out.values.row(i);
    double mean = row.mean();
    double sd = std::sqrt((row.array() - mean).square().sum() / cols);
    if (!(sd > options.sigma_min)) {
      if (!options.jitter) {
        throw Error(ErrorCode::kDegenerateRow,
                    "row " + std::to_string(i) + " has standard deviation " +
                        std::to_string(sd));
      }
      std::mt19937_64 rng(options.jitter_seed ^
                          (static_cast<std::uint64_t>(window.end_index) << 20) ^
                          static_cast<std::uint64_t>(i));
      std::uniform_real_distribution<double> u(-options.jitter_magnitude,
                                               options.jitter_magnitude);
      for (Eigen::Index j = 0; j < row.size(); ++j) row(j) += u(rng);
      mean = row.mean();
      sd = std::sqrt((row.array() - mean).square().sum() / cols);
    }
    row.array() = (row.array() - mean) / sd;
  }
  return out;
}

Eigen::Index window_count(Eigen::Index t, const WindowSpec& spec) {
  if (t < spec.length) return 0;
  return (t - spec.length) / spec.stride + 1;
}

}  // namespace rmtfactor
