#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace rmtfactor {

/// Full measurement record: one row per measured variable, one column per
/// sampling time, columns in chronological order.
class RawDataSource {
 public:
  /// Throws Error(kInvalidArgument) unless rows >= 2, cols >= 2 and every
  /// entry is finite.
  explicit RawDataSource(Eigen::MatrixXd values, double sample_period = 1.0);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index n() const noexcept { return values_.rows(); }
  Eigen::Index t() const noexcept { return values_.cols(); }
  double sample_period() const noexcept { return sample_period_; }

 private:
  Eigen::MatrixXd values_;
  double sample_period_;
};

struct WindowSpec {
  Eigen::Index rows = 118;   // N, must equal the source row count
  Eigen::Index length = 250; // T
  Eigen::Index stride = 1;

  double aspect_ratio() const noexcept {
    return static_cast<double>(rows) / static_cast<double>(length);
  }
  /// Throws Error(kInvalidArgument) on T < 2, stride < 1 or rows < 1.
  void validate() const;
};

/// N x T block of the source. end_index is the 1-based index of the last
/// included sample, so column j (1-based) is source column end_index - T + j.
struct RawWindow {
  Eigen::MatrixXd values;
  Eigen::Index end_index = 0;
};

/// Rows have mean 0 and population variance 1.
struct StandardizedWindow {
  Eigen::MatrixXd values;
  Eigen::Index end_index = 0;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
};

struct StandardizeOptions {
  double sigma_min = 1e-12;
  // When set, constant rows receive uniform jitter of this magnitude instead
  // of raising DegenerateRow.
  bool jitter = false;
  double jitter_magnitude = 1e-9;
  std::uint64_t jitter_seed = 0;
};

RawWindow cut_window(const RawDataSource& source, const WindowSpec& spec,
                     Eigen::Index end_index);

StandardizedWindow standardize(const RawWindow& window,
                               const StandardizeOptions& options = {});

/// Number of windows a stride-s sweep produces over a source of length t.
Eigen::Index window_count(Eigen::Index t, const WindowSpec& spec);

}  // namespace rmtfactor
