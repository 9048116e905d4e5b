#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmtfactor/datagen.hpp"
#include "rmtfactor/error.hpp"
#include "rmtfactor/estimator.hpp"

namespace rmtfactor {

/// Everything needed to reproduce a detection run. Defaults mirror the
/// reference setup: N = 118, T = 250, stride 1, b_noise = 0.5.
struct RunConfig {
  std::vector<std::filesystem::path> inputs;  // one run per file; empty = synthetic
  bool skip_header = false;
  std::string case_name = "case1";
  Eigen::Index rows = 118;
  Eigen::Index length = 0;  // 0 = reference length of the case

  Eigen::Index window = 250;
  Eigen::Index stride = 1;
  int p_max = 10;
  double b_step = 0.05;
  double b_max = 0.95;
  std::size_t bins = 100;
  double epsilon = 1e-3;

  int runs = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  double b_noise = 0.5;
  EventMode event_mode = EventMode::kLoading;
  double event_gain = 0.125;
  Innovation innovation = Innovation::kGaussian;
  double student_dof = 5.0;

  double detect_threshold = 0.5;
  std::size_t detect_hold = 3;

  std::filesystem::path output_dir = "out";
  bool dump_eigenvalues = false;
  bool dump_densities = false;
  bool dump_surface = false;

  /// Throws Error(kConfigError) for invalid values or missing input files.
  void validate() const;
  SearchGrid grid() const;
  WindowSpec window_spec(Eigen::Index source_rows) const;
};

nlohmann::json to_json(const RunConfig& config);
/// Accepts a config object or a previous report (its "config" member); keys
/// that are absent keep the values already in `config`.
void apply_json(const nlohmann::json& doc, RunConfig& config);

/// Seed of synthetic run k.
std::uint64_t run_seed(std::uint64_t base_seed, int run);

struct RunArtifacts {
  std::filesystem::path timeline_csv;
  std::filesystem::path average_csv;
  std::filesystem::path report_json;
  std::vector<std::filesystem::path> dumps;
  RunAverage average;
  std::vector<Timeline> timelines;
};

/// Validates, runs every sweep, then writes timeline.csv, run_average.csv and
/// report.json (plus requested dumps) into output_dir. Nothing is written when
/// validation or any sweep fails.
RunArtifacts run_detect(const RunConfig& config);

/// Writes the model curve for (b, c) as "lambda,rho" CSV.
/// Throws Error(kConfigError) for b outside [0, b_max] or c <= 0.
ModelCurve run_spectrum(double b, double c, const std::filesystem::path& output,
                        double epsilon = 1e-3, double b_max = 0.95);

void write_timeline_csv(std::ostream& out, const std::vector<Timeline>& timelines);
void write_run_average_csv(std::ostream& out, const RunAverage& average);

/// Process exit code for each error kind (0 is success).
int exit_code(ErrorCode code);

}  // namespace rmtfactor
