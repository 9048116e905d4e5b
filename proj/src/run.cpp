#include "rmtfactor/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "rmtfactor/empirical_spectrum.hpp"
#include "rmtfactor/io.hpp"

namespace rmtfactor {
namespace {

constexpr const char* kVersion = "0.3.0";

Error config_error(const std::string& message) { return Error(ErrorCode::kConfigError, message); }

std::string mode_name(EventMode mode) { return mode == EventMode::kDirect ? "direct" : "loading"; }

std::string innovation_name(Innovation i) {
  return i == Innovation::kGaussian ? "gaussian" : "student";
}

nlohmann::json annotations_json(const std::vector<ChangeAnnotation>& flags) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : flags) {
    out.push_back({{"end_index", f.end_index}, {"direction", f.direction}, {"shift", f.shift}});
  }
  return out;
}

template <typename T>
void take(const nlohmann::json& doc, const char* key, T& target) {
  if (doc.contains(key) && !doc.at(key).is_null()) target = doc.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
  for (const auto& path : inputs) {
    if (!std::filesystem::exists(path)) throw config_error("input file not found: " + path.string());
  }
  if (inputs.empty()) {
    reference_schedule(case_name);  // throws on unknown names
    if (rows < 2) throw config_error("rows must be >= 2");
    if (rows < 117 && case_name != "null") {
      throw config_error("reference cases address channels up to 117; rows must be >= 117");
    }
    if (runs < 1) throw config_error("runs must be >= 1");
    if (!(std::abs(b_noise) < 1.0)) throw config_error("b_noise must satisfy |b| < 1");
    if (innovation == Innovation::kStudentT && !(student_dof > 2.0)) {
      throw config_error("student dof must exceed 2");
    }
  }
  if (window < 2) throw config_error("window length must be >= 2");
  if (stride < 1) throw config_error("stride must be >= 1");
  if (p_max < 0) throw config_error("p_max must be >= 0");
  if (!(b_step > 0.0)) throw config_error("b step must be > 0");
  if (!(b_max >= 0.0 && b_max < 1.0)) throw config_error("b_max must lie in [0, 1)");
  if (bins < 2) throw config_error("bins must be >= 2");
  if (!(epsilon > 0.0)) throw config_error("epsilon must be > 0");
  if (!(detect_threshold > 0.0)) throw config_error("detection threshold must be > 0");
  if (detect_hold < 1) throw config_error("detection hold must be >= 1");
  if (output_dir.empty()) throw config_error("output directory is empty");
}

SearchGrid RunConfig::grid() const {
  SearchGrid g = SearchGrid::standard(p_max, b_step, b_max);
  g.epsilon = epsilon;
  g.bins = bins;
  return g;
}

WindowSpec RunConfig::window_spec(Eigen::Index source_rows) const {
  return WindowSpec{source_rows, window, stride};
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& p : c.inputs) inputs.push_back(p.string());
  return {{"inputs", inputs},
          {"skip_header", c.skip_header},
          {"case", c.case_name},
          {"rows", c.rows},
          {"length", c.length},
          {"window", c.window},
          {"stride", c.stride},
          {"p_max", c.p_max},
          {"b_step", c.b_step},
          {"b_max", c.b_max},
          {"bins", c.bins},
          {"epsilon", c.epsilon},
          {"runs", c.runs},
          {"seed", c.seed},
          {"workers", c.workers},
          {"b_noise", c.b_noise},
          {"event_mode", mode_name(c.event_mode)},
          {"event_gain", c.event_gain},
          {"innovation", innovation_name(c.innovation)},
          {"student_dof", c.student_dof},
          {"detect_threshold", c.detect_threshold},
          {"detect_hold", c.detect_hold},
          {"output_dir", c.output_dir.string()},
          {"dump_eigenvalues", c.dump_eigenvalues},
          {"dump_densities", c.dump_densities},
          {"dump_surface", c.dump_surface}};
}

void apply_json(const nlohmann::json& doc_in, RunConfig& c) {
  const nlohmann::json& doc = doc_in.contains("config") ? doc_in.at("config") : doc_in;
  try {
    if (doc.contains("inputs")) {
      c.inputs.clear();
      for (const auto& p : doc.at("inputs")) c.inputs.emplace_back(p.get<std::string>());
    }
    take(doc, "skip_header", c.skip_header);
    take(doc, "case", c.case_name);
    take(doc, "rows", c.rows);
    take(doc, "length", c.length);
    take(doc, "window", c.window);
    take(doc, "stride", c.stride);
    take(doc, "p_max", c.p_max);
    take(doc, "b_step", c.b_step);
    take(doc, "b_max", c.b_max);
    take(doc, "bins", c.bins);
    take(doc, "epsilon", c.epsilon);
    take(doc, "runs", c.runs);
    take(doc, "seed", c.seed);
    take(doc, "workers", c.workers);
    take(doc, "b_noise", c.b_noise);
    take(doc, "event_gain", c.event_gain);
    take(doc, "student_dof", c.student_dof);
    take(doc, "detect_threshold", c.detect_threshold);
    take(doc, "detect_hold", c.detect_hold);
    take(doc, "dump_eigenvalues", c.dump_eigenvalues);
    take(doc, "dump_densities", c.dump_densities);
    take(doc, "dump_surface", c.dump_surface);
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("event_mode")) {
      const auto m = doc.at("event_mode").get<std::string>();
      if (m != "direct" && m != "loading") throw config_error("unknown event_mode '" + m + "'");
      c.event_mode = m == "direct" ? EventMode::kDirect : EventMode::kLoading;
    }
    if (doc.contains("innovation")) {
      const auto m = doc.at("innovation").get<std::string>();
      if (m != "gaussian" && m != "student") throw config_error("unknown innovation '" + m + "'");
      c.innovation = m == "gaussian" ? Innovation::kGaussian : Innovation::kStudentT;
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
}

std::uint64_t run_seed(std::uint64_t base_seed, int run) {
  return derive_seed(base_seed, 0x52554eULL, static_cast<std::uint64_t>(run));
}

void write_timeline_csv(std::ostream& out, const std::vector<Timeline>& timelines) {
  out << "run,end_index,p_hat,b_hat,divergence,status\n" << std::setprecision(12);
  for (std::size_t k = 0; k < timelines.size(); ++k) {
    for (const auto& r : timelines[k].results) {
      out << k << ',' << r.end_index << ',';
      if (r.ok()) {
        out << r.p_hat << ',' << r.b_hat << ',' << r.divergence << ",ok\n";
      } else {
        std::string reason = *r.failure;
        for (char& ch : reason) {
          if (ch == ',' || ch == '\n') ch = ';';
        }
        out << ",,," << reason << '\n';
      }
    }
  }
}

void write_run_average_csv(std::ostream& out, const RunAverage& average) {
  out << "end_index,p_hat_ave,b_hat_ave,runs_used\n" << std::setprecision(12);
  for (std::size_t k = 0; k < average.end_index.size(); ++k) {
    out << average.end_index[k] << ',' << average.p_mean[k] << ',' << average.b_mean[k] << ','
        << average.runs_used[k] << '\n';
  }
}

RunArtifacts run_detect(const RunConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  std::vector<RawDataSource> sources;
  std::vector<std::uint64_t> seeds;
  if (!config.inputs.empty()) {
    for (const auto& path : config.inputs) {
      sources.push_back(read_source_csv(path, CsvReadOptions{config.skip_header}));
    }
  } else {
    const auto schedule = reference_schedule(config.case_name);
    const Eigen::Index length =
        config.length > 0 ? config.length : reference_length(config.case_name);
    CaseOptions options;
    options.mode = config.event_mode;
    options.event_gain = config.event_gain;
    for (int run = 0; run < config.runs; ++run) {
      const auto seed = run_seed(config.seed, run);
      seeds.push_back(seed);
      Ar1Spec noise{config.b_noise, seed, config.innovation, config.student_dof};
      options.loading_seed = derive_seed(config.seed, 0x4c4f4144ULL);
      sources.push_back(synthesize_case(schedule, noise, config.rows, length, options));
    }
  }

  const SearchGrid grid = config.grid();
  ModelSpectrumCache cache;
  SweepOptions sweep_options;
  sweep_options.workers = config.workers;
  sweep_options.estimate.retain_surface = config.dump_surface;

  RunArtifacts artifacts;
  for (const auto& source : sources) {
    const auto spec = config.window_spec(source.n());
    if (source.t() < spec.length) {
      throw config_error("source has " + std::to_string(source.t()) +
                         " samples, fewer than the window length");
    }
    artifacts.timelines.push_back(sweep(source, spec, grid, cache, sweep_options));
  }
  artifacts.average = average_runs(artifacts.timelines);
  artifacts.average.annotations =
      detect_changes(artifacts.average, config.detect_threshold, config.detect_hold);
  for (auto& t : artifacts.timelines) {
    RunAverage single = average_runs({t});
    t.annotations = detect_changes(single, config.detect_threshold, config.detect_hold);
  }

  std::filesystem::create_directories(config.output_dir);
  artifacts.timeline_csv = config.output_dir / "timeline.csv";
  artifacts.average_csv = config.output_dir / "run_average.csv";
  artifacts.report_json = config.output_dir / "report.json";

  write_file_atomic(artifacts.timeline_csv,
                    [&](std::ostream& out) { write_timeline_csv(out, artifacts.timelines); });
  write_file_atomic(artifacts.average_csv,
                    [&](std::ostream& out) { write_run_average_csv(out, artifacts.average); });

  if (config.dump_eigenvalues) {
    auto path = config.output_dir / "eigenvalues.csv";
    write_file_atomic(path, [&](std::ostream& out) {
      for (std::size_t k = 0; k < sources.size(); ++k) {
        const auto spec = config.window_spec(sources[k].n());
        for (const auto& r : artifacts.timelines[k].results) {
          if (!r.ok()) continue;
          const auto w = standardize(cut_window(sources[k], spec, r.end_index));
          auto eig = ResidualSpectra(w).at_level(0);
          out << k << ',';
          write_eigenvalue_row(out, r.end_index, eig);
        }
      }
    });
    artifacts.dumps.push_back(path);
  }
  if (config.dump_densities) {
    const double c = static_cast<double>(sources.front().n()) / static_cast<double>(config.window);
    for (double b : grid.b_values) {
      std::ostringstream name;
      name << "model_density_b" << std::fixed << std::setprecision(2) << b << ".csv";
      auto path = config.output_dir / name.str();
      const auto curve = cache.curve(b, c, grid.epsilon, grid.b_max);
      write_file_atomic(path, [&](std::ostream& out) { write_model_curve(out, *curve); });
      artifacts.dumps.push_back(path);
    }
  }
  if (config.dump_surface) {
    auto path = config.output_dir / "divergence_surface.csv";
    write_file_atomic(path, [&](std::ostream& out) {
      out << "run,end_index,p,b,divergence\n" << std::setprecision(12);
      for (std::size_t k = 0; k < artifacts.timelines.size(); ++k) {
        for (const auto& r : artifacts.timelines[k].results) {
          if (!r.divergence_surface) continue;
          const auto& s = *r.divergence_surface;
          for (Eigen::Index i = 0; i < s.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.cols(); ++j) {
              out << k << ',' << r.end_index << ',' << grid.p_values[i] << ','
                  << grid.b_values[j] << ',' << s(i, j) << '\n';
            }
          }
        }
      }
    });
    artifacts.dumps.push_back(path);
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::size_t failures = 0;
  for (const auto& t : artifacts.timelines) failures += t.failures();
  nlohmann::json per_run = nlohmann::json::array();
  for (const auto& t : artifacts.timelines) per_run.push_back(annotations_json(t.annotations));
  nlohmann::json grid_json = {{"p_values", grid.p_values},
                              {"b_values", grid.b_values},
                              {"epsilon", grid.epsilon},
                              {"bins", grid.bins},
                              {"zero_epsilon", grid.zero_policy.epsilon}};
  nlohmann::json report = {
      {"version", kVersion},
      {"config", to_json(config)},
      {"grid", grid_json},
      {"seeds", seeds},
      {"windows", artifacts.average.end_index.size()},
      {"failed_windows", failures},
      {"annotations", annotations_json(artifacts.average.annotations)},
      {"run_annotations", per_run},
      {"wall_clock_seconds", seconds},
      {"outputs",
       {{"timeline", artifacts.timeline_csv.filename().string()},
        {"run_average", artifacts.average_csv.filename().string()}}}};
  write_file_atomic(artifacts.report_json,
                    [&](std::ostream& out) { out << report.dump(2) << '\n'; });
  return artifacts;
}

ModelCurve run_spectrum(double b, double c, const std::filesystem::path& output, double epsilon,
                        double b_max) {
  if (!(c > 0.0) || !std::isfinite(c)) throw config_error("aspect ratio c must be positive");
  if (!(b_max >= 0.0 && b_max < 1.0)) throw config_error("b_max must lie in [0, 1)");
  if (!(b >= 0.0 && b <= b_max)) throw config_error("b must lie in [0, b_max]");
  if (!(epsilon > 0.0)) throw config_error("epsilon must be > 0");
  ModelGridOptions options;
  options.epsilon = epsilon;
  auto curve = model_curve(NoiseModelParams{b, c, b_max}, options);
  if (!output.empty()) {
    if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
    write_file_atomic(output, [&](std::ostream& out) { write_model_curve(out, curve); });
  }
  return curve;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError: return 2;
    case ErrorCode::kIoError: return 3;
    case ErrorCode::kParseError: return 4;
    default: return 10 + static_cast<int>(code);
  }
}

}  // namespace rmtfactor
