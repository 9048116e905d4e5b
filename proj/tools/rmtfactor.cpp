// Command-line front end: detect, spectrum, generate.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rmtfactor/io.hpp"
#include "rmtfactor/run.hpp"

using namespace rmtfactor;

namespace {

void print_error(const std::string& kind, int code, const std::string& message) {
  nlohmann::json record = {{"error", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << record.dump() << std::endl;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, "config file " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-count and noise-autocorrelation estimation from sliding-window spectra"};
  app.require_subcommand(1);

  // Options are collected into optionals so a config file can sit between
  // defaults and explicit flags.
  auto* detect = app.add_subcommand("detect", "Estimate p_hat and b_hat per window and flag changes");
  std::string config_path;
  std::vector<std::string> inputs;
  std::optional<bool> skip_header;
  std::optional<std::string> case_name, output_dir, event_mode, innovation;
  std::optional<long> rows, length, window, stride;
  std::optional<int> p_max, runs;
  std::optional<double> b_step, b_max, epsilon, b_noise, event_gain, dof, threshold;
  std::optional<std::size_t> bins, workers, hold;
  std::optional<std::uint64_t> seed;
  bool dump_eig = false, dump_dens = false, dump_surf = false;

  detect->add_option("--config", config_path, "JSON config or previous report.json");
  detect->add_option("--input", inputs, "CSV source (rows = variables); repeat for several runs");
  detect->add_flag("--skip-header", skip_header, "Skip the first CSV line");
  detect->add_option("--case", case_name, "Synthetic case: case1, case2, case3, null");
  detect->add_option("--rows", rows, "Synthetic variable count N");
  detect->add_option("--length", length, "Synthetic sample count t (0 = case default)");
  detect->add_option("--window", window, "Window length T");
  detect->add_option("--stride", stride, "Window stride");
  detect->add_option("--p-max", p_max, "Largest factor count searched");
  detect->add_option("--b-step", b_step, "Step of the b grid");
  detect->add_option("--b-max", b_max, "Largest b searched (< 1)");
  detect->add_option("--bins", bins, "Histogram bin count K");
  detect->add_option("--epsilon", epsilon, "Imaginary offset used for the model density");
  detect->add_option("--runs", runs, "Number of synthetic runs");
  detect->add_option("--seed", seed, "Base seed");
  detect->add_option("--workers", workers, "Worker threads (0 = hardware concurrency)");
  detect->add_option("--b-noise", b_noise, "AR(1) coefficient of the synthetic noise");
  detect->add_option("--event-mode", event_mode, "loading or direct");
  detect->add_option("--event-gain", event_gain, "Amplitude multiplier in loading mode");
  detect->add_option("--innovation", innovation, "gaussian or student");
  detect->add_option("--student-dof", dof, "Degrees of freedom for student innovations");
  detect->add_option("--threshold", threshold, "Detection threshold on p_ave");
  detect->add_option("--hold", hold, "Windows a shift must persist");
  detect->add_option("--output", output_dir, "Output directory");
  detect->add_flag("--dump-eigenvalues", dump_eig, "Write eigenvalues.csv");
  detect->add_flag("--dump-densities", dump_dens, "Write model density CSV per b");
  detect->add_flag("--dump-surface", dump_surf, "Write the divergence surface per window");

  auto* spectrum = app.add_subcommand("spectrum", "Write the model eigenvalue density for (b, c)");
  double sb = 0.0, sc = 118.0 / 250.0, seps = 1e-3, sbmax = 0.95;
  std::string sout = "model_density.csv";
  spectrum->add_option("--b", sb, "AR(1) coefficient");
  spectrum->add_option("--c", sc, "Aspect ratio N/T");
  spectrum->add_option("--epsilon", seps, "Imaginary offset");
  spectrum->add_option("--b-max", sbmax, "Upper bound accepted for b");
  spectrum->add_option("--output", sout, "Output CSV (lambda,rho)");

  auto* generate = app.add_subcommand("generate", "Write a synthetic source CSV");
  std::string gcase = "case1", gout = "source.csv", gschedule;
  long grows = 118, glength = 0;
  double gb = 0.5, ggain = 0.125;
  std::uint64_t gseed = 1;
  std::string gmode = "loading";
  generate->add_option("--case", gcase, "case1, case2, case3 or null");
  generate->add_option("--schedule", gschedule, "JSON event schedule (overrides --case events)");
  generate->add_option("--rows", grows, "Variable count N");
  generate->add_option("--length", glength, "Sample count t (0 = case default)");
  generate->add_option("--b-noise", gb, "AR(1) coefficient");
  generate->add_option("--event-mode", gmode, "loading or direct");
  generate->add_option("--event-gain", ggain, "Amplitude multiplier in loading mode");
  generate->add_option("--seed", gseed, "Seed");
  generate->add_option("--output", gout, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("UsageError", 2, e.what());
    return 2;
  }

  try {
    if (detect->parsed()) {
      RunConfig config;
      if (!config_path.empty()) apply_json(load_json(config_path), config);
      if (!inputs.empty()) config.inputs.assign(inputs.begin(), inputs.end());
      if (skip_header) config.skip_header = *skip_header;
      if (case_name) config.case_name = *case_name;
      if (rows) config.rows = *rows;
      if (length) config.length = *length;
      if (window) config.window = *window;
      if (stride) config.stride = *stride;
      if (p_max) config.p_max = *p_max;
      if (b_step) config.b_step = *b_step;
      if (b_max) config.b_max = *b_max;
      if (bins) config.bins = *bins;
      if (epsilon) config.epsilon = *epsilon;
      if (runs) config.runs = *runs;
      if (seed) config.seed = *seed;
      if (workers) config.workers = *workers;
      if (b_noise) config.b_noise = *b_noise;
      if (event_gain) config.event_gain = *event_gain;
      if (dof) config.student_dof = *dof;
      if (threshold) config.detect_threshold = *threshold;
      if (hold) config.detect_hold = *hold;
      if (output_dir) config.output_dir = *output_dir;
      if (event_mode || innovation) {
        nlohmann::json patch;
        if (event_mode) patch["event_mode"] = *event_mode;
        if (innovation) patch["innovation"] = *innovation;
        apply_json(patch, config);
      }
      config.dump_eigenvalues = config.dump_eigenvalues || dump_eig;
      config.dump_densities = config.dump_densities || dump_dens;
      config.dump_surface = config.dump_surface || dump_surf;

      const auto artifacts = run_detect(config);
      nlohmann::json summary = {{"report", artifacts.report_json.string()},
                                {"windows", artifacts.average.end_index.size()},
                                {"annotations", nlohmann::json::array()}};
      for (const auto& a : artifacts.average.annotations) {
        summary["annotations"].push_back({{"end_index", a.end_index}, {"direction", a.direction}});
      }
      std::cout << summary.dump() << std::endl;
    } else if (spectrum->parsed()) {
      const auto curve = run_spectrum(sb, sc, sout, seps, sbmax);
      std::cout << nlohmann::json{{"output", sout},
                                  {"raw_mass", curve.raw_mass},
                                  {"upper_edge", curve.upper_edge}}
                       .dump()
                << std::endl;
    } else if (generate->parsed()) {
      if (gmode != "loading" && gmode != "direct") {
        throw Error(ErrorCode::kConfigError, "unknown event mode '" + gmode + "'");
      }
      EventSchedule schedule;
      if (!gschedule.empty()) {
        std::ifstream in(gschedule);
        if (!in) throw Error(ErrorCode::kIoError, "cannot open schedule: " + gschedule);
        schedule = read_schedule_json(in);
      } else {
        schedule = reference_schedule(gcase);
      }
      const long len = glength > 0 ? glength : reference_length(gcase);
      CaseOptions options;
      options.mode = gmode == "direct" ? EventMode::kDirect : EventMode::kLoading;
      options.event_gain = ggain;
      options.loading_seed = derive_seed(gseed, 0x4c4f4144ULL);
      const auto source = synthesize_case(schedule, Ar1Spec{gb, gseed}, grows, len, options);
      write_file_atomic(gout, [&](std::ostream& out) { write_source_csv(out, source); });
      std::cout << nlohmann::json{{"output", gout}, {"rows", source.n()}, {"cols", source.t()}}.dump()
                << std::endl;
    }
  } catch (const Error& e) {
    const int code = exit_code(e.code());
    print_error(std::string(to_string(e.code())), code, e.what());
    return code;
  } catch (const std::exception& e) {
    print_error("InternalError", 1, e.what());
    return 1;
  }
  return 0;
}
