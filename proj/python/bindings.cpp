#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rmtfactor/datagen.hpp"
#include "rmtfactor/divergence.hpp"
#include "rmtfactor/empirical_spectrum.hpp"
#include "rmtfactor/error.hpp"
#include "rmtfactor/estimator.hpp"
#include "rmtfactor/model_spectrum.hpp"
#include "rmtfactor/run.hpp"

namespace py = pybind11;
using namespace rmtfactor;

namespace {

SearchGrid make_grid(int p_max, double b_step, double b_max, std::size_t bins, double epsilon) {
  SearchGrid g = SearchGrid::standard(p_max, b_step, b_max);
  g.bins = bins;
  g.epsilon = epsilon;
  return g;
}

py::dict timeline_dict(const Timeline& t) {
  std::vector<Eigen::Index> end;
  std::vector<int> p;
  std::vector<double> b, d;
  std::vector<std::optional<std::string>> failure;
  for (const auto& r : t.results) {
    end.push_back(r.end_index);
    p.push_back(r.p_hat);
    b.push_back(r.ok() ? r.b_hat : std::numeric_limits<double>::quiet_NaN());
    d.push_back(r.ok() ? r.divergence : std::numeric_limits<double>::quiet_NaN());
    failure.push_back(r.failure);
  }
  py::dict out;
  out["end_index"] = end;
  out["p_hat"] = p;
  out["b_hat"] = b;
  out["divergence"] = d;
  out["failure"] = failure;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Factor count and noise autocorrelation from windowed eigenvalue spectra";

  static py::exception<Error> error(m, "RmtError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object instance = exc(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(exc.ptr(), instance.ptr());
    }
  });

  m.def("solve_moment_polynomial",
        [](std::complex<double> z, double b, double c) {
          return solve_moment_polynomial(z, NoiseModelParams{b, c});
        },
        py::arg("z"), py::arg("b"), py::arg("c"));
  m.def("physical_root",
        [](std::complex<double> z, double b, double c) {
          const NoiseModelParams params{b, c};
          return select_physical_root(solve_moment_polynomial(z, params), z, params);
        },
        py::arg("z"), py::arg("b"), py::arg("c"));
  m.def("green_function", &green_function, py::arg("m"), py::arg("z"));
  m.def("ar1_mgf", &ar1_mgf, py::arg("z"), py::arg("b"));

  m.def("model_curve",
        [](double b, double c, double epsilon) {
          ModelGridOptions options;
          options.epsilon = epsilon;
          const auto curve = model_curve(NoiseModelParams{b, c}, options);
          py::dict out;
          out["lambda"] = curve.lambda;
          out["rho"] = curve.rho;
          out["raw_mass"] = curve.raw_mass;
          out["upper_edge"] = curve.upper_edge;
          out["clipped"] = curve.clipped;
          return out;
        },
        py::arg("b"), py::arg("c"), py::arg("epsilon") = 1e-3);
  m.def("model_density",
        [](double b, double c, const std::vector<double>& edges, double epsilon) {
          ModelGridOptions options;
          options.epsilon = epsilon;
          return bin_model_curve(model_curve(NoiseModelParams{b, c}, options), edges).masses;
        },
        py::arg("b"), py::arg("c"), py::arg("edges"), py::arg("epsilon") = 1e-3);

  m.def("kl_divergence",
        [](const std::vector<double>& p, const std::vector<double>& q, double eps) {
          return kl_divergence(p, q, ZeroHandlingPolicy{eps});
        },
        py::arg("p"), py::arg("q"), py::arg("epsilon") = 1e-12);
  m.def("js_divergence",
        [](const std::vector<double>& p, const std::vector<double>& q, double eps) {
          return js_divergence(p, q, ZeroHandlingPolicy{eps});
        },
        py::arg("p"), py::arg("q"), py::arg("epsilon") = 1e-12);

  m.def("residual_eigenvalues",
        [](const Eigen::MatrixXd& window, int p) {
          return ResidualSpectra(standardize(RawWindow{window, window.cols()})).at_level(p);
        },
        py::arg("window"), py::arg("p") = 0);

  m.def("estimate_window",
        [](const Eigen::MatrixXd& window, int p_max, double b_step, double b_max,
           std::size_t bins, double epsilon) {
          const auto grid = make_grid(p_max, b_step, b_max, bins, epsilon);
          const auto r = estimate_window(standardize(RawWindow{window, window.cols()}), grid, true);
          py::dict out;
          out["p_hat"] = r.p_hat;
          out["b_hat"] = r.b_hat;
          out["divergence"] = r.divergence;
          out["surface"] = *r.divergence_surface;
          out["p_values"] = grid.p_values;
          out["b_values"] = grid.b_values;
          return out;
        },
        py::arg("window"), py::arg("p_max") = 10, py::arg("b_step") = 0.05,
        py::arg("b_max") = 0.95, py::arg("bins") = 100, py::arg("epsilon") = 1e-3);

  m.def("sweep",
        [](const Eigen::MatrixXd& source, Eigen::Index window, Eigen::Index stride, int p_max,
           double b_step, std::size_t workers) {
          const auto grid = make_grid(p_max, b_step, 0.95, 100, 1e-3);
          SweepOptions options;
          options.workers = workers;
          Timeline t;
          {
            py::gil_scoped_release release;
            t = sweep(RawDataSource(source), WindowSpec{source.rows(), window, stride}, grid,
                      options);
          }
          return timeline_dict(t);
        },
        py::arg("source"), py::arg("window") = 250, py::arg("stride") = 1,
        py::arg("p_max") = 10, py::arg("b_step") = 0.05, py::arg("workers") = 1);

  m.def("detect_changes",
        [](const std::vector<double>& p_ave, const std::vector<Eigen::Index>& end_index,
           double threshold, std::size_t hold) {
          if (end_index.size() != p_ave.size()) {
            throw Error(ErrorCode::kIndexMismatch, "end_index and p_ave differ in length");
          }
          RunAverage avg;
          avg.end_index = end_index;
          avg.p_mean = p_ave;
          avg.b_mean.assign(p_ave.size(), 0.0);
          avg.runs_used.assign(p_ave.size(), 1);
          avg.run_count = 1;
          std::vector<std::tuple<Eigen::Index, int, double>> out;
          for (const auto& a : detect_changes(avg, threshold, hold)) {
            out.emplace_back(a.end_index, a.direction, a.shift);
          }
          return out;
        },
        py::arg("p_ave"), py::arg("end_index"), py::arg("threshold") = 0.5,
        py::arg("hold") = 3);

  m.def("generate_ar1",
        [](double b, Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
           Eigen::Index burn_in) { return generate_ar1(Ar1Spec{b, seed}, rows, cols, burn_in); },
        py::arg("b"), py::arg("rows"), py::arg("cols"), py::arg("seed") = 0,
        py::arg("burn_in") = 200);
  m.def("synthesize_case",
        [](const std::string& name, double b, Eigen::Index rows, Eigen::Index length,
           std::uint64_t seed, double event_gain, bool direct) {
          CaseOptions options;
          options.mode = direct ? EventMode::kDirect : EventMode::kLoading;
          options.event_gain = event_gain;
          options.loading_seed = derive_seed(seed, 0x4c4f4144ULL);
          const Eigen::Index t = length > 0 ? length : reference_length(name);
          return synthesize_case(reference_schedule(name), Ar1Spec{b, seed}, rows, t, options)
              .values();
        },
        py::arg("case") = "case1", py::arg("b") = 0.5, py::arg("rows") = 118,
        py::arg("length") = 0, py::arg("seed") = 1, py::arg("event_gain") = 0.125,
        py::arg("direct") = false);

  m.def("run_spectrum",
        [](double b, double c, const std::filesystem::path& output) {
          run_spectrum(b, c, output);
        },
        py::arg("b"), py::arg("c"), py::arg("output"));
}
