// SPDX-License-Identifier: Apache-2.0
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "mpk/metrics.hpp"
#include "mpk/predictor.hpp"
#include "mpk/workloads.hpp"

namespace py = pybind11;
using namespace mpk;

namespace {

WorldOptions options_for(std::optional<std::size_t> eager_threshold) {
  WorldOptions opts;
  if (eager_threshold) opts.eager_threshold = *eager_threshold;
  return opts;
}

predictor::SpeedupCurve curve_from(const std::vector<int>& procs, const std::vector<double>& seconds,
                                   std::optional<double> serial) {
  if (procs.size() != seconds.size()) throw Error(ErrorKind::MalformedInput, "procs and seconds differ in length");
  predictor::SpeedupCurve curve;
  for (std::size_t i = 0; i < procs.size(); ++i) curve.points.push_back({procs[i], seconds[i]});
  curve.serial_seconds = serial;
  curve.validate();
  return curve;
}

workloads::ParamMap params_from(const std::map<std::string, std::string>& in) {
  return workloads::ParamMap(in.begin(), in.end());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "In-process message passing, speedup metrics and single-CPU speedup prediction";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  // metrics
  m.def("speedup", &metrics::speedup, py::arg("t_serial"), py::arg("t_parallel"));
  m.def("efficiency", &metrics::efficiency, py::arg("psi"), py::arg("p"));
  m.def("amdahl_bound", &metrics::amdahl_bound, py::arg("f"), py::arg("p"));
  m.def("gustafson_bound", &metrics::gustafson_bound, py::arg("s"), py::arg("p"));
  m.def(
      "parallel_time",
      [](std::function<double(double)> sigma, std::function<double(double)> phi,
         std::function<double(double, double)> kappa, double n, double p) {
        return metrics::parallel_time({std::move(sigma), std::move(phi), std::move(kappa)}, n, p);
      },
      py::arg("sigma"), py::arg("phi"), py::arg("kappa"), py::arg("n"), py::arg("p"));

  // workloads
  m.def("naive_is_prime", &workloads::naive_is_prime, py::arg("n"));
  m.def(
      "primes_serial",
      [](std::int64_t limit) {
        const auto r = workloads::primes_serial({limit});
        return std::pair{r.prime_count, r.largest_prime};
      },
      py::arg("limit"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "primes_parallel",
      [](std::int64_t limit, int world_size, std::optional<std::size_t> eager_threshold) {
        const workloads::PrimesConfig config{limit};
        auto result = spawn_world(
            world_size, [&](Communicator& c) { return workloads::primes_parallel(config, c); },
            options_for(eager_threshold));
        const auto& r = *result.values.at(0);
        return std::pair{r.prime_count, r.largest_prime};
      },
      py::arg("limit"), py::arg("world_size"), py::arg("eager_threshold") = py::none(),
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "wave_serial",
      [](std::size_t points, std::size_t steps, double c) { return workloads::wave_serial({points, steps, c}); },
      py::arg("points"), py::arg("steps"), py::arg("c") = 0.1, py::call_guard<py::gil_scoped_release>());
  m.def(
      "wave_parallel",
      [](std::size_t points, std::size_t steps, double c, int world_size, std::optional<std::size_t> eager_threshold) {
        const workloads::WaveConfig config{points, steps, c};
        auto result = spawn_world(
            world_size, [&](Communicator& comm) { return workloads::wave_parallel(config, comm); },
            options_for(eager_threshold));
        return result.values.at(0);
      },
      py::arg("points"), py::arg("steps"), py::arg("c"), py::arg("world_size"),
      py::arg("eager_threshold") = py::none(), py::call_guard<py::gil_scoped_release>());
  m.def("workload_names", &workloads::workload_names);

  // predictor
  m.def(
      "normalized_slope",
      [](const std::vector<int>& procs, const std::vector<double>& seconds) {
        return predictor::normalized_slope(curve_from(procs, seconds, std::nullopt));
      },
      py::arg("procs"), py::arg("seconds"));
  m.def(
      "classify",
      [](const std::vector<int>& procs, const std::vector<double>& seconds, double poor_threshold,
         double linear_threshold) {
        predictor::ClassifierConfig config;
        config.poor_threshold = poor_threshold;
        config.linear_threshold = linear_threshold;
        const auto v = predictor::classify(curve_from(procs, seconds, std::nullopt), config);
        return std::pair{std::string(predictor::to_string(v.kind)), v.normalized_slope};
      },
      py::arg("procs"), py::arg("seconds"), py::arg("poor_threshold") = 0.25, py::arg("linear_threshold") = 0.05);
  m.def(
      "report_json",
      [](const std::vector<int>& procs, const std::vector<double>& seconds, std::optional<double> serial_seconds,
         const std::string& label) {
        return predictor::to_json(predictor::report_from_curve(label, curve_from(procs, seconds, serial_seconds)));
      },
      py::arg("procs"), py::arg("seconds"), py::arg("serial_seconds") = py::none(), py::arg("label") = "curve");
  m.def(
      "load_curve",
      [](const std::string& path) {
        const auto curve = predictor::load_curve(path);
        std::vector<int> procs;
        std::vector<double> seconds;
        for (const auto& pt : curve.points) {
          procs.push_back(pt.procs);
          seconds.push_back(pt.seconds);
        }
        return py::make_tuple(procs, seconds, curve.serial_seconds);
      },
      py::arg("path"));
  m.def(
      "predict_json",
      [](const std::string& workload, const std::map<std::string, std::string>& params, int max_procs, int reps,
         std::optional<std::size_t> eager_threshold) {
        const auto w = workloads::make_workload(workload, params_from(params));
        predictor::ClassifierConfig config;
        config.repetitions = reps;
        return predictor::to_json(predictor::predict(*w, max_procs, config, options_for(eager_threshold)));
      },
      py::arg("workload"), py::arg("params") = std::map<std::string, std::string>{}, py::arg("max_procs") = 10,
      py::arg("reps") = 3, py::arg("eager_threshold") = py::none(), py::call_guard<py::gil_scoped_release>());
}
