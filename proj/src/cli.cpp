// SPDX-License-Identifier: Apache-2.0
#include "mpk/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "mpk/error.hpp"
#include "mpk/metrics.hpp"
#include "mpk/predictor.hpp"
#include "mpk/runtime.hpp"
#include "mpk/workloads.hpp"

namespace mpk::cli {

namespace {

using workloads::ParamMap;

struct GlobalFlags {
  std::string eager_threshold;
  bool json = false;
};

struct WorkloadFlags {
  std::string name;
  std::optional<std::string> points;
  std::optional<std::string> steps;
  std::optional<std::string> c;
  std::optional<std::string> limit;

  void attach(CLI::App& cmd, bool required) {
    auto* opt = cmd.add_option("--workload", name, "Workload name (wave | primes)");
    if (required) opt->required();
    cmd.add_option("--points", points, "wave: total string points");
    cmd.add_option("--steps", steps, "wave: time steps");
    cmd.add_option("--c", c, "wave: time advance parameter");
    cmd.add_option("--limit", limit, "primes: upper limit of the search interval");
  }

  ParamMap params() const {
    ParamMap out;
    if (points) out["points"] = *points;
    if (steps) out["steps"] = *steps;
    if (c) out["c"] = *c;
    if (limit) out["limit"] = *limit;
    return out;
  }
};

struct ClassifierFlags {
  predictor::ClassifierConfig config;

  void attach(CLI::App& cmd) {
    cmd.add_option("--poor-threshold", config.poor_threshold, "Normalized slope above which speedup is poor")
        ->capture_default_str();
    cmd.add_option("--linear-threshold", config.linear_threshold, "Normalized slope below which speedup is linear")
        ->capture_default_str();
  }
};

WorldOptions world_options(const GlobalFlags& global) {
  if (global.eager_threshold.empty()) return WorldOptions::from_env();
  WorldOptions options;
  options.eager_threshold = parse_byte_count(global.eager_threshold);
  return options;
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  auto parse = [&](std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      throw Error(ErrorKind::DomainError, "bad processor range '" + text + "'");
    }
    return v;
  };
  const std::string_view view(text);
  if (dots == std::string::npos) {
    const int p = parse(view);
    return {p, p};
  }
  const int lo = parse(view.substr(0, dots));
  const int hi = parse(view.substr(dots + 2));
  if (lo < 1 || hi < lo) throw Error(ErrorKind::DomainError, "processor range must satisfy 1 <= lo <= hi");
  return {lo, hi};
}

std::string num(double v) { return fmt::format("{}", v); }

void print_curve_table(std::ostream& out, const predictor::PredictionReport& report) {
  const bool with_speedup = !report.speedups.empty();
  out << (with_speedup ? "procs,seconds,speedup,efficiency\n" : "procs,seconds\n");
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    out << report.points[i].procs << ',' << num(report.points[i].seconds);
    if (with_speedup) out << ',' << num(report.speedups[i]) << ',' << num(report.efficiencies[i]);
    out << '\n';
  }
}

void print_verdict(std::ostream& out, const predictor::PredictionReport& report) {
  out << "normalized_slope: " << num(report.normalized_slope) << '\n';
  out << "verdict: " << predictor::to_string(report.verdict.kind) << '\n';
}

// --- run -------------------------------------------------------------------

struct RunFlags {
  WorkloadFlags workload;
  int procs = 1;
  std::string output;
  std::string trace;
  bool show_amplitudes = false;
};

void append_curve_row(const std::string& path, int procs, double seconds) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream file(path, std::ios::app);
  if (!file) throw Error(ErrorKind::InvalidConfig, "cannot write " + path);
  if (fresh) file << "procs,seconds\n";
  file << procs << ',' << num(seconds) << '\n';
}

int cmd_run(const RunFlags& flags, const GlobalFlags& global, std::ostream& out) {
  if (flags.procs < 1) throw Error(ErrorKind::InvalidConfig, "--procs must be >= 1");
  const auto workload = workloads::make_workload(flags.workload.name, flags.workload.params());
  workload->check(flags.procs);
  WorldOptions options = world_options(global);
  options.trace = !flags.trace.empty();

  workloads::Outcome outcome;
  WorldReport report;
  const double t1 = wtime();
  try {
    report = spawn_world(
        flags.procs,
        [&](Communicator& comm) {
          auto result = workload->run_parallel(comm);
          if (comm.is_master()) outcome = std::move(result);
        },
        options);
  } catch (const Error& e) {
    throw Error(ErrorKind::WorkloadFailed, e.what());
  }
  const double seconds = wtime() - t1;

  if (!flags.output.empty()) append_curve_row(flags.output, flags.procs, seconds);
  if (!flags.trace.empty()) {
    std::ofstream trace(flags.trace);
    for (const auto& event : report.trace) trace << format_trace_line(event) << '\n';
  }

  const bool print_amplitudes =
      !outcome.amplitudes.empty() && (flags.show_amplitudes || outcome.amplitudes.size() <= 64);

  if (global.json) {
    nlohmann::json doc;
    doc["workload"] = workload->name();
    doc["params"] = nlohmann::json::object();
    for (const auto& [k, v] : workload->params()) doc["params"][k] = v;
    doc["procs"] = flags.procs;
    doc["eager_threshold_bytes"] =
        options.eager_threshold == kUnlimited ? nlohmann::json("inf") : nlohmann::json(options.eager_threshold);
    doc["seconds"] = seconds;
    doc["summary"] = outcome.summary;
    if (outcome.primes) {
      doc["count"] = outcome.primes->prime_count;
      doc["largest"] = outcome.primes->largest_prime;
    }
    if (print_amplitudes) doc["amplitudes"] = outcome.amplitudes;
    doc["timings"] = nlohmann::json::array();
    for (const auto& t : report.timings) {
      doc["timings"].push_back({{"t_comp", t.t_comp}, {"t_comm", t.t_comm}, {"t_idle", t.t_idle}, {"total", t.total()}});
    }
    out << doc.dump(2) << '\n';
    return kExitOk;
  }

  out << outcome.summary << '\n';
  if (print_amplitudes) {
    out << "amplitudes=";
    for (std::size_t i = 0; i < outcome.amplitudes.size(); ++i) out << (i ? "," : "") << num(outcome.amplitudes[i]);
    out << '\n';
  }
  out << "procs,seconds\n" << flags.procs << ',' << num(seconds) << '\n';
  out << "rank,t_comp,t_comm,t_idle,total\n";
  for (std::size_t r = 0; r < report.timings.size(); ++r) {
    const auto& t = report.timings[r];
    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r, t.t_comp, t.t_comm, t.t_idle, t.total());
  }
  return kExitOk;
}

// --- predict ---------------------------------------------------------------

struct PredictFlags {
  WorkloadFlags workload;
  ClassifierFlags classifier;
  std::string curve_file;
  std::optional<double> serial;
  int max_procs = 10;
  int reps = 3;
  std::string report_path;
};

int emit_report(const predictor::PredictionReport& report, const GlobalFlags& global, const std::string& report_path,
                std::ostream& out) {
  if (!report_path.empty()) {
    std::ofstream file(report_path);
    if (!file) throw Error(ErrorKind::InvalidConfig, "cannot write " + report_path);
    file << predictor::to_json(report) << '\n';
  }
  if (global.json) {
    out << predictor::to_json(report) << '\n';
  } else {
    print_curve_table(out, report);
    print_verdict(out, report);
  }
  return kExitOk;
}

int cmd_predict(PredictFlags& flags, const GlobalFlags& global, std::ostream& out) {
  flags.classifier.config.repetitions = flags.reps;
  flags.classifier.config.validate();

  if (!flags.curve_file.empty()) {
    auto curve = predictor::load_curve(flags.curve_file);
    if (flags.serial) curve.serial_seconds = *flags.serial;
    curve.validate();
    const auto label = std::filesystem::path(flags.curve_file).stem().string();
    return emit_report(predictor::report_from_curve(label, curve, flags.classifier.config), global,
                       flags.report_path, out);
  }
  if (flags.workload.name.empty()) throw Error(ErrorKind::InvalidConfig, "predict needs --workload or --curve-file");
  if (flags.max_procs < 2) throw Error(ErrorKind::InvalidConfig, "--max-procs must be >= 2");

  const auto workload = workloads::make_workload(flags.workload.name, flags.workload.params());
  const auto report = predictor::predict(*workload, flags.max_procs, flags.classifier.config, world_options(global));
  return emit_report(report, global, flags.report_path, out);
}

// --- model -----------------------------------------------------------------

struct ModelFlags {
  std::string law;
  std::optional<double> f;
  std::optional<double> s;
  double sigma = 0.0;
  double phi = 0.0;
  double kappa = 0.0;
  double kappa_per_proc = 0.0;
  double n = 1.0;
  std::string procs = "1..8";
};

double require(const std::optional<double>& value, const char* flag, const std::string& law) {
  if (!value) throw Error(ErrorKind::DomainError, std::string("--law ") + law + " needs " + flag);
  return *value;
}

int cmd_model(const ModelFlags& flags, const GlobalFlags& global, std::ostream& out) {
  const auto [lo, hi] = parse_range(flags.procs);
  std::vector<std::pair<int, double>> rows;
  if (flags.law == "amdahl") {
    const double f = require(flags.f, "--f", flags.law);
    for (int p = lo; p <= hi; ++p) rows.emplace_back(p, metrics::amdahl_bound(f, p));
  } else if (flags.law == "gustafson") {
    const double s = require(flags.s, "--s", flags.law);
    for (int p = lo; p <= hi; ++p) rows.emplace_back(p, metrics::gustafson_bound(s, p));
  } else {
    metrics::ParallelTimeModel model{
        [&](double) { return flags.sigma; },
        [&](double) { return flags.phi; },
        [&](double, double p) { return flags.kappa + flags.kappa_per_proc * p; },
    };
    for (int p = lo; p <= hi; ++p) rows.emplace_back(p, metrics::parallel_time(model, flags.n, p));
  }

  if (global.json) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& [p, bound] : rows) doc.push_back({{"p", p}, {"bound", bound}});
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  out << "p,bound\n";
  for (const auto& [p, bound] : rows) out << p << ',' << num(bound) << '\n';
  return kExitOk;
}

// --- report ----------------------------------------------------------------

struct ReportFlags {
  ClassifierFlags classifier;
  std::string input;
  std::optional<double> serial;
};

int cmd_report(const ReportFlags& flags, const GlobalFlags& global, std::ostream& out) {
  auto curve = predictor::load_curve(flags.input);
  if (flags.serial) curve.serial_seconds = *flags.serial;
  if (!curve.serial_seconds) {
    throw Error(ErrorKind::MalformedInput, "no serial time: pass --serial or add '# serial_seconds=' to the CSV");
  }
  curve.validate();
  const auto label = std::filesystem::path(flags.input).stem().string();
  const auto report = predictor::report_from_curve(label, curve, flags.classifier.config);
  if (global.json) {
    out << predictor::to_json(report) << '\n';
    return kExitOk;
  }
  print_curve_table(out, report);
  out << "verdict: " << predictor::to_string(report.verdict.kind) << '\n';
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::WorkloadFailed:
    case ErrorKind::RankPanicked:
    case ErrorKind::DeadlockDetected:
      return kExitFailure;
    default:
      return kExitUsage;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Message-passing kit: run workloads, predict speedup on one CPU, evaluate speedup models", "mpk"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags global;
  app.add_option("--eager-threshold-bytes", global.eager_threshold,
                 "Largest message sent eagerly, in bytes, or 'inf' (default 65536, env MPK_EAGER_THRESHOLD)");
  app.add_flag("--json", global.json, "Machine-readable output");

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run a workload once at a given rank count");
  run_flags.workload.attach(*run_cmd, true);
  run_cmd->add_option("--procs", run_flags.procs, "Number of ranks")->capture_default_str();
  run_cmd->add_option("--output", run_flags.output, "Append a procs,seconds row to this CSV");
  run_cmd->add_option("--trace", run_flags.trace, "Write the message trace to this file");
  run_cmd->add_flag("--show-amplitudes", run_flags.show_amplitudes, "Always print wave amplitudes");

  PredictFlags predict_flags;
  auto* predict_cmd = app.add_subcommand("predict", "Record a time curve on one CPU and classify it");
  predict_flags.workload.attach(*predict_cmd, false);
  predict_flags.classifier.attach(*predict_cmd);
  predict_cmd->add_option("--curve-file", predict_flags.curve_file, "Classify a recorded procs,seconds CSV instead");
  predict_cmd->add_option("--serial", predict_flags.serial, "Serial time for replayed curves");
  predict_cmd->add_option("--max-procs", predict_flags.max_procs, "Largest rank count")->capture_default_str();
  predict_cmd->add_option("--reps", predict_flags.reps, "Repetitions per point (median)")->capture_default_str();
  predict_cmd->add_option("--report", predict_flags.report_path, "Also write the JSON report here");

  ModelFlags model_flags;
  auto* model_cmd = app.add_subcommand("model", "Tabulate Amdahl, Gustafson or parallel-time bounds");
  model_cmd->add_option("--law", model_flags.law, "amdahl | gustafson | eq2")
      ->required()
      ->check(CLI::IsMember({"amdahl", "gustafson", "eq2"}));
  model_cmd->add_option("--f", model_flags.f, "Amdahl serial fraction");
  model_cmd->add_option("--s", model_flags.s, "Gustafson serial fraction");
  model_cmd->add_option("--sigma", model_flags.sigma, "eq2: serial seconds");
  model_cmd->add_option("--phi", model_flags.phi, "eq2: parallelizable seconds");
  model_cmd->add_option("--kappa", model_flags.kappa, "eq2: constant communication seconds");
  model_cmd->add_option("--kappa-per-proc", model_flags.kappa_per_proc, "eq2: communication seconds per processor");
  model_cmd->add_option("--n", model_flags.n, "eq2: problem size");
  model_cmd->add_option("--procs", model_flags.procs, "Processor range lo..hi")->capture_default_str();

  ReportFlags report_flags;
  auto* report_cmd = app.add_subcommand("report", "Speedup and efficiency table for a recorded curve");
  report_flags.classifier.attach(*report_cmd);
  report_cmd->add_option("--input", report_flags.input, "procs,seconds CSV")->required();
  report_cmd->add_option("--serial", report_flags.serial, "Serial execution time in seconds");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_flags, global, out);
    if (*predict_cmd) return cmd_predict(predict_flags, global, out);
    if (*model_cmd) return cmd_model(model_flags, global, out);
    if (*report_cmd) return cmd_report(report_flags, global, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mpk::cli
