// SPDX-License-Identifier: Apache-2.0
#include "mpk/predictor.hpp"

#include <sched.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "mpk/metrics.hpp"

namespace mpk::predictor {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedInput, what); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return !text.empty() && ec == std::errc{} && ptr == end;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

template <class F>
double time_region(F&& region) {
  const double t1 = wtime();
  region();
  const double t2 = wtime();
  return t2 - t1;
}

}  // namespace

std::string_view to_string(VerdictKind kind) noexcept {
  switch (kind) {
    case VerdictKind::PoorSpeedup: return "POOR";
    case VerdictKind::LinearSpeedup: return "LINEAR";
    case VerdictKind::Indeterminate: return "INDETERMINATE";
  }
  return "INDETERMINATE";
}

void SpeedupCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    if (pt.procs < 1) malformed("procs must be >= 1, got " + std::to_string(pt.procs));
    if (i > 0 && pt.procs <= points[i - 1].procs) malformed("procs must be strictly increasing");
    if (!std::isfinite(pt.seconds) || pt.seconds <= 0.0) malformed("seconds must be finite and > 0");
  }
  if (serial_seconds && (!std::isfinite(*serial_seconds) || *serial_seconds <= 0.0)) {
    malformed("serial_seconds must be finite and > 0");
  }
}

void ClassifierConfig::validate() const {
  if (!(linear_threshold >= 0.0 && linear_threshold < poor_threshold)) {
    throw Error(ErrorKind::DomainError, "thresholds must satisfy 0 <= linear < poor");
  }
  if (repetitions < 1) throw Error(ErrorKind::DomainError, "repetitions must be >= 1");
}

double normalized_slope(const SpeedupCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 2) throw Error(ErrorKind::TooFewPoints, "need at least 2 points, got " + std::to_string(pts.size()));
  curve.validate();

  const double n = static_cast<double>(pts.size());
  double x_mean = 0.0;
  double y_shift = 0.0;
  const double y0 = pts.front().seconds;
  for (const auto& pt : pts) {
    x_mean += pt.procs;
    y_shift += pt.seconds - y0;
  }
  x_mean /= n;
  // Mean taken relative to y0 so a constant series has exactly zero residuals.
  const double y_mean = y0 + y_shift / n;

  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& pt : pts) {
    const double dx = pt.procs - x_mean;
    sxy += dx * (pt.seconds - y_mean);
    sxx += dx * dx;
  }
  return (sxy / sxx) / y0;
}

VerdictKind classify_slope(double slope, const ClassifierConfig& config) {
  if (slope > config.poor_threshold) return VerdictKind::PoorSpeedup;
  if (slope < config.linear_threshold) return VerdictKind::LinearSpeedup;
  return VerdictKind::Indeterminate;
}

Verdict classify(const SpeedupCurve& curve, const ClassifierConfig& config) {
  config.validate();
  const double slope = normalized_slope(curve);
  return Verdict{classify_slope(slope, config), slope};
}

SingleCpuPin::SingleCpuPin() {
  cpu_set_t current;
  CPU_ZERO(&current);
  if (sched_getaffinity(0, sizeof(current), &current) != 0) return;
  int chosen = -1;
  for (int cpu = 0; cpu < CPU_SETSIZE; ++cpu) {
    if (CPU_ISSET(cpu, &current)) {
      chosen = cpu;
      break;
    }
  }
  if (chosen < 0) return;

  cpu_set_t single;
  CPU_ZERO(&single);
  CPU_SET(chosen, &single);
  if (sched_setaffinity(0, sizeof(single), &single) != 0) return;

  saved_mask_.resize(sizeof(current));
  std::memcpy(saved_mask_.data(), &current, sizeof(current));
  active_ = true;
  cpu_ = chosen;
}

SingleCpuPin::~SingleCpuPin() {
  if (!active_) return;
  cpu_set_t previous;
  std::memcpy(&previous, saved_mask_.data(), sizeof(previous));
  sched_setaffinity(0, sizeof(previous), &previous);
}

SpeedupCurve record_curve(const workloads::Workload& workload, std::span<const int> proc_counts,
                          const RecordOptions& options) {
  if (proc_counts.empty()) throw Error(ErrorKind::InvalidConfig, "no process counts to record");
  if (options.repetitions < 1) throw Error(ErrorKind::InvalidConfig, "repetitions must be >= 1");
  for (int p : proc_counts) {
    if (p < 1) throw Error(ErrorKind::InvalidConfig, "process counts must be >= 1");
    workload.check(p);
  }

  SpeedupCurve curve;
  const auto reps = static_cast<std::size_t>(options.repetitions);
  try {
    std::vector<double> samples;
    for (std::size_t r = 0; r < reps; ++r) samples.push_back(time_region([&] { workload.run_serial(); }));
    curve.serial_seconds = median(samples);

    for (int p : proc_counts) {
      samples.clear();
      for (std::size_t r = 0; r < reps; ++r) {
        samples.push_back(time_region([&] {
          spawn_world(p, [&](Communicator& comm) { workload.run_parallel(comm); }, options.world);
        }));
      }
      curve.points.push_back(CurvePoint{p, median(samples)});
    }
  } catch (const Error& e) {
    throw Error(ErrorKind::WorkloadFailed, workload.name() + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::WorkloadFailed, workload.name() + ": " + e.what());
  }
  curve.validate();
  return curve;
}

PredictionReport report_from_curve(std::string label, const SpeedupCurve& curve, const ClassifierConfig& config) {
  PredictionReport report;
  report.workload = std::move(label);
  report.config = config;
  report.serial_seconds = curve.serial_seconds;
  report.points = curve.points;
  report.verdict = classify(curve, config);
  report.normalized_slope = report.verdict.normalized_slope;
  report.replayed = true;
  if (curve.serial_seconds) {
    for (const auto& pt : curve.points) {
      const double psi = metrics::speedup(*curve.serial_seconds, pt.seconds);
      report.speedups.push_back(psi);
      report.efficiencies.push_back(metrics::efficiency(psi, pt.procs));
    }
  }
  return report;
}

PredictionReport predict(const workloads::Workload& workload, int max_procs, const ClassifierConfig& config,
                         const WorldOptions& world) {
  if (max_procs < 2) throw Error(ErrorKind::InvalidConfig, "max_procs must be >= 2");
  config.validate();

  std::vector<int> counts;
  for (int p = 1; p <= max_procs; ++p) {
    if (workload.accepts(p)) counts.push_back(p);
  }
  if (counts.size() < 2) {
    throw Error(ErrorKind::TooFewPoints, workload.name() + " can only be split over " +
                                             std::to_string(counts.size()) + " of the counts 1.." +
                                             std::to_string(max_procs));
  }

  SingleCpuPin pin;
  const SpeedupCurve curve = record_curve(workload, counts, RecordOptions{config.repetitions, world});

  PredictionReport report = report_from_curve(workload.name(), curve, config);
  report.params = workload.params();
  report.eager_threshold = world.eager_threshold;
  report.pinned = pin.active();
  report.pinned_cpu = pin.cpu();
  report.replayed = false;
  return report;
}

std::string to_json(const PredictionReport& report, int indent) {
  using nlohmann::json;
  json doc;
  doc["workload"] = report.workload;
  doc["params"] = json::object();
  for (const auto& [key, value] : report.params) doc["params"][key] = value;
  doc["config"] = {{"poor_threshold", report.config.poor_threshold},
                   {"linear_threshold", report.config.linear_threshold},
                   {"repetitions", report.config.repetitions}};
  doc["serial_seconds"] = report.serial_seconds ? json(*report.serial_seconds) : json(nullptr);
  doc["points"] = json::array();
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    json pt = {{"procs", report.points[i].procs}, {"seconds", report.points[i].seconds}};
    if (i < report.speedups.size()) {
      pt["speedup"] = report.speedups[i];
      pt["efficiency"] = report.efficiencies[i];
    }
    doc["points"].push_back(std::move(pt));
  }
  doc["normalized_slope"] = report.normalized_slope;
  doc["verdict"] = std::string(to_string(report.verdict.kind));
  doc["mode"] = report.replayed ? "replay" : "live";
  if (!report.replayed) {
    doc["eager_threshold_bytes"] = report.eager_threshold == kUnlimited ? json("inf") : json(report.eager_threshold);
    doc["single_cpu"] = {{"pinned", report.pinned}, {"cpu", report.pinned_cpu}};
  }
  return doc.dump(indent);
}

SpeedupCurve read_curve_csv(std::istream& in) {
  SpeedupCurve curve;
  bool seen_header = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      constexpr std::string_view key = "serial_seconds=";
      if (body.starts_with(key)) {
        double value = 0.0;
        if (!parse_number(body.substr(key.size()), value)) {
          malformed("line " + std::to_string(line_no) + ": bad serial_seconds");
        }
        curve.serial_seconds = value;
      }
      continue;
    }
    if (!seen_header) {
      if (!line.starts_with("procs,seconds")) malformed("line " + std::to_string(line_no) + ": expected header procs,seconds");
      seen_header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) malformed("line " + std::to_string(line_no) + ": expected procs,seconds");
    std::string_view seconds_field = line.substr(comma + 1);
    seconds_field = seconds_field.substr(0, seconds_field.find(','));
    CurvePoint pt;
    if (!parse_number(line.substr(0, comma), pt.procs) || !parse_number(seconds_field, pt.seconds)) {
      malformed("line " + std::to_string(line_no) + ": cannot parse '" + std::string(line) + "'");
    }
    curve.points.push_back(pt);
  }
  if (!seen_header) malformed("missing header procs,seconds");
  curve.validate();
  return curve;
}

SpeedupCurve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) malformed("cannot open " + path);
  return read_curve_csv(in);
}

void write_curve_csv(std::ostream& out, const SpeedupCurve& curve) {
  if (curve.serial_seconds) out << fmt::format("# serial_seconds={}\n", *curve.serial_seconds);
  out << "procs,seconds\n";
  for (const auto& pt : curve.points) out << fmt::format("{},{}\n", pt.procs, pt.seconds);
}

}  // namespace mpk::predictor
