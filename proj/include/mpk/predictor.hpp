// SPDX-License-Identifier: Apache-2.0
//
// Single-machine speedup prediction: time a workload at increasing rank
// counts on one execution unit, fit the growth of the time curve, and
// classify the multi-processor outlook from how fast it grows.
#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpk/runtime.hpp"
#include "mpk/workloads.hpp"

namespace mpk::predictor {

struct CurvePoint {
  int procs = 1;
  double seconds = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct SpeedupCurve {
  std::vector<CurvePoint> points;
  std::optional<double> serial_seconds;

  /// Throws MalformedInput unless procs are >= 1 and strictly increasing and
  /// every time is finite and > 0.
  void validate() const;

  friend bool operator==(const SpeedupCurve&, const SpeedupCurve&) = default;
};

enum class VerdictKind { PoorSpeedup, LinearSpeedup, Indeterminate };

/// "POOR", "LINEAR" or "INDETERMINATE".
std::string_view to_string(VerdictKind kind) noexcept;

struct Verdict {
  VerdictKind kind = VerdictKind::Indeterminate;
  double normalized_slope = 0.0;
};

struct ClassifierConfig {
  double poor_threshold = 0.25;
  double linear_threshold = 0.05;
  int repetitions = 3;

  /// Throws DomainError unless 0 <= linear_threshold < poor_threshold and
  /// repetitions >= 1.
  void validate() const;
};

/// Least-squares slope of seconds against procs, divided by the time at the
/// smallest proc count. Throws TooFewPoints for fewer than two points.
double normalized_slope(const SpeedupCurve& curve);

/// Poor above poor_threshold, linear below linear_threshold, otherwise
/// indeterminate. Total over the reals.
VerdictKind classify_slope(double slope, const ClassifierConfig& config);

Verdict classify(const SpeedupCurve& curve, const ClassifierConfig& config = {});

/// Restricts the calling thread, and every thread it spawns afterwards, to a
/// single CPU for its lifetime. Restores the previous mask on destruction.
class SingleCpuPin {
 public:
  SingleCpuPin();
  ~SingleCpuPin();
  SingleCpuPin(const SingleCpuPin&) = delete;
  SingleCpuPin& operator=(const SingleCpuPin&) = delete;

  bool active() const noexcept { return active_; }
  int cpu() const noexcept { return cpu_; }

 private:
  bool active_ = false;
  int cpu_ = -1;
  std::vector<unsigned char> saved_mask_;
};

struct RecordOptions {
  int repetitions = 3;
  WorldOptions world;
};

/// Times the serial form and the parallel form at each count, keeping the
/// median of `repetitions` runs. Failures surface as WorkloadFailed.
SpeedupCurve record_curve(const workloads::Workload& workload, std::span<const int> proc_counts,
                          const RecordOptions& options = {});

struct PredictionReport {
  std::string workload;
  workloads::ParamMap params;
  ClassifierConfig config;
  std::optional<double> serial_seconds;
  std::vector<CurvePoint> points;
  /// speedup and efficiency per point, present when serial_seconds is known.
  std::vector<double> speedups;
  std::vector<double> efficiencies;
  double normalized_slope = 0.0;
  Verdict verdict;
  std::size_t eager_threshold = kDefaultEagerThreshold;
  bool pinned = false;
  int pinned_cpu = -1;
  bool replayed = false;
};

/// Runs the full procedure on one pinned CPU with rank counts 1..max_procs
/// (skipping counts the workload cannot be split over).
PredictionReport predict(const workloads::Workload& workload, int max_procs, const ClassifierConfig& config = {},
                         const WorldOptions& world = {});

/// Classifies an already recorded curve, e.g. a fixture.
PredictionReport report_from_curve(std::string label, const SpeedupCurve& curve, const ClassifierConfig& config = {});

std::string to_json(const PredictionReport& report, int indent = 2);

/// `procs,seconds` CSV, optionally preceded by `# serial_seconds=<float>`.
SpeedupCurve read_curve_csv(std::istream& in);
SpeedupCurve load_curve(const std::string& path);
void write_curve_csv(std::ostream& out, const SpeedupCurve& curve);

}  // namespace mpk::predictor
