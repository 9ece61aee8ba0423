// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

namespace mpk {

/// Measured per-rank time split. t_comp is the residual of the wall time, so
/// total() reproduces the wall time of the instrumented region.
struct TimingBreakdown {
  double t_comp = 0.0;
  double t_comm = 0.0;
  double t_idle = 0.0;

  double total() const noexcept { return t_comp + t_comm + t_idle; }

  /// Build from a wall time plus the communication and idle shares measured
  /// inside it. Negative residuals from clock granularity are clamped to 0.
  static TimingBreakdown from_wall(double wall, double comm, double idle) noexcept;
};

namespace metrics {

/// Analytic parallel-time model: serial part sigma(n), parallelizable part
/// phi(n) and communication overhead kappa(n, p), all in seconds.
struct ParallelTimeModel {
  std::function<double(double n)> sigma;
  std::function<double(double n)> phi;
  std::function<double(double n, double p)> kappa;
};

struct ModelParams {
  double f = 0.0;  // serial fraction, Amdahl
  double s = 0.0;  // serial fraction of total time, Gustafson
};

/// sigma(n) + phi(n)/p + kappa(n, p). Throws InvalidProcessorCount for p < 1.
double parallel_time(const ParallelTimeModel& model, double n, double p);

/// t_serial / t_parallel. Throws NonPositiveTime unless both are > 0.
double speedup(double t_serial, double t_parallel);

/// 1 / (f + (1 - f)/p), with f the serial fraction.
double amdahl_bound(double f, double p);

/// p + (1 - p) s
double gustafson_bound(double s, double p);

/// psi / p, deliberately unclamped so measured super-linear values show.
double efficiency(double psi, double p);

}  // namespace metrics
}  // namespace mpk
