// SPDX-License-Identifier: Apache-2.0
#include "mpk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mpk/error.hpp"

namespace mpk {

TimingBreakdown TimingBreakdown::from_wall(double wall, double comm, double idle) noexcept {
  TimingBreakdown t;
  t.t_idle = std::max(0.0, idle);
  t.t_comm = std::max(0.0, comm);
  t.t_comp = std::max(0.0, wall - t.t_comm - t.t_idle);
  return t;
}

namespace metrics {

namespace {

void require_fraction(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorKind::DomainError, std::string(name) + " must lie in [0, 1], got " + std::to_string(value));
  }
}

void require_procs(double p, ErrorKind kind) {
  if (!(p >= 1.0)) throw Error(kind, "processor count must be >= 1, got " + std::to_string(p));
}

}  // namespace

double parallel_time(const ParallelTimeModel& model, double n, double p) {
  require_procs(p, ErrorKind::InvalidProcessorCount);
  const double sigma = model.sigma ? model.sigma(n) : 0.0;
  const double phi = model.phi ? model.phi(n) : 0.0;
  const double kappa = model.kappa ? model.kappa(n, p) : 0.0;
  if (sigma < 0.0 || phi < 0.0 || kappa < 0.0) {
    throw Error(ErrorKind::DomainError, "model terms must be non-negative");
  }
  return sigma + phi / p + kappa;
}

double speedup(double t_serial, double t_parallel) {
  if (!(t_serial > 0.0) || !(t_parallel > 0.0)) {
    throw Error(ErrorKind::NonPositiveTime,
                "times must be > 0, got " + std::to_string(t_serial) + " and " + std::to_string(t_parallel));
  }
  return t_serial / t_parallel;
}

double amdahl_bound(double f, double p) {
  require_fraction(f, "serial fraction f");
  require_procs(p, ErrorKind::DomainError);
  return 1.0 / (f + (1.0 - f) / p);
}

double gustafson_bound(double s, double p) {
  require_fraction(s, "serial fraction s");
  require_procs(p, ErrorKind::DomainError);
  return p + (1.0 - p) * s;
}

double efficiency(double psi, double p) {
  require_procs(p, ErrorKind::DomainError);
  if (!(psi >= 0.0)) throw Error(ErrorKind::DomainError, "speedup must be >= 0, got " + std::to_string(psi));
  return psi / p;
}

}  // namespace metrics
}  // namespace mpk
