// SPDX-License-Identifier: Apache-2.0
//
// Benchmark applications: the 1-D vibrating-string wave equation and the
// trial-division prime counter, each in a serial form and a message-passing
// form, plus a small registry that the predictor and the CLI drive by name.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpk/runtime.hpp"

namespace mpk::workloads {

// ---------------------------------------------------------------------------
// Wave equation

struct WaveConfig {
  std::size_t total_points = 800;
  std::size_t time_steps = 2000;
  /// Time advance parameter of the update; values above 1 diverge.
  double c = 0.1;

  /// Throws InvalidConfig unless total_points >= 2 and time_steps >= 1.
  void validate() const;
};

/// Amplitudes at t-1, t and t+1 for one block of the string. In the
/// message-passing form each array carries one halo cell at either end.
struct WaveState {
  std::vector<double> u_prev;
  std::vector<double> u_curr;
  std::vector<double> u_next;
};

/// u(i,t+1) = 2 u(i,t) - u(i,t-1) + c (u(i-1,t) - 2 u(i,t) + u(i+1,t))
double wave_step_point(double u_im1, double u_i, double u_ip1, double u_i_prev, double c) noexcept;

/// One full sine period, unit amplitude, endpoints pinned to zero.
std::vector<double> wave_initial(std::size_t total_points);

std::vector<double> wave_serial(const WaveConfig& config);

/// Block decomposition with a halo exchange per step. The master broadcasts
/// the configuration and gathers the blocks; it returns the full string and
/// every other rank returns an empty vector. The result is bitwise equal to
/// wave_serial. Throws IndivisibleDecomposition when size() does not divide
/// total_points.
std::vector<double> wave_parallel(const WaveConfig& config, Communicator& comm);

// ---------------------------------------------------------------------------
// Prime counting

struct PrimesConfig {
  std::int64_t limit = 2'000'000;

  /// Throws LimitTooSmall for limit < 11.
  void validate() const;
};

struct PrimesResult {
  std::int64_t prime_count = 0;
  std::int64_t largest_prime = 0;

  friend bool operator==(const PrimesResult&, const PrimesResult&) = default;
};

/// Trial division by odd i in [3, isqrt(n)]. Numbers up to 10 report false:
/// 2, 3, 5 and 7 are pre-counted by the callers.
bool naive_is_prime(std::int64_t n) noexcept;

PrimesResult primes_serial(const PrimesConfig& config);

/// The odd candidates rank `rank` of `ntasks` tests: rank*2+1, stepping by
/// ntasks*2, up to limit.
std::vector<std::int64_t> cyclic_candidates(int rank, int ntasks, std::int64_t limit);

/// Cyclic decomposition, combined with reduce(Sum) and reduce(Max). The
/// master returns the result; other ranks return nullopt.
std::optional<PrimesResult> primes_parallel(const PrimesConfig& config, Communicator& comm);

// ---------------------------------------------------------------------------
// Registry

using ParamMap = std::map<std::string, std::string, std::less<>>;

/// What a workload run produced, as seen by the master.
struct Outcome {
  std::string summary;
  std::vector<double> amplitudes;
  std::optional<PrimesResult> primes;
};

class Workload {
 public:
  virtual ~Workload() = default;

  virtual std::string name() const = 0;
  virtual ParamMap params() const = 0;
  /// Whether the parallel form can run on world_size ranks.
  virtual bool accepts(int world_size) const = 0;
  /// Throws the workload's precondition error when !accepts(world_size).
  virtual void check(int world_size) const = 0;
  virtual Outcome run_serial() const = 0;
  /// Called on every rank; only the master's outcome is meaningful.
  virtual Outcome run_parallel(Communicator& comm) const = 0;
};

std::unique_ptr<Workload> make_wave(const WaveConfig& config);
std::unique_ptr<Workload> make_primes(const PrimesConfig& config);

/// Builds a registered workload ("wave": points, steps, c; "primes": limit).
/// Unknown names or parameters throw InvalidConfig.
std::unique_ptr<Workload> make_workload(std::string_view name, const ParamMap& params);

std::vector<std::string> workload_names();

}  // namespace mpk::workloads
