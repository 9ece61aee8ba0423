// SPDX-License-Identifier: Apache-2.0
#include "mpk/workloads.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "mpk/collectives.hpp"

namespace mpk::workloads {

namespace {

constexpr int kTagHaloToLeft = 1;
constexpr int kTagHaloToRight = 2;

std::int64_t isqrt(std::int64_t n) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

void check_divisible(std::size_t total_points, int world_size) {
  if (total_points % static_cast<std::size_t>(world_size) != 0) {
    throw Error(ErrorKind::IndivisibleDecomposition, std::to_string(total_points) + " points cannot be split evenly over " +
                                                         std::to_string(world_size) + " ranks");
  }
}

}  // namespace

void WaveConfig::validate() const {
  if (total_points < 2) throw Error(ErrorKind::InvalidConfig, "wave needs at least 2 points");
  if (time_steps < 1) throw Error(ErrorKind::InvalidConfig, "wave needs at least 1 time step");
  if (!std::isfinite(c)) throw Error(ErrorKind::InvalidConfig, "wave parameter c must be finite");
}

double wave_step_point(double u_im1, double u_i, double u_ip1, double u_i_prev, double c) noexcept {
  return (2.0 * u_i) - u_i_prev + (c * (u_im1 - (2.0 * u_i) + u_ip1));
}

std::vector<double> wave_initial(std::size_t total_points) {
  std::vector<double> u(total_points, 0.0);
  const double span = static_cast<double>(total_points - 1);
  for (std::size_t i = 1; i + 1 < total_points; ++i) {
    u[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / span);
  }
  return u;
}

std::vector<double> wave_serial(const WaveConfig& config) {
  config.validate();
  const std::size_t n = config.total_points;
  WaveState s;
  s.u_curr = wave_initial(n);
  s.u_prev = s.u_curr;
  s.u_next.assign(n, 0.0);
  for (std::size_t step = 0; step < config.time_steps; ++step) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      s.u_next[i] = wave_step_point(s.u_curr[i - 1], s.u_curr[i], s.u_curr[i + 1], s.u_prev[i], config.c);
    }
    std::swap(s.u_prev, s.u_curr);
    std::swap(s.u_curr, s.u_next);
  }
  return s.u_curr;
}

std::vector<double> wave_parallel(const WaveConfig& config, Communicator& comm) {
  // The master owns the input and broadcasts it.
  std::vector<double> header;
  if (comm.is_master()) {
    config.validate();
    header = {config.c, static_cast<double>(config.total_points), static_cast<double>(config.time_steps)};
  }
  header = bcast(comm, kMaster, std::move(header));
  const double c = header[0];
  const auto total = static_cast<std::size_t>(header[1]);
  const auto steps = static_cast<std::size_t>(header[2]);

  const int rank = comm.rank().value;
  const int p = comm.size();
  check_divisible(total, p);
  const std::size_t n = total / static_cast<std::size_t>(p);
  const std::size_t first = static_cast<std::size_t>(rank) * n;
  const std::optional<RankId> left = rank > 0 ? std::optional(RankId{rank - 1}) : std::nullopt;
  const std::optional<RankId> right = rank + 1 < p ? std::optional(RankId{rank + 1}) : std::nullopt;

  // Local index j in [1, n] holds global point first + j - 1.
  const auto initial = wave_initial(total);
  WaveState s;
  s.u_curr.assign(n + 2, 0.0);
  for (std::size_t j = 1; j <= n; ++j) s.u_curr[j] = initial[first + j - 1];
  s.u_prev = s.u_curr;
  s.u_next.assign(n + 2, 0.0);

  auto send_edges = [&] {
    if (left) comm.send(*left, kTagHaloToLeft, Payload(std::vector<double>{s.u_curr[1]}));
    if (right) comm.send(*right, kTagHaloToRight, Payload(std::vector<double>{s.u_curr[n]}));
  };
  auto recv_halos = [&] {
    if (left) s.u_curr[0] = comm.recv_as<double>(*left, kTagHaloToRight).at(0);
    if (right) s.u_curr[n + 1] = comm.recv_as<double>(*right, kTagHaloToLeft).at(0);
  };

  for (std::size_t step = 0; step < steps; ++step) {
    // Even ranks send first so the chain never waits on itself under
    // rendezvous delivery.
    if (rank % 2 == 0) {
      send_edges();
      recv_halos();
    } else {
      recv_halos();
      send_edges();
    }
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t g = first + j - 1;
      if (g == 0 || g + 1 == total) continue;  // pinned ends stay 0
      s.u_next[j] = wave_step_point(s.u_curr[j - 1], s.u_curr[j], s.u_curr[j + 1], s.u_prev[j], c);
    }
    std::swap(s.u_prev, s.u_curr);
    std::swap(s.u_curr, s.u_next);
  }

  std::vector<double> block(s.u_curr.begin() + 1, s.u_curr.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  return gather(comm, kMaster, std::move(block));
}

void PrimesConfig::validate() const {
  if (limit < 11) throw Error(ErrorKind::LimitTooSmall, "limit must be >= 11, got " + std::to_string(limit));
}

bool naive_is_prime(std::int64_t n) noexcept {
  if (n <= 10) return false;
  const std::int64_t root = isqrt(n);
  for (std::int64_t i = 3; i <= root; i += 2) {
    if (n % i == 0) return false;
  }
  return true;
}

PrimesResult primes_serial(const PrimesConfig& config) {
  config.validate();
  PrimesResult result{4, 7};
  for (std::int64_t n = 11; n <= config.limit; n += 2) {
    if (naive_is_prime(n)) {
      ++result.prime_count;
      result.largest_prime = n;
    }
  }
  return result;
}

std::vector<std::int64_t> cyclic_candidates(int rank, int ntasks, std::int64_t limit) {
  std::vector<std::int64_t> out;
  const std::int64_t stride = std::int64_t{ntasks} * 2;
  for (std::int64_t n = std::int64_t{rank} * 2 + 1; n <= limit; n += stride) out.push_back(n);
  return out;
}

std::optional<PrimesResult> primes_parallel(const PrimesConfig& config, Communicator& comm) {
  config.validate();
  const std::int64_t mystart = std::int64_t{comm.rank().value} * 2 + 1;
  const std::int64_t stride = std::int64_t{comm.size()} * 2;
  std::int64_t count = 0;
  std::int64_t value = 0;
  for (std::int64_t n = mystart; n <= config.limit; n += stride) {
    if (naive_is_prime(n)) {
      ++count;
      value = n;
    }
  }
  const auto total = reduce(comm, kMaster, std::vector<std::int64_t>{count}, ReduceOp::Sum);
  const auto largest = reduce(comm, kMaster, std::vector<std::int64_t>{value}, ReduceOp::Max);
  if (!comm.is_master()) return std::nullopt;
  // The four primes below 11 are never tested, so they are added back here.
  return PrimesResult{total.at(0) + 4, largest.at(0) > 0 ? largest.at(0) : 7};
}

// ---------------------------------------------------------------------------

namespace {

class WaveWorkload final : public Workload {
 public:
  explicit WaveWorkload(const WaveConfig& config) : config_(config) { config_.validate(); }

  std::string name() const override { return "wave"; }

  ParamMap params() const override {
    return {{"points", std::to_string(config_.total_points)},
            {"steps", std::to_string(config_.time_steps)},
            {"c", fmt::format("{}", config_.c)}};
  }

  bool accepts(int world_size) const override {
    return world_size >= 1 && config_.total_points % static_cast<std::size_t>(world_size) == 0;
  }

  void check(int world_size) const override {
    if (world_size < 1) throw Error(ErrorKind::InvalidConfig, "world size must be >= 1");
    check_divisible(config_.total_points, world_size);
  }

  Outcome run_serial() const override { return outcome(wave_serial(config_)); }

  Outcome run_parallel(Communicator& comm) const override { return outcome(wave_parallel(config_, comm)); }

 private:
  Outcome outcome(std::vector<double> u) const {
    Outcome out;
    out.summary = fmt::format("points={} steps={} c={}", config_.total_points, config_.time_steps, config_.c);
    out.amplitudes = std::move(u);
    return out;
  }

  WaveConfig config_;
};

class PrimesWorkload final : public Workload {
 public:
  explicit PrimesWorkload(const PrimesConfig& config) : config_(config) { config_.validate(); }

  std::string name() const override { return "primes"; }
  ParamMap params() const override { return {{"limit", std::to_string(config_.limit)}}; }
  bool accepts(int world_size) const override { return world_size >= 1; }

  void check(int world_size) const override {
    if (world_size < 1) throw Error(ErrorKind::InvalidConfig, "world size must be >= 1");
  }

  Outcome run_serial() const override { return outcome(primes_serial(config_)); }

  Outcome run_parallel(Communicator& comm) const override {
    auto result = primes_parallel(config_, comm);
    return result ? outcome(*result) : Outcome{};
  }

 private:
  static Outcome outcome(const PrimesResult& r) {
    Outcome out;
    out.summary = fmt::format("count={} largest={}", r.prime_count, r.largest_prime);
    out.primes = r;
    return out;
  }

  PrimesConfig config_;
};

template <class T>
T parse_param(const ParamMap& params, std::string_view key, T fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const std::string& text = it->second;
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::InvalidConfig, "bad value for " + std::string(key) + ": '" + text + "'");
  }
  return value;
}

void reject_unknown(const ParamMap& params, std::initializer_list<std::string_view> known, std::string_view workload) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw Error(ErrorKind::InvalidConfig, "unknown parameter '" + key + "' for " + std::string(workload));
  }
}

}  // namespace

std::unique_ptr<Workload> make_wave(const WaveConfig& config) { return std::make_unique<WaveWorkload>(config); }

std::unique_ptr<Workload> make_primes(const PrimesConfig& config) { return std::make_unique<PrimesWorkload>(config); }

std::unique_ptr<Workload> make_workload(std::string_view name, const ParamMap& params) {
  if (name == "wave") {
    reject_unknown(params, {"points", "steps", "c"}, name);
    WaveConfig config;
    config.total_points = parse_param(params, "points", config.total_points);
    config.time_steps = parse_param(params, "steps", config.time_steps);
    config.c = parse_param(params, "c", config.c);
    return make_wave(config);
  }
  if (name == "primes") {
    reject_unknown(params, {"limit"}, name);
    PrimesConfig config;
    config.limit = parse_param(params, "limit", config.limit);
    return make_primes(config);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown workload '" + std::string(name) + "'");
}

std::vector<std::string> workload_names() { return {"primes", "wave"}; }

}  // namespace mpk::workloads
