// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. `--live --cli PATH` runs only the live
// prediction smoke test against the mpk executable at PATH.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "collective_suite.hpp"
#include "mpk/metrics.hpp"
#include "mpk/predictor.hpp"
#include "mpk/workloads.hpp"
#include "oracles.hpp"

using namespace mpk;
using mpk::testing::bitwise_equal;

namespace {

// Tolerances and time limits, fixed here.
constexpr double kSlopeRelTol = 0.10;
constexpr double kWaveSlopeRef = 2.13;
constexpr double kPrimesSlopeRef = 0.0002;
constexpr double kQuotedMaxSpeedup = 0.66228534;
constexpr double kSpeedupTol = 1e-4;
constexpr double kEfficiencyRef = 0.082786;
constexpr double kEfficiencyTol = 1e-4;
constexpr double kAmdahlRef = 4.705882353;
constexpr double kAmdahlTol = 1e-9;
constexpr double kGustafsonRef = 7.3;
constexpr double kGustafsonTol = 1e-12;
constexpr int kRandomPayloads = 100;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> body;
};

void require(Outcome& o, bool cond, const std::string& what) {
  if (!cond) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

predictor::SpeedupCurve curve_of(const std::vector<int>& procs, const std::vector<double>& seconds) {
  predictor::SpeedupCurve c;
  for (std::size_t i = 0; i < procs.size(); ++i) c.points.push_back({procs[i], seconds[i]});
  return c;
}

Outcome fixture_classification() {
  Outcome o;
  const auto wave = curve_of({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {1.3561, 3.6942, 6.3833, 9.4002, 12.5629, 15.301,
                                                              18.1778, 21.5001, 24.1733, 27.3349});
  const auto primes = curve_of({2, 4, 8, 10, 16, 20}, {55.5887, 55.464, 54.9653, 55.5158, 55.1428, 55.9213});
  const auto wv = predictor::classify(wave);
  const auto pv = predictor::classify(primes);
  require(o, wv.kind == predictor::VerdictKind::PoorSpeedup, "wave verdict is not POOR");
  require(o, pv.kind == predictor::VerdictKind::LinearSpeedup, "primes verdict is not LINEAR");
  require(o, std::abs(wv.normalized_slope - kWaveSlopeRef) <= kSlopeRelTol * kWaveSlopeRef,
          fmt::format("wave slope {} outside {} +/- 10%", wv.normalized_slope, kWaveSlopeRef));
  require(o, std::abs(pv.normalized_slope - kPrimesSlopeRef) <= kSlopeRelTol * kPrimesSlopeRef,
          fmt::format("primes slope {} outside {} +/- 10%", pv.normalized_slope, kPrimesSlopeRef));
  if (o.pass) {
    o.detail = fmt::format("wave slope={:.4f} POOR, primes slope={:.6f} LINEAR", wv.normalized_slope,
                           pv.normalized_slope);
  }
  return o;
}

Outcome speedup_arithmetic() {
  Outcome o;
  const double psi = metrics::speedup(0.80216, 1.2112);
  const double eff = metrics::efficiency(psi, 8);
  require(o, std::abs(psi - kQuotedMaxSpeedup) <= kSpeedupTol, fmt::format("speedup {}", psi));
  require(o, std::abs(eff - kEfficiencyRef) <= kEfficiencyTol, fmt::format("efficiency {}", eff));
  if (o.pass) o.detail = fmt::format("speedup={:.8f} efficiency(p=8)={:.6f}", psi, eff);
  return o;
}

Outcome model_formulas() {
  Outcome o;
  const double a = metrics::amdahl_bound(0.1, 8);
  const double g = metrics::gustafson_bound(0.1, 8);
  require(o, std::abs(a - kAmdahlRef) <= kAmdahlTol, fmt::format("amdahl {}", a));
  require(o, std::abs(g - kGustafsonRef) <= kGustafsonTol, fmt::format("gustafson {}", g));
  for (double f : {0.01, 0.1, 0.5}) {
    double prev = metrics::amdahl_bound(f, 1);
    for (int p = 2; p <= 10000; ++p) {
      const double now = metrics::amdahl_bound(f, p);
      if (now < prev) {
        require(o, false, fmt::format("amdahl decreases at f={} p={}", f, p));
        break;
      }
      prev = now;
    }
  }
  if (o.pass) o.detail = fmt::format("amdahl(0.1,8)={:.10f} gustafson(0.1,8)={}", a, g);
  return o;
}

std::vector<double> wave_parallel_run(const workloads::WaveConfig& config, int p, const WorldOptions& opts = {}) {
  return spawn_world(p, [&](Communicator& c) { return workloads::wave_parallel(config, c); }, opts).values[0];
}

workloads::PrimesResult primes_parallel_run(std::int64_t limit, int p, const WorldOptions& opts = {}) {
  return *spawn_world(p, [&](Communicator& c) { return workloads::primes_parallel({limit}, c); }, opts).values[0];
}

Outcome wave_equivalence() {
  Outcome o;
  const workloads::WaveConfig config{800, 100, 0.1};
  const workloads::WaveConfig frozen{800, 100, 0.0};
  const auto serial = workloads::wave_serial(config);
  const auto initial = workloads::wave_initial(800);
  require(o, bitwise_equal(workloads::wave_serial(frozen), initial), "serial c=0 changed the amplitudes");
  for (int p : {1, 2, 4, 8}) {
    require(o, bitwise_equal(wave_parallel_run(config, p), serial), fmt::format("p={} differs from serial", p));
    require(o, bitwise_equal(wave_parallel_run(frozen, p), initial), fmt::format("p={} c=0 not conserved", p));
  }
  if (o.pass) o.detail = "bitwise equal for p in {1,2,4,8}; c=0 conserved";
  return o;
}

Outcome primes_equivalence() {
  Outcome o;
  const std::vector<std::pair<std::int64_t, workloads::PrimesResult>> cases{{1000, {168, 997}},
                                                                           {100000, {9592, 99991}}};
  for (const auto& [limit, expected] : cases) {
    const auto [count, largest] = mpk::testing::sieve_count(limit);
    require(o, workloads::PrimesResult{count, largest} == expected, fmt::format("sieve disagrees at {}", limit));
    const auto serial = workloads::primes_serial({limit});
    require(o, serial == expected, fmt::format("serial {} gives {} {}", limit, serial.prime_count, serial.largest_prime));
    for (int p : {1, 2, 3, 4, 8}) {
      const auto par = primes_parallel_run(limit, p);
      require(o, par == expected,
              fmt::format("parallel p={} limit={} gives {} {}", p, limit, par.prime_count, par.largest_prime));
    }
  }
  if (o.pass) o.detail = "1e3 -> (168, 997), 1e5 -> (9592, 99991) for p in {1,2,3,4,8}";
  return o;
}

Outcome collective_oracles() {
  Outcome o;
  int rounds = 0;
  for (int p : {1, 2, 3, 4, 8}) {
    for (int i = 0; i < kRandomPayloads; ++i) {
      const auto seed = static_cast<std::uint64_t>(p) * 100003u + static_cast<std::uint64_t>(i);
      const auto result = spawn_world(p, [&](Communicator& c) { return mpk::testing::collective_round(c, seed); });
      for (std::size_t r = 0; r < result.values.size(); ++r) {
        for (const auto& name : result.values[r]) {
          require(o, false, fmt::format("{} mismatch at p={} seed={} rank={}", name, p, seed, r));
        }
      }
      ++rounds;
    }
  }
  if (o.pass) o.detail = fmt::format("{} randomized rounds, every collective bitwise equal to its reference", rounds);
  return o;
}

Outcome protocol_transparency() {
  Outcome o;
  std::vector<std::size_t> thresholds{0, kDefaultEagerThreshold, kUnlimited};
  std::vector<std::vector<std::vector<double>>> wave_results;
  std::vector<std::vector<workloads::PrimesResult>> primes_results;
  for (auto t : thresholds) {
    WorldOptions opts;
    opts.eager_threshold = t;
    std::vector<std::vector<double>> w;
    for (int p : {1, 2, 4, 8}) {
      w.push_back(wave_parallel_run({800, 100, 0.1}, p, opts));
      w.push_back(wave_parallel_run({800, 100, 0.0}, p, opts));
    }
    wave_results.push_back(std::move(w));
    std::vector<workloads::PrimesResult> pr;
    for (std::int64_t limit : {1000, 100000}) {
      for (int p : {1, 2, 3, 4, 8}) pr.push_back(primes_parallel_run(limit, p, opts));
    }
    primes_results.push_back(std::move(pr));
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    for (std::size_t k = 0; k < wave_results[0].size(); ++k) {
      require(o, bitwise_equal(wave_results[i][k], wave_results[0][k]), fmt::format("wave run {} differs", k));
    }
    require(o, primes_results[i] == primes_results[0], "primes results differ");
  }
  if (o.pass) o.detail = "wave and primes identical for thresholds 0, 65536, inf";
  return o;
}

// Runs `command` and returns its stdout; the exit status goes to `status`.
std::string capture(const std::string& command, int& status) {
  std::string out;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  status = ::pclose(pipe);
  return out;
}

std::string verdict_line(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("verdict: ")) return line.substr(9);
  }
  return "";
}

Outcome live_prediction(const std::string& cli) {
  Outcome o;
  int status = 0;
  const auto primes = capture(cli + " predict --workload primes --limit 2000000 --max-procs 8", status);
  const auto pv = verdict_line(primes);
  require(o, status == 0, fmt::format("primes predict exited with status {}", status));
  require(o, pv == "LINEAR", "primes verdict '" + pv + "'");
  const auto wave = capture(cli + " predict --workload wave --points 800 --steps 2000 --max-procs 8", status);
  const auto wv = verdict_line(wave);
  require(o, status == 0, fmt::format("wave predict exited with status {}", status));
  require(o, wv == "POOR" || wv == "INDETERMINATE", "wave verdict '" + wv + "'");
  o.detail += (o.detail.empty() ? "" : "; ") + fmt::format("primes {}, wave {}", pv, wv);
  return o;
}

int run(const std::vector<Criterion>& criteria) {
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_seconds) {
      o.pass = false;
      o.detail += fmt::format("{}took {:.2f} s, limit {} s", o.detail.empty() ? "" : "; ", secs, c.limit_seconds);
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("{} [{}] {} ({:.2f} s / {} s): {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                             c.limit_seconds, o.detail)
              << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
                           criteria.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  bool live = false;
  std::string cli;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--live") live = true;
    if (args[i] == "--cli" && i + 1 < args.size()) cli = args[++i];
  }
  if (live) {
    if (cli.empty()) {
      std::cerr << "--live needs --cli PATH\n";
      return 2;
    }
    return run({{8, "live prediction smoke test", 300.0, [&] { return live_prediction(cli); }}});
  }
  return run({
      {1, "fixture classification", 1.0, fixture_classification},
      {2, "speedup arithmetic", 1.0, speedup_arithmetic},
      {3, "model formulas", 1.0, model_formulas},
      {4, "wave equivalence", 10.0, wave_equivalence},
      {5, "primes equivalence", 30.0, primes_equivalence},
      {6, "collective oracle suite", 60.0, collective_oracles},
      {7, "protocol transparency", 60.0, protocol_transparency},
  });
}
