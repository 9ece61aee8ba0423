// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "mpk/workloads.hpp"
#include "oracles.hpp"

using namespace mpk;
using namespace mpk::workloads;
using mpk::testing::bitwise_equal;

namespace {

std::vector<double> run_wave_parallel(const WaveConfig& config, int p, const WorldOptions& opts = {}) {
  return spawn_world(p, [&](Communicator& c) { return wave_parallel(config, c); }, opts).values[0];
}

PrimesResult run_primes_parallel(std::int64_t limit, int p, const WorldOptions& opts = {}) {
  return *spawn_world(p, [&](Communicator& c) { return primes_parallel(PrimesConfig{limit}, c); }, opts).values[0];
}

}  // namespace

TEST_CASE("wave_step_point") {
  CHECK(wave_step_point(0, 0, 0, 0, 0.1) == 0.0);
  CHECK(wave_step_point(0, 1, 0, 1, 0.1) == doctest::Approx(0.8).epsilon(1e-15));
  for (double u : {-0.7, 0.0, 0.3, 1.0}) CHECK(wave_step_point(0.2, u, 0.9, u, 0.0) == u);
}

TEST_CASE("wave_serial") {
  SUBCASE("c = 0 leaves the sine samples unchanged") {
    const WaveConfig config{64, 50, 0.0};
    const auto out = wave_serial(config);
    for (std::size_t i = 1; i + 1 < 64; ++i) {
      CHECK(out[i] == std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 63.0));
    }
    CHECK(bitwise_equal(out, wave_initial(64)));
  }
  SUBCASE("two points") { CHECK(wave_serial(WaveConfig{2, 1, 0.1}) == std::vector<double>{0.0, 0.0}); }
  SUBCASE("matches the straight-loop oracle") {
    CHECK(bitwise_equal(wave_serial(WaveConfig{8, 3, 0.1}), mpk::testing::wave_table_oracle(8, 3, 0.1)));
    CHECK(bitwise_equal(wave_serial(WaveConfig{50, 40, 0.3}), mpk::testing::wave_table_oracle(50, 40, 0.3)));
  }
  SUBCASE("invalid configs") {
    CHECK_THROWS_AS(wave_serial(WaveConfig{1, 1, 0.1}), Error);
    CHECK_THROWS_AS(wave_serial(WaveConfig{8, 0, 0.1}), Error);
    CHECK_THROWS_AS(wave_serial(WaveConfig{8, 1, std::nan("")}), Error);
  }
}

TEST_CASE("property: ends stay pinned after every step") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
    const std::size_t steps = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    const double c = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    for (std::size_t s = 1; s <= steps; ++s) {
      const auto u = wave_serial(WaveConfig{n, s, c});
      REQUIRE(u.front() == 0.0);
      REQUIRE(u.back() == 0.0);
    }
  }
}

TEST_CASE("wave_parallel equals wave_serial bitwise") {
  const WaveConfig config{800, 100, 0.1};
  const auto serial = wave_serial(config);
  for (int p : {1, 2, 4, 8}) {
    CAPTURE(p);
    CHECK(bitwise_equal(run_wave_parallel(config, p), serial));
  }
  const WaveConfig frozen{800, 100, 0.0};
  for (int p : {1, 2, 4, 8}) CHECK(bitwise_equal(run_wave_parallel(frozen, p), wave_initial(800)));
}

TEST_CASE("property: parallel wave is bitwise serial for random grids") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 15; ++trial) {
    const int p = std::uniform_int_distribution<int>(1, 6)(rng);
    const std::size_t per = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    const std::size_t n = std::max<std::size_t>(2, per * static_cast<std::size_t>(p));
    if (n % static_cast<std::size_t>(p) != 0) continue;
    const std::size_t steps = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const double c = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    const WaveConfig config{n, steps, c};
    WorldOptions opts;
    opts.eager_threshold = trial % 2 == 0 ? 0 : kDefaultEagerThreshold;
    CAPTURE(n);
    CAPTURE(p);
    CHECK(bitwise_equal(run_wave_parallel(config, p, opts), wave_serial(config)));
  }
}

TEST_CASE("wave_parallel rejects uneven decomposition") {
  try {
    run_wave_parallel(WaveConfig{8, 1, 0.1}, 3);
    FAIL("expected failure");
  } catch (const RankPanicked& e) {
    CHECK(e.cause() == ErrorKind::IndivisibleDecomposition);
  }
}

TEST_CASE("naive_is_prime") {
  CHECK(naive_is_prime(11));
  CHECK_FALSE(naive_is_prime(25));
  CHECK_FALSE(naive_is_prime(7));
  CHECK_FALSE(naive_is_prime(1));
  CHECK(naive_is_prime(97));
  CHECK_FALSE(naive_is_prime(99));
  // Even input follows the same loop, which only tries odd divisors.
  CHECK(naive_is_prime(16));
  CHECK_FALSE(naive_is_prime(10));
}

TEST_CASE("primes_serial") {
  CHECK(primes_serial(PrimesConfig{100}) == PrimesResult{25, 97});
  CHECK(primes_serial(PrimesConfig{11}) == PrimesResult{5, 11});
  CHECK(primes_serial(PrimesConfig{12}) == PrimesResult{5, 11});
  CHECK(primes_serial(PrimesConfig{1000}) == PrimesResult{168, 997});
  try {
    primes_serial(PrimesConfig{10});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LimitTooSmall);
  }
}

TEST_CASE("property: primes_serial matches a sieve") {
  for (std::int64_t limit = 11; limit <= 3000; ++limit) {
    const auto [count, largest] = mpk::testing::sieve_count(limit);
    REQUIRE(primes_serial(PrimesConfig{limit}) == PrimesResult{count, largest});
  }
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto limit = std::uniform_int_distribution<std::int64_t>(3000, 300000)(rng);
    const auto [count, largest] = mpk::testing::sieve_count(limit);
    CHECK(primes_serial(PrimesConfig{limit}) == PrimesResult{count, largest});
  }
}

TEST_CASE("primes_parallel equals serial for every world size") {
  CHECK(run_primes_parallel(100, 1) == primes_serial(PrimesConfig{100}));
  for (int p : {2, 3, 4, 8}) {
    CAPTURE(p);
    CHECK(run_primes_parallel(100000, p) == PrimesResult{9592, 99991});
  }
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto limit = std::uniform_int_distribution<std::int64_t>(11, 20000)(rng);
    const int p = std::uniform_int_distribution<int>(1, 9)(rng);
    const auto [count, largest] = mpk::testing::sieve_count(limit);
    CHECK(run_primes_parallel(limit, p) == PrimesResult{count, largest});
  }
}

TEST_CASE("property: cyclic partition covers the odd numbers exactly once") {
  for (int p = 1; p <= 9; ++p) {
    for (std::int64_t limit : {11, 12, 37, 100, 257}) {
      std::multiset<std::int64_t> seen;
      for (int r = 0; r < p; ++r) {
        for (auto n : cyclic_candidates(r, p, limit)) seen.insert(n);
      }
      std::multiset<std::int64_t> odd;
      for (std::int64_t n = 1; n <= limit; n += 2) odd.insert(n);
      CHECK(seen == odd);
    }
  }
}

TEST_CASE("workload registry") {
  CHECK(workload_names() == std::vector<std::string>{"primes", "wave"});
  auto wave = make_workload("wave", {{"points", "24"}, {"steps", "5"}});
  CHECK(wave->name() == "wave");
  CHECK(wave->accepts(4));
  CHECK_FALSE(wave->accepts(5));
  CHECK_THROWS_AS(wave->check(5), Error);
  CHECK(wave->params().at("points") == "24");
  CHECK(wave->run_serial().amplitudes.size() == 24);

  auto primes = make_workload("primes", {{"limit", "100"}});
  CHECK(primes->run_serial().summary == "count=25 largest=97");
  auto parallel = spawn_world(3, [&](Communicator& c) { return primes->run_parallel(c).summary; });
  CHECK(parallel.values[0] == "count=25 largest=97");

  CHECK_THROWS_AS(make_workload("fft", {}), Error);
  CHECK_THROWS_AS(make_workload("wave", {{"width", "3"}}), Error);
  CHECK_THROWS_AS(make_workload("primes", {{"limit", "ten"}}), Error);
  CHECK_THROWS_AS(make_workload("primes", {{"limit", "5"}}), Error);
}
