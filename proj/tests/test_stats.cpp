#include "doctest.h"
#include "retrylock/stats.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "retrylock/lock.hpp"

using namespace retrylock;
using doctest::Approx;

TEST_CASE("derive, frozen example") {
  // one second window: a million gets, ten thousand sleeps, rho 0.2
  StatSnapshot a;
  a.wall_time = 5.0;
  StatSnapshot b;
  b.gets = 1000000;
  b.sleeps = 10000;
  b.wall_time = 6.0;
  b.util = {2000, 10000};

  const DerivedStats d = derive(a, b);
  CHECK(d.lambda == Approx(1e6));
  CHECK(d.omega == Approx(1e4));
  CHECK(d.rho == Approx(0.2));
  CHECK(d.kappa == Approx(0.05));
  CHECK(d.k == Approx(0.0495049504950495).epsilon(1e-12));
  CHECK(d.s == Approx(2e-7));  // 0.2 microseconds
}

TEST_CASE("derive subtracts the first snapshot") {
  StatSnapshot a;
  a.gets = 500;
  a.sleeps = 20;
  a.wall_time = 10.0;
  a.util = {77, 100};
  StatSnapshot b;
  b.gets = 1500;
  b.sleeps = 70;
  b.wall_time = 12.0;
  b.util = {177, 600};  // pooled across the window: 100 of 500 busy

  const DerivedStats d = derive(a, b);
  CHECK(d.lambda == Approx(500.0));
  CHECK(d.omega == Approx(25.0));
  CHECK(d.rho == Approx(0.2));
  CHECK(d.kappa == Approx(25.0 / (500.0 * 0.2)).epsilon(1e-12));
}

TEST_CASE("derive error taxonomy") {
  StatSnapshot a, b;
  b.wall_time = 1.0;
  b.util = {1, 10};
  CHECK_THROWS_AS(derive(a, b), InsufficientActivity);  // no gets

  b.gets = 100;
  b.util = {0, 10};
  CHECK_THROWS_AS(derive(a, b), ZeroUtilization);

  b.util = {0, 0};
  CHECK_THROWS_AS(derive(a, b), ZeroUtilization);

  StatSnapshot later = b;
  later.util = {5, 10};
  later.wall_time = 0.0;  // clock went backwards
  CHECK_THROWS_AS(derive(b, later), std::invalid_argument);

  StatSnapshot shrunk;
  shrunk.gets = 50;
  shrunk.wall_time = 2.0;
  shrunk.util = {5, 10};
  StatSnapshot base = b;
  base.wall_time = 1.0;
  CHECK_THROWS_AS(derive(base, shrunk), std::invalid_argument);  // counters fell
}

TEST_CASE("utilization sampling brackets a held and an idle lock") {
  Mutex idle;
  const UtilizationEstimate none = estimate_utilization(
      idle, std::chrono::microseconds(200), std::chrono::milliseconds(30));
  CHECK(none.rho == Approx(0.0));
  CHECK(none.samples > 20);

  Mutex held;
  held.try_get(MutexMode::Exclusive, 9);
  const UtilizationEstimate full = estimate_utilization(
      held, std::chrono::microseconds(200), std::chrono::milliseconds(30));
  CHECK(full.rho == Approx(1.0));
  CHECK(full.std_error == Approx(0.0));
}

TEST_CASE("utilization sampling tracks a duty-cycled holder") {
  Mutex m;
  std::atomic<bool> stop{false};
  std::thread holder([&] {
    while (!stop.load(std::memory_order_relaxed)) {
      m.try_get(MutexMode::Exclusive, 3);
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      m.release(MutexMode::Exclusive, 3);
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  const UtilizationEstimate est = estimate_utilization(
      m, std::chrono::microseconds(500), std::chrono::milliseconds(500), 7);
  stop.store(true);
  holder.join();
  // a symmetric 20/20 duty cycle: half busy, with wide scheduler slack
  CHECK(est.rho > 0.2);
  CHECK(est.rho < 0.8);
  CHECK(est.samples > 300);
  CHECK(est.std_error > 0.0);
  CHECK(est.std_error ==
        Approx(std::sqrt(est.rho * (1 - est.rho) / est.samples)));
}
