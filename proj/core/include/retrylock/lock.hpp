#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "retrylock/mutex_word.hpp"
#include "retrylock/wait_scheme.hpp"

namespace retrylock {

struct NotHeld : std::logic_error {
  using std::logic_error::logic_error;
};

struct UnsupportedConversion : std::logic_error {
  using std::logic_error::logic_error;
};

// Only raised when a wait-episode cap was configured; a stuck acquire then
// fails loudly instead of hanging a test.
struct AttemptCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TryResult { Acquired, Busy };
enum class ConvertResult { Converted, Busy };

// Time source for the acquire engine. Production code uses the thread
// waiter; tests drive schemes with fake clocks so a 50-second contention
// story runs in microseconds.
class Waiter {
 public:
  virtual ~Waiter() = default;
  virtual void yield() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

Waiter& thread_waiter();

struct LockSample {
  MutexWord word;
  std::uint64_t gets = 0;
  std::uint64_t sleeps = 0;

  // "holder=0x%08X refcnt=%u gets=%u sleeps=%u"
  std::string format() const;
};

enum class AcquireOutcome { ImmediateGet, SpinGet, SleepGet };

struct AcquireReport {
  AcquireOutcome outcome = AcquireOutcome::ImmediateGet;
  std::uint64_t spin_cycles = 0;  // non-atomic polls consumed, all episodes
  std::uint64_t sleeps = 0;       // timed sleep episodes
  std::uint64_t yields = 0;
  std::uint64_t attempts = 0;     // atomic attempts, the entry one included
};

struct AcquireOptions {
  int spin_count = 255;
  WaitScheme scheme = TenG{};
  // After a poll saw an admissible word but the atomic attempt lost the
  // race, the default is to treat the episode as failed and wait; setting
  // this keeps polling on the remaining budget instead.
  bool resume_spin_on_race = false;
  std::uint64_t wait_episode_cap = 0;  // 0 = unbounded
  Waiter* waiter = nullptr;            // null = thread_waiter()
  // Test instrumentation, called per poll / per atomic attempt.
  std::function<void(MutexWord)> on_poll;
  std::function<void()> on_attempt;
};

// The lock. One word, two counters. gets counts acquire calls (a retrial
// with all its sleeps is still one get); sleeps counts timed sleep episodes
// across all acquires. Yields touch neither, which is exactly why a
// yield-only scheme keeps contention invisible in the counters.
//
// Acquisition order under contention is whatever the hardware makes of
// colliding CAS attempts: effectively serve-in-random-order, never a queue.
class Mutex {
 public:
  Mutex() = default;
  Mutex(const Mutex&) = delete;
  Mutex& operator=(const Mutex&) = delete;

  // One load plus at most one CAS; no retry inside. Acquire ordering on
  // success so the critical section observes the previous owner's writes.
  TryResult try_get(MutexMode mode, std::uint32_t requester_id);

  // Bounded test-and-test-and-set with scheme-driven waits: one entry
  // attempt, then rounds of non-atomic polling (spin_count polls each)
  // with an atomic attempt whenever a poll sees an admissible word, and a
  // plan_action wait after every failed round.
  AcquireReport acquire(MutexMode mode, std::uint32_t requester_id,
                        const AcquireOptions& opts = {});

  // Throws NotHeld when the word does not show the claimed hold. An examine
  // release keeps the shared count intact; shared releases are legal while
  // an examine holder is parked.
  void release(MutexMode mode, std::uint32_t requester_id);

  // Supported: Shared->Examine, Examine->Shared, Examine->Exclusive (the
  // latter only once every foreign shared ref drained). Anything else
  // throws UnsupportedConversion. Busy when another holder or a live ref
  // blocks the transition.
  ConvertResult convert(MutexMode from, MutexMode to,
                        std::uint32_t requester_id);

  // Racy snapshot, deliberately unsynchronized; this is the sampling
  // primitive the utilization estimator builds on.
  LockSample read_sample() const;

 private:
  bool try_install(MutexMode mode, std::uint32_t requester_id);

  std::atomic<std::uint64_t> word_{0};
  std::atomic<std::uint64_t> gets_{0};
  std::atomic<std::uint64_t> sleeps_{0};
};

}  // namespace retrylock
