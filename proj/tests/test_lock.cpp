#include "doctest.h"
#include "retrylock/lock.hpp"

#include <chrono>
#include <stdexcept>
#include <vector>

using namespace retrylock;
using ms = std::chrono::milliseconds;

namespace {

// Virtual-clock waiter: advances a fake clock per action and runs a callback
// so a test can release the lock at a chosen moment in fake time.
struct ScriptedWaiter : Waiter {
  ms clock{0};
  std::uint64_t yields = 0;
  std::uint64_t sleeps = 0;
  std::function<void(ScriptedWaiter&)> after_wait;

  void yield() override {
    ++yields;
    if (after_wait) after_wait(*this);
  }
  void sleep_for(ms d) override {
    ++sleeps;
    clock += d;
    if (after_wait) after_wait(*this);
  }
};

}  // namespace

TEST_CASE("try_get transitions the word and leaves counters alone") {
  Mutex m;
  CHECK(m.try_get(MutexMode::Exclusive, 7) == TryResult::Acquired);
  LockSample s = m.read_sample();
  CHECK(s.word.raw == 0x700000000ull);
  CHECK(s.gets == 0);  // try_get is counter-silent
  CHECK(m.try_get(MutexMode::Exclusive, 9) == TryResult::Busy);
  CHECK(m.try_get(MutexMode::Shared, 9) == TryResult::Busy);
  m.release(MutexMode::Exclusive, 7);
  CHECK(m.read_sample().word.free());

  CHECK(m.try_get(MutexMode::Shared, 3) == TryResult::Acquired);
  CHECK(m.try_get(MutexMode::Shared, 4) == TryResult::Acquired);
  CHECK(m.read_sample().word.ref_count() == 2);
  CHECK(m.try_get(MutexMode::Exclusive, 5) == TryResult::Busy);
  CHECK(m.try_get(MutexMode::Examine, 5) == TryResult::Acquired);
  CHECK(m.read_sample().word.raw == 0x500000002ull);
  // examine parked: no new shared entrants
  CHECK(m.try_get(MutexMode::Shared, 6) == TryResult::Busy);
  m.release(MutexMode::Examine, 5);
  m.release(MutexMode::Shared, 3);
  m.release(MutexMode::Shared, 4);
  CHECK(m.read_sample().word.free());
}

TEST_CASE("requester id zero is rejected where it would forge a free word") {
  Mutex m;
  CHECK_THROWS_AS(m.try_get(MutexMode::Exclusive, 0), std::invalid_argument);
  CHECK_THROWS_AS(m.try_get(MutexMode::Examine, 0), std::invalid_argument);
  CHECK_THROWS_AS(m.acquire(MutexMode::Exclusive, 0), std::invalid_argument);
  CHECK_THROWS_AS(m.convert(MutexMode::Shared, MutexMode::Examine, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(m.convert(MutexMode::Examine, MutexMode::Shared, 0),
                  std::invalid_argument);
  // shared acquisition does not park an id, so zero is fine there
  CHECK(m.try_get(MutexMode::Shared, 0) == TryResult::Acquired);
  m.release(MutexMode::Shared, 0);
}

TEST_CASE("release guards") {
  Mutex m;
  CHECK_THROWS_AS(m.release(MutexMode::Exclusive, 7), NotHeld);
  CHECK_THROWS_AS(m.release(MutexMode::Shared, 7), NotHeld);
  m.try_get(MutexMode::Exclusive, 7);
  CHECK_THROWS_AS(m.release(MutexMode::Exclusive, 8), NotHeld);
  CHECK_THROWS_AS(m.release(MutexMode::Examine, 8), NotHeld);
  CHECK_THROWS_AS(m.release(MutexMode::Shared, 7), NotHeld);  // no refs live
  m.release(MutexMode::Exclusive, 7);
  CHECK(m.read_sample().word.free());

  // an exclusive hold and a refless examine hold share one encoding, so the
  // claims are interchangeable at release time
  m.try_get(MutexMode::Exclusive, 7);
  CHECK_NOTHROW(m.release(MutexMode::Examine, 7));
  CHECK(m.read_sample().word.free());
}

TEST_CASE("conversions") {
  Mutex m;
  m.try_get(MutexMode::Shared, 3);
  m.try_get(MutexMode::Shared, 4);
  m.try_get(MutexMode::Shared, 5);

  SUBCASE("shared to examine moves one ref into the holder half") {
    CHECK(m.convert(MutexMode::Shared, MutexMode::Examine, 9) ==
          ConvertResult::Converted);
    CHECK(m.read_sample().word.raw == 0x900000002ull);
    // a second examine conversion finds the slot taken
    CHECK(m.convert(MutexMode::Shared, MutexMode::Examine, 4) ==
          ConvertResult::Busy);

    SUBCASE("examine back to shared restores the count") {
      CHECK(m.convert(MutexMode::Examine, MutexMode::Shared, 9) ==
            ConvertResult::Converted);
      CHECK(m.read_sample().word.raw == 0x3ull);
      // wrong claimant is Busy, not NotHeld: conversion is advisory
      CHECK(m.convert(MutexMode::Examine, MutexMode::Shared, 9) ==
            ConvertResult::Busy);
    }

    SUBCASE("examine to exclusive waits out foreign refs") {
      CHECK(m.convert(MutexMode::Examine, MutexMode::Exclusive, 9) ==
            ConvertResult::Busy);  // two refs still live
      m.release(MutexMode::Shared, 4);
      m.release(MutexMode::Shared, 5);
      CHECK(m.convert(MutexMode::Examine, MutexMode::Exclusive, 9) ==
            ConvertResult::Converted);
      // the word is bit-identical between examine-no-refs and exclusive
      CHECK(m.read_sample().word.raw == 0x900000000ull);
      m.release(MutexMode::Exclusive, 9);
      CHECK(m.read_sample().word.free());
    }
  }

  SUBCASE("examine to exclusive by a non-holder is Busy") {
    // refs only, no examine holder: holder half reads zero, requester 7
    // does not match, and the live refs block it anyway
    CHECK(m.read_sample().word.raw == 0x3ull);
    CHECK(m.convert(MutexMode::Examine, MutexMode::Exclusive, 7) ==
          ConvertResult::Busy);
  }

  SUBCASE("unsupported directions throw") {
    CHECK_THROWS_AS(m.convert(MutexMode::Shared, MutexMode::Exclusive, 3),
                    UnsupportedConversion);
    CHECK_THROWS_AS(m.convert(MutexMode::Exclusive, MutexMode::Shared, 3),
                    UnsupportedConversion);
    CHECK_THROWS_AS(m.convert(MutexMode::Exclusive, MutexMode::Examine, 3),
                    UnsupportedConversion);
    CHECK_THROWS_AS(m.convert(MutexMode::Shared, MutexMode::Shared, 3),
                    UnsupportedConversion);
  }
}

TEST_CASE("shared to examine without a usable ref is Busy") {
  Mutex m;
#ifdef NDEBUG
  // protocol violation: no ref held. Debug builds assert instead.
  CHECK(m.convert(MutexMode::Shared, MutexMode::Examine, 9) ==
        ConvertResult::Busy);
#endif
  m.try_get(MutexMode::Exclusive, 5);
  CHECK(m.convert(MutexMode::Shared, MutexMode::Examine, 9) ==
        ConvertResult::Busy);
}

TEST_CASE("acquire on a free lock is an immediate get") {
  Mutex m;
  const AcquireReport r = m.acquire(MutexMode::Exclusive, 7);
  CHECK(r.outcome == AcquireOutcome::ImmediateGet);
  CHECK(r.attempts == 1);
  CHECK(r.spin_cycles == 0);
  CHECK(r.sleeps == 0);
  const LockSample s = m.read_sample();
  CHECK(s.gets == 1);
  CHECK(s.sleeps == 0);
  m.release(MutexMode::Exclusive, 7);
}

TEST_CASE("a yield scheme win is a spin get and stays out of the counters") {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 1);
  ScriptedWaiter w;
  w.after_wait = [&](ScriptedWaiter& self) {
    if (self.yields == 100) m.release(MutexMode::Exclusive, 1);
  };
  AcquireOptions opts;
  opts.scheme = TenG{};
  opts.waiter = &w;
  const AcquireReport r = m.acquire(MutexMode::Exclusive, 2, opts);
  CHECK(r.outcome == AcquireOutcome::SpinGet);
  CHECK(r.yields == 100);
  CHECK(r.sleeps == 0);
  const LockSample s = m.read_sample();
  CHECK(s.gets == 1);
  CHECK(s.sleeps == 0);  // the whole ordeal is invisible here
  m.release(MutexMode::Exclusive, 2);
}

TEST_CASE("patch scheme sleeps every episode until the holder leaves") {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 1);
  ScriptedWaiter w;
  w.after_wait = [&](ScriptedWaiter& self) {
    if (self.sleeps == 5) m.release(MutexMode::Exclusive, 1);
  };
  AcquireOptions opts;
  opts.scheme = Patch6904068{};
  opts.waiter = &w;
  const AcquireReport r = m.acquire(MutexMode::Exclusive, 2, opts);
  CHECK(r.outcome == AcquireOutcome::SleepGet);
  CHECK(r.sleeps == 5);
  CHECK(r.yields == 0);
  CHECK(m.read_sample().sleeps == 5);
  m.release(MutexMode::Exclusive, 2);
}

TEST_CASE("fifty seconds of contention costs exactly 5000 patch sleeps") {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 1);
  ScriptedWaiter w;
  w.after_wait = [&](ScriptedWaiter& self) {
    if (self.clock >= std::chrono::seconds(50)) {
      m.release(MutexMode::Exclusive, 1);
    }
  };
  AcquireOptions opts;
  opts.scheme = Patch6904068{};  // 10 ms timeout
  opts.waiter = &w;
  const AcquireReport r = m.acquire(MutexMode::Exclusive, 2, opts);
  CHECK(r.sleeps == 5000);
  CHECK(m.read_sample().sleeps == 5000);
  m.release(MutexMode::Exclusive, 2);
}

TEST_CASE("scheme0 interleaves 99 yields per sleep") {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 1);
  ScriptedWaiter w;
  w.after_wait = [&](ScriptedWaiter& self) {
    if (self.sleeps == 2) m.release(MutexMode::Exclusive, 1);
  };
  AcquireOptions opts;
  opts.scheme = Scheme0{};
  opts.waiter = &w;
  const AcquireReport r = m.acquire(MutexMode::Exclusive, 2, opts);
  CHECK(r.sleeps == 2);
  CHECK(r.yields == 198);
  m.release(MutexMode::Exclusive, 2);
}

TEST_CASE("test-and-test-and-set: atomic attempts only after admissible polls") {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 1);
  ScriptedWaiter w;
  w.after_wait = [&](ScriptedWaiter& self) {
    if (self.sleeps == 3) m.release(MutexMode::Exclusive, 1);
  };
  std::uint64_t polls = 0, admissible = 0, attempts = 0;
  AcquireOptions opts;
  opts.scheme = Patch6904068{};
  opts.waiter = &w;
  opts.on_poll = [&](MutexWord seen) {
    ++polls;
    if (word_admits(seen, MutexMode::Exclusive)) ++admissible;
  };
  opts.on_attempt = [&] { ++attempts; };
  const AcquireReport r = m.acquire(MutexMode::Exclusive, 2, opts);
  CHECK(r.sleeps == 3);
  CHECK(polls == r.spin_cycles);
  CHECK(polls == 3 * 255 + 1);  // three busy budgets, then the winning poll
  CHECK(admissible == 1);
  CHECK(attempts == 2);  // the entry attempt plus the admissible one
  CHECK(r.attempts == 2);
  m.release(MutexMode::Exclusive, 2);
}

TEST_CASE("zero spin budget degenerates to wait-and-retry") {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 1);
  ScriptedWaiter w;
  w.after_wait = [&](ScriptedWaiter& self) {
    if (self.sleeps == 4) m.release(MutexMode::Exclusive, 1);
  };
  AcquireOptions opts;
  opts.spin_count = 0;
  opts.scheme = Patch6904068{};
  opts.waiter = &w;
  const AcquireReport r = m.acquire(MutexMode::Exclusive, 2, opts);
  CHECK(r.outcome == AcquireOutcome::SleepGet);
  CHECK(r.spin_cycles == 0);
  CHECK(r.sleeps == 4);
  CHECK(r.attempts == 1 + 4);  // entry plus one probe per wake
  m.release(MutexMode::Exclusive, 2);
}

TEST_CASE("wait episode cap turns a stuck acquire into an exception") {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 1);
  ScriptedWaiter w;  // never releases
  AcquireOptions opts;
  opts.scheme = Patch6904068{};
  opts.waiter = &w;
  opts.wait_episode_cap = 3;
  CHECK_THROWS_AS(m.acquire(MutexMode::Exclusive, 2, opts),
                  AttemptCapExceeded);
  CHECK(w.sleeps == 3);
  // the failed acquire still counted as a get and its sleeps stuck
  const LockSample s = m.read_sample();
  CHECK(s.gets == 1);
  CHECK(s.sleeps == 3);
}

TEST_CASE("acquire validates its options") {
  Mutex m;
  AcquireOptions opts;
  opts.spin_count = -1;
  CHECK_THROWS_AS(m.acquire(MutexMode::Exclusive, 2, opts),
                  std::invalid_argument);
  AcquireOptions bad_scheme;
  bad_scheme.scheme = Scheme2{0};
  CHECK_THROWS_AS(m.acquire(MutexMode::Exclusive, 2, bad_scheme),
                  std::invalid_argument);
}

TEST_CASE("sample format is the canonical one") {
  Mutex m;
  m.try_get(MutexMode::Shared, 1);
  m.try_get(MutexMode::Shared, 2);
  m.try_get(MutexMode::Examine, 7);
  const LockSample s = m.read_sample();
  CHECK(s.format() == "holder=0x00000007 refcnt=2 gets=0 sleeps=0");
  LockSample crafted;
  crafted.word = MutexWord::from_parts(0xBEEF, 3);
  crafted.gets = 12;
  crafted.sleeps = 4;
  CHECK(crafted.format() == "holder=0x0000BEEF refcnt=3 gets=12 sleeps=4");
}
