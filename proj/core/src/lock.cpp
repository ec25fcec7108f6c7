#include "retrylock/lock.hpp"

#include <cassert>
#include <cstdio>
#include <thread>

namespace retrylock {

namespace {

class ThreadWaiter final : public Waiter {
 public:
  void yield() override { std::this_thread::yield(); }
  void sleep_for(std::chrono::milliseconds d) override {
    std::this_thread::sleep_for(d);
  }
};

constexpr std::uint64_t kRefMask = 0xFFFFFFFFull;

void require_id(MutexMode mode, std::uint32_t id) {
  if (id == 0 && mode != MutexMode::Shared) {
    throw std::invalid_argument("requester id 0 encodes the free word");
  }
}

}  // namespace

Waiter& thread_waiter() {
  static ThreadWaiter w;
  return w;
}

std::string LockSample::format() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "holder=0x%08X refcnt=%u gets=%u sleeps=%u",
                word.holder_id(), word.ref_count(),
                static_cast<unsigned>(gets), static_cast<unsigned>(sleeps));
  return buf;
}

bool Mutex::try_install(MutexMode mode, std::uint32_t requester_id) {
  std::uint64_t cur = word_.load(std::memory_order_relaxed);
  const MutexWord w{cur};
  if (!word_admits(w, mode)) return false;
  std::uint64_t next = 0;
  switch (mode) {
    case MutexMode::Shared:
      if (w.ref_count() == kRefMask) {
        assert(!"shared refcount saturated");
        return false;  // refuse rather than overflow into the holder bits
      }
      next = cur + 1;
      break;
    case MutexMode::Exclusive:
      next = static_cast<std::uint64_t>(requester_id) << 32;
      break;
    case MutexMode::Examine:
      // Park on top of whatever shared refs are live.
      next = (static_cast<std::uint64_t>(requester_id) << 32) | (cur & kRefMask);
      break;
  }
  return word_.compare_exchange_strong(cur, next, std::memory_order_acquire,
                                       std::memory_order_relaxed);
}

TryResult Mutex::try_get(MutexMode mode, std::uint32_t requester_id) {
  require_id(mode, requester_id);
  return try_install(mode, requester_id) ? TryResult::Acquired
                                         : TryResult::Busy;
}

AcquireReport Mutex::acquire(MutexMode mode, std::uint32_t requester_id,
                             const AcquireOptions& opts) {
  require_id(mode, requester_id);
  if (opts.spin_count < 0) {
    throw std::invalid_argument("spin_count must be >= 0");
  }
  validate_scheme(opts.scheme);
  Waiter& waiter = opts.waiter ? *opts.waiter : thread_waiter();

  gets_.fetch_add(1, std::memory_order_relaxed);

  AcquireReport rep;
  rep.attempts = 1;
  if (opts.on_attempt) opts.on_attempt();
  if (try_install(mode, requester_id)) {
    rep.outcome = AcquireOutcome::ImmediateGet;
    return rep;
  }

  std::uint64_t episode = 0;
  for (;;) {
    int budget = opts.spin_count;
    while (budget > 0) {
      --budget;
      ++rep.spin_cycles;
      const MutexWord w{word_.load(std::memory_order_relaxed)};
      if (opts.on_poll) opts.on_poll(w);
      if (!word_admits(w, mode)) continue;
      ++rep.attempts;
      if (opts.on_attempt) opts.on_attempt();
      if (try_install(mode, requester_id)) {
        rep.outcome = rep.sleeps ? AcquireOutcome::SleepGet
                                 : AcquireOutcome::SpinGet;
        return rep;
      }
      // Lost the install race; by default that ends the episode.
      if (!opts.resume_spin_on_race) break;
    }

    if (opts.wait_episode_cap && episode >= opts.wait_episode_cap) {
      throw AttemptCapExceeded("no acquisition after " +
                               std::to_string(episode) + " wait episodes");
    }
    const WaitAction act = plan_action(opts.scheme, episode++);
    if (act.is_sleep()) {
      ++rep.sleeps;
      sleeps_.fetch_add(1, std::memory_order_relaxed);
      waiter.sleep_for(act.duration);
    } else {
      ++rep.yields;
      waiter.yield();
    }

    // A zero budget degenerates to wait-and-retry: each wake probes the
    // word directly, since the poll loop above never will.
    if (opts.spin_count == 0) {
      ++rep.attempts;
      if (opts.on_attempt) opts.on_attempt();
      if (try_install(mode, requester_id)) {
        rep.outcome = rep.sleeps ? AcquireOutcome::SleepGet
                                 : AcquireOutcome::SpinGet;
        return rep;
      }
    }
  }
}

void Mutex::release(MutexMode mode, std::uint32_t requester_id) {
  switch (mode) {
    case MutexMode::Exclusive: {
      std::uint64_t expect = static_cast<std::uint64_t>(requester_id) << 32;
      if (!word_.compare_exchange_strong(expect, 0, std::memory_order_release,
                                         std::memory_order_relaxed)) {
        throw NotHeld("exclusive release: word does not show this holder");
      }
      return;
    }
    case MutexMode::Shared: {
      std::uint64_t cur = word_.load(std::memory_order_relaxed);
      for (;;) {
        if (MutexWord{cur}.ref_count() == 0) {
          throw NotHeld("shared release with no live refs");
        }
        if (word_.compare_exchange_weak(cur, cur - 1,
                                        std::memory_order_release,
                                        std::memory_order_relaxed)) {
          return;
        }
      }
    }
    case MutexMode::Examine: {
      std::uint64_t cur = word_.load(std::memory_order_relaxed);
      for (;;) {
        if (MutexWord{cur}.holder_id() != requester_id) {
          throw NotHeld("examine release: not the parked holder");
        }
        if (word_.compare_exchange_weak(cur, cur & kRefMask,
                                        std::memory_order_release,
                                        std::memory_order_relaxed)) {
          return;
        }
      }
    }
  }
}

ConvertResult Mutex::convert(MutexMode from, MutexMode to,
                             std::uint32_t requester_id) {
  if (requester_id == 0) {
    throw std::invalid_argument("requester id 0 encodes the free word");
  }
  if (from == MutexMode::Shared && to == MutexMode::Examine) {
    std::uint64_t cur = word_.load(std::memory_order_relaxed);
    for (;;) {
      const MutexWord w{cur};
      if (w.holder_id() != 0) return ConvertResult::Busy;
      if (w.ref_count() == 0) {
        assert(!"shared-to-examine without holding a shared ref");
        return ConvertResult::Busy;
      }
      // The caller's own ref moves into the holder slot.
      const std::uint64_t next =
          (static_cast<std::uint64_t>(requester_id) << 32) |
          (w.ref_count() - 1ull);
      if (word_.compare_exchange_weak(cur, next, std::memory_order_acq_rel,
                                      std::memory_order_relaxed)) {
        return ConvertResult::Converted;
      }
    }
  }
  if (from == MutexMode::Examine && to == MutexMode::Shared) {
    std::uint64_t cur = word_.load(std::memory_order_relaxed);
    for (;;) {
      const MutexWord w{cur};
      if (w.holder_id() != requester_id) return ConvertResult::Busy;
      const std::uint64_t next = (cur & kRefMask) + 1;
      if (word_.compare_exchange_weak(cur, next, std::memory_order_acq_rel,
                                      std::memory_order_relaxed)) {
        return ConvertResult::Converted;
      }
    }
  }
  if (from == MutexMode::Examine && to == MutexMode::Exclusive) {
    // An examine holder already blocks new shared gets, so the ref count can
    // only fall. Once it reads zero the word is bit-for-bit an exclusive
    // hold by the same id; a single load decides and nothing is written.
    const MutexWord w{word_.load(std::memory_order_acquire)};
    if (w.holder_id() != requester_id) return ConvertResult::Busy;
    if (w.ref_count() != 0) return ConvertResult::Busy;
    return ConvertResult::Converted;
  }
  throw UnsupportedConversion(std::string("no conversion from ") +
                              to_string(from) + " to " + to_string(to));
}

LockSample Mutex::read_sample() const {
  LockSample s;
  s.word = MutexWord{word_.load(std::memory_order_relaxed)};
  s.gets = gets_.load(std::memory_order_relaxed);
  s.sleeps = sleeps_.load(std::memory_order_relaxed);
  return s;
}

}  // namespace retrylock
