#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace retrylock {

// What a contender does after each exhausted spin episode. All schemes are
// pure decision tables over the per-acquire episode index, so the same code
// drives the real lock, the simulator, and the analytic T mapping.

struct TenG {};  // spin then yield, never a timed sleep

struct Patch6904068 {
  std::chrono::milliseconds timeout{10};  // timed sleep every episode
};

struct Scheme0 {
  int yields_per_cycle = 99;
  std::chrono::milliseconds sleep{1};  // one timed sleep per yield cycle
};

struct Scheme1 {
  std::chrono::milliseconds wait_time{1};  // one yield, then timed sleeps
};

struct Scheme2 {
  int max_wait_cs = 1;  // backoff cap = 10 * max_wait_cs milliseconds
};

using WaitScheme = std::variant<TenG, Patch6904068, Scheme0, Scheme1, Scheme2>;

struct WaitAction {
  enum class Kind { Yield, Sleep };
  Kind kind = Kind::Yield;
  std::chrono::milliseconds duration{0};  // zero for Yield

  bool is_sleep() const { return kind == Kind::Sleep; }

  static WaitAction yield() { return {}; }
  static WaitAction sleep(std::chrono::milliseconds d) {
    return {Kind::Sleep, d};
  }

  friend bool operator==(const WaitAction& a, const WaitAction& b) {
    return a.kind == b.kind && a.duration == b.duration;
  }
};

// index-th timed sleep of the scheme2 ladder (0-based): the template
// 10,10,30,30,80,70,160,150 ms followed by the cap forever, every entry
// clamped to the cap. The 80,70 and 160,150 irregularity is kept verbatim;
// observed behaviour, not an accident of this implementation.
std::chrono::milliseconds scheme2_backoff_ms(int max_wait_cs,
                                             std::uint64_t index);

// Decision for the episode_index-th wait of one acquire call. Yields count
// as episodes too, so indices keep advancing through mixed yield/sleep
// cadences.
WaitAction plan_action(const WaitScheme& scheme, std::uint64_t episode_index);

// Rejects non-positive sleeps, caps, and cycle lengths.
void validate_scheme(const WaitScheme& scheme);

const char* scheme_name(const WaitScheme& scheme);

// Recognizes "10g", "patch6904068", "scheme0", "scheme1", "scheme2" with
// default tunables.
std::optional<WaitScheme> parse_scheme(const std::string& name);

}  // namespace retrylock
