#pragma once

#include <cstdint>

namespace retrylock {

// One 64-bit lock word: holder id in the upper half, shared reference count
// in the lower half. raw == 0 means free. An exclusive holder parks its id
// over a zero count; an examine holder parks its id on top of whatever
// shared count is live, which blocks new shared acquisitions while existing
// shared holders drain.
struct MutexWord {
  std::uint64_t raw = 0;

  constexpr std::uint32_t holder_id() const {
    return static_cast<std::uint32_t>(raw >> 32);
  }
  constexpr std::uint32_t ref_count() const {
    return static_cast<std::uint32_t>(raw & 0xFFFFFFFFull);
  }
  constexpr bool free() const { return raw == 0; }

  static constexpr MutexWord from_parts(std::uint32_t holder,
                                        std::uint32_t refs) {
    return MutexWord{(static_cast<std::uint64_t>(holder) << 32) | refs};
  }

  friend constexpr bool operator==(MutexWord a, MutexWord b) {
    return a.raw == b.raw;
  }
};

enum class MutexMode { Shared, Exclusive, Examine };

const char* to_string(MutexMode mode);

// True when a word in this state admits an acquisition attempt in `mode`.
// Shared and Examine need a clear holder half; Exclusive needs a fully
// clear word.
constexpr bool word_admits(MutexWord w, MutexMode mode) {
  switch (mode) {
    case MutexMode::Shared:
    case MutexMode::Examine:
      return w.holder_id() == 0;
    case MutexMode::Exclusive:
      return w.raw == 0;
  }
  return false;
}

}  // namespace retrylock
