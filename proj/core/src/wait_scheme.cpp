#include "retrylock/wait_scheme.hpp"

#include <algorithm>
#include <stdexcept>

namespace retrylock {

namespace {

constexpr long kBackoffTemplateMs[] = {10, 10, 30, 30, 80, 70, 160, 150};
constexpr std::size_t kBackoffTemplateLen =
    sizeof(kBackoffTemplateMs) / sizeof(kBackoffTemplateMs[0]);

}  // namespace

std::chrono::milliseconds scheme2_backoff_ms(int max_wait_cs,
                                             std::uint64_t index) {
  if (max_wait_cs < 1) {
    throw std::invalid_argument("scheme2 max_wait_cs must be >= 1");
  }
  const long cap_ms = 10L * max_wait_cs;
  const long base =
      index < kBackoffTemplateLen ? kBackoffTemplateMs[index] : cap_ms;
  return std::chrono::milliseconds(std::min(base, cap_ms));
}

WaitAction plan_action(const WaitScheme& scheme, std::uint64_t episode_index) {
  struct Visitor {
    std::uint64_t i;

    WaitAction operator()(const TenG&) const { return WaitAction::yield(); }

    WaitAction operator()(const Patch6904068& p) const {
      return WaitAction::sleep(p.timeout);
    }

    WaitAction operator()(const Scheme0& s) const {
      // yields_per_cycle yields, one timed sleep, repeat.
      const auto period = static_cast<std::uint64_t>(s.yields_per_cycle) + 1;
      return (i % period == period - 1) ? WaitAction::sleep(s.sleep)
                                        : WaitAction::yield();
    }

    WaitAction operator()(const Scheme1& s) const {
      return i == 0 ? WaitAction::yield() : WaitAction::sleep(s.wait_time);
    }

    WaitAction operator()(const Scheme2& s) const {
      return i < 2 ? WaitAction::yield()
                   : WaitAction::sleep(scheme2_backoff_ms(s.max_wait_cs, i - 2));
    }
  };
  return std::visit(Visitor{episode_index}, scheme);
}

void validate_scheme(const WaitScheme& scheme) {
  struct Visitor {
    void operator()(const TenG&) const {}
    void operator()(const Patch6904068& p) const {
      if (p.timeout.count() <= 0) {
        throw std::invalid_argument("patch6904068 timeout must be positive");
      }
    }
    void operator()(const Scheme0& s) const {
      if (s.yields_per_cycle < 1) {
        throw std::invalid_argument("scheme0 yields_per_cycle must be >= 1");
      }
      if (s.sleep.count() <= 0) {
        throw std::invalid_argument("scheme0 sleep must be positive");
      }
    }
    void operator()(const Scheme1& s) const {
      if (s.wait_time.count() <= 0) {
        throw std::invalid_argument("scheme1 wait_time must be positive");
      }
    }
    void operator()(const Scheme2& s) const {
      if (s.max_wait_cs < 1) {
        throw std::invalid_argument("scheme2 max_wait_cs must be >= 1");
      }
    }
  };
  std::visit(Visitor{}, scheme);
}

const char* scheme_name(const WaitScheme& scheme) {
  switch (scheme.index()) {
    case 0:
      return "10g";
    case 1:
      return "patch6904068";
    case 2:
      return "scheme0";
    case 3:
      return "scheme1";
    case 4:
      return "scheme2";
  }
  return "?";
}

std::optional<WaitScheme> parse_scheme(const std::string& name) {
  if (name == "10g") return WaitScheme{TenG{}};
  if (name == "patch6904068") return WaitScheme{Patch6904068{}};
  if (name == "scheme0") return WaitScheme{Scheme0{}};
  if (name == "scheme1") return WaitScheme{Scheme1{}};
  if (name == "scheme2") return WaitScheme{Scheme2{}};
  return std::nullopt;
}

}  // namespace retrylock
