#include "retrylock/mutex_word.hpp"

namespace retrylock {

const char* to_string(MutexMode mode) {
  switch (mode) {
    case MutexMode::Shared:
      return "S";
    case MutexMode::Exclusive:
      return "X";
    case MutexMode::Examine:
      return "E";
  }
  return "?";
}

}  // namespace retrylock
