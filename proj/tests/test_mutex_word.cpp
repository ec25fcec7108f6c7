#include "doctest.h"
#include "retrylock/mutex_word.hpp"

#include <string>

using namespace retrylock;

static_assert(MutexWord{}.free());
static_assert(word_admits(MutexWord{}, MutexMode::Shared));
static_assert(word_admits(MutexWord{}, MutexMode::Exclusive));
static_assert(word_admits(MutexWord{}, MutexMode::Examine));

TEST_CASE("word codec round-trips holder and refcount halves") {
  const MutexWord w = MutexWord::from_parts(7, 2);
  CHECK(w.raw == 0x700000002ull);
  CHECK(w.holder_id() == 7);
  CHECK(w.ref_count() == 2);
  CHECK_FALSE(w.free());

  const MutexWord shared_only{0x2};
  CHECK(shared_only.holder_id() == 0);
  CHECK(shared_only.ref_count() == 2);

  const MutexWord exclusive{0x700000000ull};
  CHECK(exclusive.holder_id() == 7);
  CHECK(exclusive.ref_count() == 0);

  CHECK(MutexWord::from_parts(0xFFFFFFFF, 0xFFFFFFFF).raw ==
        0xFFFFFFFFFFFFFFFFull);
}

TEST_CASE("admission: shared and examine need a clear holder, exclusive a clear word") {
  const MutexWord free_word{};
  const MutexWord two_shared{0x2};
  const MutexWord excl{0x700000000ull};
  const MutexWord exam_over_shared{0x700000002ull};

  CHECK(word_admits(two_shared, MutexMode::Shared));
  CHECK(word_admits(two_shared, MutexMode::Examine));
  CHECK_FALSE(word_admits(two_shared, MutexMode::Exclusive));

  for (MutexMode m :
       {MutexMode::Shared, MutexMode::Exclusive, MutexMode::Examine}) {
    CHECK(word_admits(free_word, m));
    CHECK_FALSE(word_admits(excl, m));
    CHECK_FALSE(word_admits(exam_over_shared, m));
  }
}

TEST_CASE("mode names") {
  CHECK(std::string(to_string(MutexMode::Shared)) == "S");
  CHECK(std::string(to_string(MutexMode::Exclusive)) == "X");
  CHECK(std::string(to_string(MutexMode::Examine)) == "E");
}
