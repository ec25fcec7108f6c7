// Runs the acceptance checklist and prints one line per criterion. Arguments
// select criteria by number or name fragment; RETRYLOCK_SEED overrides the
// default seed. Exit code 0 when nothing failed (skips are fine), 1 otherwise.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "retrylock/validate.hpp"

int main(int argc, char** argv) {
  retrylock::ValidateOptions opts;
  opts.log = &std::cout;
  for (int i = 1; i < argc; ++i) opts.only.emplace_back(argv[i]);
  if (const char* env = std::getenv("RETRYLOCK_SEED")) {
    opts.seed = std::strtoull(env, nullptr, 10);
  }

  const auto results = retrylock::run_acceptance(opts);

  int pass = 0, fail = 0, skip = 0;
  for (const auto& r : results) {
    switch (r.status) {
      case retrylock::CriterionStatus::Pass: ++pass; break;
      case retrylock::CriterionStatus::Fail: ++fail; break;
      case retrylock::CriterionStatus::Skip: ++skip; break;
    }
  }
  std::printf("%d passed, %d failed, %d skipped\n", pass, fail, skip);
  return retrylock::acceptance_exit_code(results);
}
