#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace retrylock {

// The acceptance suite: every release-gate check as an executable criterion
// with its tolerance pinned in code. One line of output per criterion, and
// the exit status is honest: any FAIL is a failure, SKIP is reserved for
// hardware the check cannot run on (the bench criterion needs >= 4 cores).

enum class CriterionStatus { Pass, Fail, Skip };

struct CriterionResult {
  int id = 0;
  std::string name;
  CriterionStatus status = CriterionStatus::Fail;
  std::string details;
  double seconds = 0;
};

struct ValidateOptions {
  // Empty runs everything; entries match criterion ids ("3") or name
  // substrings ("formfactor").
  std::vector<std::string> only;
  std::uint64_t seed = 1;
  std::ostream* log = nullptr;  // progress lines, one per criterion
};

std::vector<CriterionResult> run_acceptance(const ValidateOptions& opts);

// 0 when nothing failed (skips allowed), 1 otherwise.
int acceptance_exit_code(const std::vector<CriterionResult>& results);

std::string format_result_line(const CriterionResult& r);

}  // namespace retrylock
