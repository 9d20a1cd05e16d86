#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace tentfield {

// Outcome of one randomized property check.
struct CheckResult {
  CheckResult() = default;
  explicit CheckResult(std::string n) : name(std::move(n)) {}

  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // most negative slack seen (>= 0 when everything holds)
  std::string witness;        // first violating configuration, human readable
  std::string note;

  bool passed() const { return violations == 0; }
  // record one trial whose slack (>= -tol means success) is `margin`;
  // returns true on the first violation so the caller can fill `witness`
  bool record(double margin, double tol);
};

bool all_passed(const std::vector<CheckResult>& v);

}  // namespace tentfield
