#include "tentfield/check.hpp"

#include <algorithm>

namespace tentfield {

bool CheckResult::record(double margin, double tol) {
  ++trials;
  if (trials == 1 || margin < worst_margin) worst_margin = margin;
  if (margin < -tol) return ++violations == 1;
  return false;
}

bool all_passed(const std::vector<CheckResult>& v) {
  return std::all_of(v.begin(), v.end(), [](const CheckResult& c) { return c.passed(); });
}

}  // namespace tentfield
