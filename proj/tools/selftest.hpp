#pragma once

#include <string>
#include <vector>

namespace skillscale::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast end-to-end invariant checks (a few seconds on one core).
std::vector<CheckResult> run_selftest();

}  // namespace skillscale::cli
