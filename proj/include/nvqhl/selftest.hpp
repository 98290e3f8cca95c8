#pragma once

// Fast invariant checks behind `nvqhl validate`.

#include <string>
#include <vector>

namespace nvqhl {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> run_self_tests();

}  // namespace nvqhl
