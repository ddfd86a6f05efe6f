#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace chronovae {

struct SuiteResult {
  std::string name;
  int passed = 0;
  int total = 0;
  std::vector<std::string> failures;

  bool ok() const { return passed == total; }
};

struct SelfcheckOptions {
  /// Adds an op with a deliberately wrong backward to the gradient suite.
  bool inject_gradient_fault = false;
  std::uint64_t seed = 0;
};

/// gradient, decomposition, titans, cms and kl suites.
std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& options = {});

/// "suite: passed/total" per line, then each failure.
void print_selfcheck(const std::vector<SuiteResult>& results, std::ostream& os);

}  // namespace chronovae
