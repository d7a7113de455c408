#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adaptlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  // Test hook: corrupts one analytic gradient before the masked-NLL
  // gradient check so the suite must report a failure.
  bool inject_gradient_fault = false;
};

// Runs the full invariant suite: gradient checks, the sparsemax oracle,
// DUS goldens, loss identities, tokenizer laws, freeze protocol, merge and
// schedule properties. Every check appears exactly once.
std::vector<CheckResult> run_verification(const VerifyOptions& opts);

// Prints one line per check plus a summary; returns the failure count.
int print_verification(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace adaptlab
