#pragma once
// Operation budget guard. REEBLAB_BUDGET (total elementary-op count) caps
// the cost of a single estimator call; estimators compare their predicted
// op count against it before doing any work.

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace reeblab {

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double op_budget() {
  if (const char* s = std::getenv("REEBLAB_BUDGET")) {
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end != s && v > 0) return v;
  }
  return 4e10;
}

inline void charge_budget(double ops, const std::string& what) {
  const double cap = op_budget();
  if (ops > cap)
    throw BudgetExceeded(what + ": predicted op count " + std::to_string(ops) +
                         " exceeds budget " + std::to_string(cap) +
                         " (set REEBLAB_BUDGET to raise)");
}

}  // namespace reeblab
