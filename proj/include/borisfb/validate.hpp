#pragma once

#include <string>
#include <vector>

namespace borisfb {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
    int failures() const {
        int n = 0;
        for (const auto& c : checks)
            if (!c.passed) ++n;
        return n;
    }
};

/// Runs the full correctness suite: filter/oracle agreement, exactness and
/// conservation properties, symmetry, per-module invariants, and (when
/// include_slow is set) the convergence-order study, the Boris comparison
/// and the stepsize-resonance scan. Prints nothing; callers render results.
ValidationReport run_validation(bool include_slow);

}  // namespace borisfb
