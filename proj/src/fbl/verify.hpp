#pragma once

#include "fbl/lyapunov.hpp"
#include "fbl/model.hpp"

#include <string>
#include <vector>

namespace fbl {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string details;
    double seconds = 0.0;
    Json data;
};

struct VerifyOptions {
    unsigned long seed = 20260809ul;
    int workers = 1;
    NConvention convention = NConvention::default_convention();
};

/// The shipped model instances the acceptance suite runs against (also the
/// parameter points recorded in configs/).
CyclicVectorField shipped_linear3();
CyclicVectorField shipped_goodwin_stable();
CyclicVectorField shipped_goodwin_oscillatory();
CyclicVectorField shipped_bidirectional();
CyclicVectorField shipped_repressilator();

/// Runs all acceptance criteria; each result carries its pass/fail, details
/// and wall time. Oracles used here (matrix exponential, brute-force N
/// enumeration) are independent of the implementation paths they check.
std::vector<CriterionResult> run_acceptance_suite(const VerifyOptions& opts = {});

}  // namespace fbl
