#pragma once

#include <string>
#include <vector>

#include "nlg/scenario.hpp"

namespace nlg {

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Runs the invariant suite for the scenario's manifold at its resolution
/// and seed: quadrature and density identities, chart round trips and
/// equivariance, transport and splitting identities, tangent-level kernels,
/// first-variation consistency, curvature benchmarks, and the kernel-lane
/// equivalence. Returns one record per invariant.
std::vector<CheckResult> run_verify_suite(const Scenario& sc);

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace nlg
