#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dsn {

// Central finite differences of a scalar function at `at`.
std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& at, double h = 1e-6);

// max over components of |a - n| / max(1, |a|, |n|).
double max_rel_error(const std::vector<double>& analytic,
                     const std::vector<double>& numeric);

struct CheckResult {
  std::string name;
  double value = 0.0;  // measured statistic; passes when value <= tolerance
  double tolerance = 0.0;
  bool pass = false;
};

// Finite-difference verification of backward(), the fused classification
// loss gradient, and the policy log-prob gradient, on `instances` random
// instances per family. Instances that put a relu pre-activation within
// 1e-3 of its kink are redrawn so the central difference stays valid.
// corrupt=true perturbs one analytic component (negative control).
std::vector<CheckResult> run_gradient_checks(std::uint64_t seed, int instances,
                                             bool corrupt = false);

// Estimator-level checks on frozen random (Theta, Phi, section) instances
// with small N, enumerating all actions:
//  - the baseline term E_A[R(B) grad log pi(A)] enumerates to 0 (abs tol 1e-10)
//  - the Monte Carlo mean of the with-baseline gradient matches the
//    enumerated gradient within 3 standard errors per component
//  - the Monte Carlo mean reward matches the enumerated expected reward
//    within 3 standard errors
std::vector<CheckResult> run_estimator_checks(std::uint64_t seed,
                                              int instances = 20,
                                              int draws = 100000);

}  // namespace dsn
