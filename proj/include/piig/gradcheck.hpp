#pragma once

// Finite-difference gradient verification. Every differentiable primitive
// and each full network is checked against central differences evaluated on
// the double-precision mirrors in reference.hpp over seeded random trials.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace piig {

struct GradcheckOptions {
  std::uint64_t seed = 7;
  // Random trials per check; each trial redraws inputs, parameters, and the
  // loss projection.
  int trials = 20;
  // Finite-difference probes per trial for the network checks. Primitive
  // checks probe every coordinate instead.
  int coords_per_trial = 10;
  // A coordinate passes when |analytic - fd| <= max(rel_tol * scale,
  // abs_floor) with scale = max(|analytic|, |fd|). The floor absorbs
  // float32 rounding of near-zero gradients that a pure ratio would turn
  // into spurious failures.
  double rel_tol = 1e-2;
  double abs_floor = 3e-5;
};

struct GradcheckResult {
  std::string name;
  std::int64_t checks = 0;    // coordinate comparisons performed
  std::int64_t failures = 0;  // comparisons outside tolerance
  double max_rel_error = 0.0;
};

// Runs the whole suite; one result per named check. Progress lines go to
// `log` when it is non-null.
std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions& opts,
                                           std::ostream* log = nullptr);

bool gradcheck_passed(const std::vector<GradcheckResult>& results);

}  // namespace piig
