#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mirrorquant/common.hpp"

namespace mirrorquant {

/// One executed invariant/property check. `worst` is the worst observed
/// margin or error in the check's own units (see `detail`); a failing check
/// carries a human-readable explanation in `detail`.
struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  std::string detail;
};

std::vector<CheckResult> check_projections(Rng& rng);
std::vector<CheckResult> check_mirror_maps(Rng& rng);
/// inject_ste_bug flips the sign of the hand-rolled stable route inside the
/// closed-vs-stable equivalence checks; used to self-test the suite.
std::vector<CheckResult> check_optimizers(Rng& rng, bool inject_ste_bug = false);
std::vector<CheckResult> check_convex_bounds();
std::vector<CheckResult> check_nn(Rng& rng);
std::vector<CheckResult> check_harness();

/// Every suite, seeded deterministically from `seed`.
std::vector<CheckResult> run_all_checks(std::uint64_t seed, bool inject_ste_bug = false);

}  // namespace mirrorquant
