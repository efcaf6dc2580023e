// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lumisec/scene.hpp"

namespace lumisec {

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
};

struct ValidateOptions {
  std::uint64_t seed = 20240611;
  /// Test-only mutation hook: negates the cosine cross terms in the expanded
  /// channel power so the identity suite can be shown to bite.
  bool inject_expansion_fault = false;
};

/// Runs the cross-module property suites: channel power expansion identity,
/// MRC dominance of the colluding capacity, single-eavesdropper mode
/// equality, analytic-vs-finite-difference gradient agreement, and
/// exhaustive-oracle dominance over the baseline allocators. Case counts are
/// deterministic for a fixed seed.
std::vector<SuiteResult> run_validation_suites(const ValidateOptions& options = {});

/// Room-scale random scenario for the property suites: the canonical room and
/// LED, users drawn inside the box at desk height, and a small IRS grid.
Scenario random_scenario(std::mt19937_64& rng, int n_eves, int rows, int cols);

/// Maximum relative disagreement between analytic gradients and central
/// finite differences (h = 1e-5) on one randomly drawn small network and
/// sample set. Deterministic per seed.
double gradient_check_max_rel_error(std::uint64_t seed, int input_dim = 4,
                                    int hidden_dim = 8, int n_actions = 3,
                                    int n_samples = 6);

}  // namespace lumisec
