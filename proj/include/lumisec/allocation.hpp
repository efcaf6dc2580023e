// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lumisec/scene.hpp"
#include "lumisec/secrecy.hpp"

namespace lumisec {

/// Which secrecy capacity the optimization targets.
enum class ObjectiveMode { kColluding, kNonColluding };

const char* to_string(ObjectiveMode mode);

/// Total assignment of IRS elements to users: entry n is 0 for Bob or j for
/// eavesdropper E_j. The per-user index sets partition the element range.
struct Allocation {
  std::vector<int> assign;

  int n_irs() const { return static_cast<int>(assign.size()); }
};

/// Every element assigned to Bob.
Allocation all_bob_allocation(int n_irs);

/// Compact text form: 'B' for Bob, digit j for E_j (supports up to 9 eves).
std::string alloc_to_string(const Allocation& alloc);
Allocation alloc_from_string(const std::string& text);

/// Per-user rates and secrecy capacities for one allocation and power.
struct SecrecyReport {
  double rate_bob_bps = 0.0;
  std::vector<double> rates_eves_bps;
  double rate_eve_colluding_bps = 0.0;
  double cs_non_colluding_bps = 0.0;
  double cs_colluding_bps = 0.0;
  double colluding_integral_bps = 0.0;  // pre-clamp diagnostic

  double objective(ObjectiveMode mode) const {
    return mode == ObjectiveMode::kColluding ? cs_colluding_bps
                                             : cs_non_colluding_bps;
  }
};

/// Evaluates allocations against a fixed scenario and transmit power. Path
/// gains and delays are computed once at construction and shared by every
/// evaluation; instances are immutable and safe to use from several threads.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const Scenario& scenario, double power_w,
                     QuadratureSettings quad = {});

  /// Full report: exact rates for every user plus both capacities.
  SecrecyReport evaluate(const Allocation& alloc) const;

  /// The mode's clamped capacity only. Cheaper than evaluate() because it
  /// skips the rates the mode does not need.
  double objective_value(const Allocation& alloc, ObjectiveMode mode) const;

  /// Pre-clamp secrecy value: the combined colluding integral, or Bob's rate
  /// minus the strongest eavesdropper rate. Used as the learning signal so
  /// that progress inside the negative region stays visible.
  double objective_integral(const Allocation& alloc, ObjectiveMode mode) const;

  /// Clamped objective for explicit per-user element sets (Bob first). The
  /// sets may cover only part of the element range, which is how the greedy
  /// baseline scores its partial assignments.
  double objective_from_active_sets(const std::vector<std::vector<int>>& actives,
                                    ObjectiveMode mode) const;

  int n_irs() const { return n_irs_; }
  int n_eves() const { return n_eves_; }
  int n_users() const { return n_eves_ + 1; }
  const SnrPrefix& prefix() const { return prefix_; }
  const QuadratureSettings& quadrature() const { return quad_; }
  const PathSet& paths(int user) const {
    return paths_[static_cast<std::size_t>(user)];
  }

 private:
  std::vector<std::vector<int>> active_sets(const Allocation& alloc) const;
  double secrecy_integral_from_sets(
      const std::vector<std::vector<int>>& actives, ObjectiveMode mode) const;

  std::vector<PathSet> paths_;  // index 0 = Bob, j = eavesdropper j
  SnrPrefix prefix_;
  QuadratureSettings quad_;
  int n_irs_ = 0;
  int n_eves_ = 0;
};

/// evaluate() on a throwaway evaluator.
SecrecyReport evaluate_objective(const Scenario& scenario,
                                 const Allocation& alloc, ObjectiveMode mode,
                                 double power_w,
                                 const QuadratureSettings& quad = {});

struct BruteForceResult {
  Allocation best;
  double best_value_bps = 0.0;
  /// Objective value per allocation in lexicographic enumeration order.
  std::vector<double> table;
};

/// Enumerates every allocation ((K+1)^N_irs of them), evaluates the mode's
/// objective, and returns the argmax; ties go to the lexicographically
/// smallest allocation. Throws SearchSpaceTooLarge when the space exceeds
/// `max_size`. Enumeration may be split across threads; the tie-break is
/// applied deterministically regardless of worker count.
BruteForceResult brute_force(const Scenario& scenario, ObjectiveMode mode,
                             double power_w,
                             std::uint64_t max_size = 10'000'000,
                             const QuadratureSettings& quad = {});

/// Decodes the allocation at a lexicographic enumeration index.
Allocation alloc_at_index(std::uint64_t index, int n_irs, int n_users);

enum class BaselineKind { kAllBob, kUniformRandom, kGreedy };

struct BaselineResult {
  Allocation alloc;
  double value_bps = 0.0;
};

/// Reference allocators: every element to Bob; independent uniform draws per
/// element (seeded); or greedy per-element assignment in index order, picking
/// the user that maximizes the objective given the prefix chosen so far.
BaselineResult baseline(const Scenario& scenario, BaselineKind kind,
                        ObjectiveMode mode, double power_w,
                        std::uint64_t seed = 0,
                        const QuadratureSettings& quad = {});

}  // namespace lumisec
