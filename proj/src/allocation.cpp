// SPDX-License-Identifier: Apache-2.0

#include "lumisec/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "lumisec/errors.hpp"
#include "lumisec/util.hpp"

namespace lumisec {

const char* to_string(ObjectiveMode mode) {
  return mode == ObjectiveMode::kColluding ? "colluding" : "non-colluding";
}

Allocation all_bob_allocation(int n_irs) {
  return {std::vector<int>(static_cast<std::size_t>(n_irs), 0)};
}

std::string alloc_to_string(const Allocation& alloc) {
  std::string out;
  out.reserve(alloc.assign.size());
  for (int tag : alloc.assign) {
    if (tag == 0) {
      out += 'B';
    } else if (tag >= 1 && tag <= 9) {
      out += static_cast<char>('0' + tag);
    } else {
      throw DomainError("allocation text form supports at most 9 eavesdroppers");
    }
  }
  return out;
}

Allocation alloc_from_string(const std::string& text) {
  Allocation alloc;
  alloc.assign.reserve(text.size());
  for (char c : text) {
    if (c == 'B') {
      alloc.assign.push_back(0);
    } else if (c >= '1' && c <= '9') {
      alloc.assign.push_back(c - '0');
    } else {
      throw MalformedConfig(std::string("bad allocation tag '") + c + "'");
    }
  }
  return alloc;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Simpson integral of log2(1 + lambda p) over the grid.
double rate_integral(std::span<const double> power, double lambda, double h) {
  thread_local std::vector<double> integrand;
  integrand.resize(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) {
    integrand[i] = std::log2(1.0 + lambda * power[i]);
  }
  return detail::simpson(integrand, h);
}

// Simpson integral of the combined colluding integrand.
double log_ratio_integral(std::span<const double> bob_power,
                          std::span<const double> eve_power_sum, double lambda,
                          double h) {
  thread_local std::vector<double> integrand;
  integrand.resize(bob_power.size());
  for (std::size_t i = 0; i < bob_power.size(); ++i) {
    integrand[i] = std::log2((1.0 + lambda * bob_power[i]) /
                             (1.0 + lambda * eve_power_sum[i]));
  }
  return detail::simpson(integrand, h);
}

}  // namespace

ObjectiveEvaluator::ObjectiveEvaluator(const Scenario& scenario, double power_w,
                                       QuadratureSettings quad)
    : prefix_(make_snr_prefix(scenario, power_w)),
      quad_(quad),
      n_irs_(scenario.n_irs()),
      n_eves_(scenario.n_eves()) {
  if (quad_.panels < 2 || quad_.panels % 2 != 0) {
    throw DomainError("quadrature panel count must be even and >= 2");
  }
  paths_.reserve(static_cast<std::size_t>(n_eves_) + 1);
  paths_.push_back(compute_paths(scenario, scenario.bob));
  for (const Point3& eve : scenario.eves) {
    paths_.push_back(compute_paths(scenario, eve));
  }
}

std::vector<std::vector<int>> ObjectiveEvaluator::active_sets(
    const Allocation& alloc) const {
  if (alloc.n_irs() != n_irs_) {
    throw DomainError("allocation length does not match the scenario");
  }
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(n_users()));
  for (int n = 0; n < n_irs_; ++n) {
    const int tag = alloc.assign[static_cast<std::size_t>(n)];
    if (tag < 0 || tag > n_eves_) {
      throw DomainError("allocation entry is not a valid user tag");
    }
    sets[static_cast<std::size_t>(tag)].push_back(n);
  }
  return sets;
}

double ObjectiveEvaluator::secrecy_integral_from_sets(
    const std::vector<std::vector<int>>& actives, ObjectiveMode mode) const {
  if (n_eves_ == 0) {
    throw EmptyEveSet("secrecy objective needs at least one eavesdropper");
  }
  const double f_max = prefix_.f_max_hz;
  const double lambda = prefix_.lambda;
  const double h = f_max / quad_.panels;
  const int fine_panels = 2 * quad_.panels;
  const double h_fine = f_max / fine_panels;

  if (mode == ObjectiveMode::kColluding) {
    thread_local std::vector<double> bob_power;
    thread_local std::vector<double> eve_sum;
    thread_local std::vector<double> scratch;

    auto combined = [&](int panels, double step) {
      detail::cfr_power_grid(paths_[0], actives[0], f_max, panels, bob_power);
      eve_sum.assign(bob_power.size(), 0.0);
      for (int j = 1; j <= n_eves_; ++j) {
        detail::cfr_power_grid(paths_[static_cast<std::size_t>(j)],
                               actives[static_cast<std::size_t>(j)], f_max,
                               panels, scratch);
        for (std::size_t i = 0; i < eve_sum.size(); ++i) eve_sum[i] += scratch[i];
      }
      return log_ratio_integral(bob_power, eve_sum, lambda, step);
    };

    const double integral = combined(quad_.panels, h);
    if (quad_.check_convergence) {
      detail::require_converged(integral, combined(fine_panels, h_fine),
                                quad_.rel_tol);
    }
    return integral;
  }

  // Non-colluding: Bob's rate minus the strongest individual eavesdropper.
  thread_local std::vector<double> power;
  auto user_rate = [&](int user) {
    detail::cfr_power_grid(paths_[static_cast<std::size_t>(user)],
                           actives[static_cast<std::size_t>(user)], f_max,
                           quad_.panels, power);
    const double coarse = rate_integral(power, lambda, h);
    if (quad_.check_convergence) {
      detail::cfr_power_grid(paths_[static_cast<std::size_t>(user)],
                             actives[static_cast<std::size_t>(user)], f_max,
                             fine_panels, power);
      detail::require_converged(coarse, rate_integral(power, lambda, h_fine),
                                quad_.rel_tol);
    }
    return coarse;
  };

  const double rate_bob = user_rate(0);
  double strongest = kNegInf;
  for (int j = 1; j <= n_eves_; ++j) strongest = std::max(strongest, user_rate(j));
  return rate_bob - strongest;
}

double ObjectiveEvaluator::objective_from_active_sets(
    const std::vector<std::vector<int>>& actives, ObjectiveMode mode) const {
  return std::max(0.0, secrecy_integral_from_sets(actives, mode));
}

double ObjectiveEvaluator::objective_value(const Allocation& alloc,
                                           ObjectiveMode mode) const {
  return std::max(0.0, secrecy_integral_from_sets(active_sets(alloc), mode));
}

double ObjectiveEvaluator::objective_integral(const Allocation& alloc,
                                              ObjectiveMode mode) const {
  return secrecy_integral_from_sets(active_sets(alloc), mode);
}

SecrecyReport ObjectiveEvaluator::evaluate(const Allocation& alloc) const {
  if (n_eves_ == 0) {
    throw EmptyEveSet("secrecy report needs at least one eavesdropper");
  }
  const auto sets = active_sets(alloc);
  const int users = n_users();
  const double f_max = prefix_.f_max_hz;
  const double lambda = prefix_.lambda;
  const double h = f_max / quad_.panels;
  const int fine_panels = 2 * quad_.panels;
  const double h_fine = f_max / fine_panels;
  const bool check = quad_.check_convergence;

  // Per-user |Q|^2 grids, shared by every integral below.
  std::vector<std::vector<double>> coarse(static_cast<std::size_t>(users));
  std::vector<std::vector<double>> fine(check ? static_cast<std::size_t>(users) : 0);
  for (int u = 0; u < users; ++u) {
    detail::cfr_power_grid(paths_[static_cast<std::size_t>(u)],
                           sets[static_cast<std::size_t>(u)], f_max,
                           quad_.panels, coarse[static_cast<std::size_t>(u)]);
    if (check) {
      detail::cfr_power_grid(paths_[static_cast<std::size_t>(u)],
                             sets[static_cast<std::size_t>(u)], f_max,
                             fine_panels, fine[static_cast<std::size_t>(u)]);
    }
  }

  SecrecyReport report;
  auto checked_rate = [&](int u) {
    const double value = rate_integral(coarse[static_cast<std::size_t>(u)], lambda, h);
    if (check) {
      detail::require_converged(
          value, rate_integral(fine[static_cast<std::size_t>(u)], lambda, h_fine),
          quad_.rel_tol);
    }
    return value;
  };

  report.rate_bob_bps = checked_rate(0);
  report.rates_eves_bps.resize(static_cast<std::size_t>(n_eves_));
  for (int j = 1; j <= n_eves_; ++j) {
    report.rates_eves_bps[static_cast<std::size_t>(j - 1)] = checked_rate(j);
  }

  auto sum_eves = [&](const std::vector<std::vector<double>>& grids,
                      std::vector<double>& out) {
    out.assign(grids[1].size(), 0.0);
    for (int j = 1; j < users; ++j) {
      const auto& g = grids[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
    }
  };

  std::vector<double> eve_sum;
  sum_eves(coarse, eve_sum);
  report.rate_eve_colluding_bps = rate_integral(eve_sum, lambda, h);
  report.colluding_integral_bps =
      log_ratio_integral(coarse[0], eve_sum, lambda, h);
  if (check) {
    std::vector<double> eve_sum_fine;
    sum_eves(fine, eve_sum_fine);
    detail::require_converged(report.rate_eve_colluding_bps,
                              rate_integral(eve_sum_fine, lambda, h_fine),
                              quad_.rel_tol);
    detail::require_converged(
        report.colluding_integral_bps,
        log_ratio_integral(fine[0], eve_sum_fine, lambda, h_fine),
        quad_.rel_tol);
  }

  report.cs_non_colluding_bps =
      secrecy_non_colluding(report.rate_bob_bps, report.rates_eves_bps);
  report.cs_colluding_bps = std::max(0.0, report.colluding_integral_bps);
  return report;
}

SecrecyReport evaluate_objective(const Scenario& scenario,
                                 const Allocation& alloc, ObjectiveMode mode,
                                 double power_w,
                                 const QuadratureSettings& quad) {
  (void)mode;  // the report always carries both capacities
  return ObjectiveEvaluator(scenario, power_w, quad).evaluate(alloc);
}

Allocation alloc_at_index(std::uint64_t index, int n_irs, int n_users) {
  Allocation alloc;
  alloc.assign.assign(static_cast<std::size_t>(n_irs), 0);
  for (int pos = n_irs - 1; pos >= 0; --pos) {
    alloc.assign[static_cast<std::size_t>(pos)] =
        static_cast<int>(index % static_cast<std::uint64_t>(n_users));
    index /= static_cast<std::uint64_t>(n_users);
  }
  return alloc;
}

namespace {

// Odometer step through the lexicographic enumeration.
void next_alloc(std::vector<int>& assign, int n_users) {
  for (int pos = static_cast<int>(assign.size()) - 1; pos >= 0; --pos) {
    if (++assign[static_cast<std::size_t>(pos)] < n_users) return;
    assign[static_cast<std::size_t>(pos)] = 0;
  }
}

}  // namespace

BruteForceResult brute_force(const Scenario& scenario, ObjectiveMode mode,
                             double power_w, std::uint64_t max_size,
                             const QuadratureSettings& quad) {
  const int n = scenario.n_irs();
  const int users = scenario.n_eves() + 1;

  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > max_size / static_cast<std::uint64_t>(users)) {
      std::ostringstream msg;
      msg << "search space " << users << "^" << n << " exceeds the cap "
          << max_size;
      throw SearchSpaceTooLarge(msg.str());
    }
    total *= static_cast<std::uint64_t>(users);
  }

  const ObjectiveEvaluator eval(scenario, power_w, quad);
  BruteForceResult result;
  result.table.assign(total, 0.0);

  struct LocalBest {
    double value = kNegInf;
    std::uint64_t index = 0;
  };

  const int workers = static_cast<int>(std::min<std::uint64_t>(
      static_cast<std::uint64_t>(std::max(1, thread_budget())), total));
  const std::uint64_t chunk = (total + workers - 1) / workers;
  std::vector<LocalBest> bests(static_cast<std::size_t>(workers));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));

  auto run_range = [&](int w) {
    const std::uint64_t begin = static_cast<std::uint64_t>(w) * chunk;
    const std::uint64_t end = std::min(total, begin + chunk);
    if (begin >= end) return;
    try {
      Allocation alloc = alloc_at_index(begin, n, users);
      LocalBest local;
      for (std::uint64_t i = begin; i < end; ++i) {
        const double value = eval.objective_value(alloc, mode);
        result.table[i] = value;
        if (value > local.value) local = {value, i};
        next_alloc(alloc.assign, users);
      }
      bests[static_cast<std::size_t>(w)] = local;
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };

  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_range, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  // Strict comparisons keep the smallest enumeration index on ties, which is
  // the lexicographically smallest allocation.
  LocalBest overall = bests[0];
  for (const LocalBest& b : bests) {
    if (b.value > overall.value) overall = b;
  }
  result.best = alloc_at_index(overall.index, n, users);
  result.best_value_bps = overall.value;
  return result;
}

BaselineResult baseline(const Scenario& scenario, BaselineKind kind,
                        ObjectiveMode mode, double power_w, std::uint64_t seed,
                        const QuadratureSettings& quad) {
  const ObjectiveEvaluator eval(scenario, power_w, quad);
  const int n = scenario.n_irs();
  const int users = scenario.n_eves() + 1;

  BaselineResult result;
  switch (kind) {
    case BaselineKind::kAllBob:
      result.alloc = all_bob_allocation(n);
      break;
    case BaselineKind::kUniformRandom: {
      std::mt19937_64 rng(seed);
      result.alloc.assign.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        result.alloc.assign.push_back(bounded_rand(rng, users));
      }
      break;
    }
    case BaselineKind::kGreedy: {
      std::vector<std::vector<int>> sets(static_cast<std::size_t>(users));
      result.alloc.assign.assign(static_cast<std::size_t>(n), 0);
      for (int t = 0; t < n; ++t) {
        double best_value = kNegInf;
        int best_tag = 0;
        for (int k = 0; k < users; ++k) {
          sets[static_cast<std::size_t>(k)].push_back(t);
          const double value = eval.objective_from_active_sets(sets, mode);
          sets[static_cast<std::size_t>(k)].pop_back();
          if (value > best_value) {
            best_value = value;
            best_tag = k;
          }
        }
        sets[static_cast<std::size_t>(best_tag)].push_back(t);
        result.alloc.assign[static_cast<std::size_t>(t)] = best_tag;
      }
      break;
    }
  }
  result.value_bps = eval.objective_value(result.alloc, mode);
  return result;
}

}  // namespace lumisec
