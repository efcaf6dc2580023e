// SPDX-License-Identifier: Apache-2.0

#include "lumisec/validate.hpp"

#include <cmath>
#include <complex>

#include "lumisec/allocation.hpp"
#include "lumisec/channel.hpp"
#include "lumisec/errors.hpp"
#include "lumisec/ppo.hpp"
#include "lumisec/secrecy.hpp"
#include "lumisec/util.hpp"

namespace lumisec {

Scenario random_scenario(std::mt19937_64& rng, int n_eves, int rows, int cols) {
  Scenario s;
  auto draw_user = [&rng, &s]() {
    return Point3{uniform_in(rng, 0.5, s.room.x - 0.5),
                  uniform_in(rng, 0.5, s.room.y - 0.5), uniform_in(rng, 0.5, 1.5)};
  };
  s.bob = draw_user();
  s.eves.clear();
  for (int j = 0; j < n_eves; ++j) s.eves.push_back(draw_user());
  s.irs.rows = rows;
  s.irs.cols = cols;
  s.irs.pitch_v_m = s.room.z / (rows + 1);
  s.irs_elements = irs_grid(rows, cols, s.irs.pitch_h_m, s.irs.pitch_v_m, s.room);
  return s;
}

namespace {

PathSet random_pathset(std::mt19937_64& rng, int max_elements) {
  PathSet ps;
  ps.los.gain = uniform_in(rng, 0.1, 1.0);
  ps.los.delay = uniform_in(rng, 1e-9, 2e-8);
  const int n = 1 + bounded_rand(rng, max_elements);
  for (int i = 0; i < n; ++i) {
    ps.nlos.push_back({uniform_in(rng, 0.1, 1.0),
                       ps.los.delay + uniform_in(rng, 1e-10, 3e-8)});
  }
  return ps;
}

Allocation random_allocation(std::mt19937_64& rng, int n_irs, int n_users) {
  Allocation a;
  a.assign.reserve(static_cast<std::size_t>(n_irs));
  for (int i = 0; i < n_irs; ++i) a.assign.push_back(bounded_rand(rng, n_users));
  return a;
}

SuiteResult expansion_identity_suite(std::uint64_t seed, bool inject_fault) {
  SuiteResult sr{"expansion-identity", 0, 0};
  std::mt19937_64 rng(seed);
  detail::negate_expansion_cross_terms.store(inject_fault);
  for (int c = 0; c < 1000; ++c) {
    const PathSet ps = random_pathset(rng, 10);
    std::vector<int> active(ps.nlos.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<int>(i);
    // deviation is measured against the channel's peak power, which bounds
    // |Q(f)|^2 everywhere; a result-relative measure would blow up inside
    // deep fades where both routes agree to machine precision
    double amplitude = ps.los.gain;
    for (const PathComponent& p : ps.nlos) amplitude += p.gain;
    const double scale = amplitude * amplitude;
    for (int k = 0; k < 10; ++k) {
      const double f = uniform_in(rng, 0.0, 5e8);
      const double expanded = cfr_power_expanded(ps, active, f);
      const double direct = std::norm(cfr(ps, active, f));
      ++sr.cases;
      if (!(std::abs(expanded - direct) <= 1e-12 * scale)) ++sr.failures;
    }
  }
  detail::negate_expansion_cross_terms.store(false);
  return sr;
}

SuiteResult mrc_dominance_suite(std::uint64_t seed) {
  SuiteResult sr{"mrc-dominance", 0, 0};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < 50; ++c) {
    const int n_eves = 1 + bounded_rand(rng, 3);
    const Scenario s = random_scenario(rng, n_eves, 1 + bounded_rand(rng, 3),
                                       1 + bounded_rand(rng, 3));
    const double power = uniform_in(rng, 1.0, 10.0);
    const ObjectiveEvaluator eval(s, power);
    const SecrecyReport report =
        eval.evaluate(random_allocation(rng, s.n_irs(), n_eves + 1));
    const double slack =
        2.0 * eval.quadrature().rel_tol * std::max(report.rate_bob_bps, 1.0);
    ++sr.cases;
    if (!(report.cs_colluding_bps <= report.cs_non_colluding_bps + slack)) {
      ++sr.failures;
    }
  }
  return sr;
}

SuiteResult k1_mode_equality_suite(std::uint64_t seed) {
  SuiteResult sr{"k1-mode-equality", 0, 0};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < 30; ++c) {
    const Scenario s = random_scenario(rng, 1, 1 + bounded_rand(rng, 3),
                                       1 + bounded_rand(rng, 3));
    const double power = uniform_in(rng, 1.0, 10.0);
    const ObjectiveEvaluator eval(s, power);
    const SecrecyReport report = eval.evaluate(random_allocation(rng, s.n_irs(), 2));
    const double slack =
        2.0 * eval.quadrature().rel_tol * std::max(report.rate_bob_bps, 1.0);
    ++sr.cases;
    if (!(std::abs(report.cs_colluding_bps - report.cs_non_colluding_bps) <=
          slack)) {
      ++sr.failures;
    }
  }
  return sr;
}

SuiteResult gradient_check_suite(std::uint64_t seed) {
  SuiteResult sr{"gradient-check", 0, 0};
  for (int c = 0; c < 20; ++c) {
    ++sr.cases;
    if (!(gradient_check_max_rel_error(seed + static_cast<std::uint64_t>(c)) <=
          1e-4)) {
      ++sr.failures;
    }
  }
  return sr;
}

SuiteResult oracle_dominance_suite(std::uint64_t seed) {
  SuiteResult sr{"oracle-dominance", 0, 0};
  std::mt19937_64 rng(seed);
  const Scenario s = random_scenario(rng, 1, 2, 2);
  const double power = 3.0;
  const ObjectiveMode mode = ObjectiveMode::kColluding;
  const BruteForceResult oracle = brute_force(s, mode, power);
  auto check = [&](BaselineKind kind, std::uint64_t baseline_seed) {
    ++sr.cases;
    const BaselineResult b = baseline(s, kind, mode, power, baseline_seed);
    if (!(b.value_bps <= oracle.best_value_bps)) ++sr.failures;
  };
  check(BaselineKind::kAllBob, 0);
  check(BaselineKind::kGreedy, 0);
  check(BaselineKind::kUniformRandom, 1);
  check(BaselineKind::kUniformRandom, 2);
  check(BaselineKind::kUniformRandom, 3);
  return sr;
}

}  // namespace

double gradient_check_max_rel_error(std::uint64_t seed, int input_dim,
                                    int hidden_dim, int n_actions,
                                    int n_samples) {
  std::mt19937_64 rng(seed);
  NetworkParams nets = init_networks(input_dim, n_actions, hidden_dim, rng);
  PpoConfig config;

  // Draw samples whose ratios sit away from the clip kinks so the central
  // difference stays on one branch of the min.
  std::vector<StepSample> samples;
  std::vector<double> h1(static_cast<std::size_t>(hidden_dim));
  std::vector<double> h2(static_cast<std::size_t>(hidden_dim));
  std::vector<double> logits(static_cast<std::size_t>(n_actions));
  std::vector<double> probs(static_cast<std::size_t>(n_actions));
  for (int i = 0; i < n_samples; ++i) {
    StepSample s;
    s.state.resize(static_cast<std::size_t>(input_dim));
    for (double& x : s.state) x = uniform_in(rng, -1.0, 1.0);
    s.action = bounded_rand(rng, n_actions);
    nets.actor.forward(s.state, h1, h2, logits);
    softmax(logits, probs);
    const double logp = std::log(probs[static_cast<std::size_t>(s.action)]);
    double offset = 0.0;
    for (;;) {
      offset = uniform_in(rng, -0.4, 0.4);
      const double ratio = std::exp(-offset);
      if (std::abs(ratio - (1.0 - config.clip)) > 1e-3 &&
          std::abs(ratio - (1.0 + config.clip)) > 1e-3) {
        break;
      }
    }
    s.log_prob_old = logp + offset;
    const double magnitude = uniform_in(rng, 0.25, 2.0);
    s.advantage = uniform01(rng) < 0.5 ? -magnitude : magnitude;
    s.value_return = uniform_in(rng, -1.0, 1.0);
    samples.push_back(std::move(s));
  }

  MlpGrads actor_grads(nets.actor);
  MlpGrads critic_grads(nets.critic);
  net_gradients(nets, samples, config, actor_grads, critic_grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  auto probe = [&](std::vector<double>& params, const std::vector<double>& grads,
                   bool actor_side) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const LossDiagnostics up = net_losses(nets, samples, config);
      params[i] = saved - h;
      const LossDiagnostics down = net_losses(nets, samples, config);
      params[i] = saved;
      const double fd = actor_side
                            ? (up.actor_loss - down.actor_loss) / (2.0 * h)
                            : (up.critic_loss - down.critic_loss) / (2.0 * h);
      const double rel = std::abs(fd - grads[i]) /
                         std::max({std::abs(fd), std::abs(grads[i]), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
  };
  probe(nets.actor.w1, actor_grads.w1, true);
  probe(nets.actor.b1, actor_grads.b1, true);
  probe(nets.actor.w2, actor_grads.w2, true);
  probe(nets.actor.b2, actor_grads.b2, true);
  probe(nets.actor.w3, actor_grads.w3, true);
  probe(nets.actor.b3, actor_grads.b3, true);
  probe(nets.critic.w1, critic_grads.w1, false);
  probe(nets.critic.b1, critic_grads.b1, false);
  probe(nets.critic.w2, critic_grads.w2, false);
  probe(nets.critic.b2, critic_grads.b2, false);
  probe(nets.critic.w3, critic_grads.w3, false);
  probe(nets.critic.b3, critic_grads.b3, false);
  return max_rel;
}

std::vector<SuiteResult> run_validation_suites(const ValidateOptions& options) {
  std::vector<SuiteResult> results;
  results.push_back(
      expansion_identity_suite(options.seed, options.inject_expansion_fault));
  results.push_back(mrc_dominance_suite(options.seed + 1));
  results.push_back(k1_mode_equality_suite(options.seed + 2));
  results.push_back(gradient_check_suite(options.seed + 3));
  results.push_back(oracle_dominance_suite(options.seed + 4));
  return results;
}

}  // namespace lumisec
