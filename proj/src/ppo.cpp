// SPDX-License-Identifier: Apache-2.0

#include "lumisec/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "lumisec/errors.hpp"
#include "lumisec/util.hpp"

namespace lumisec {

void validate_config(const PpoConfig& c) {
  if (c.episodes < 1) throw DomainError("episodes must be >= 1");
  if (c.batch < 1) throw DomainError("batch must be >= 1");
  if (!(c.clip > 0.0 && c.clip < 1.0)) throw DomainError("clip must lie in (0, 1)");
  if (!(c.gae_lambda > 0.0 && c.gae_lambda <= 1.0))
    throw DomainError("gae_lambda must lie in (0, 1]");
  if (!(c.discount > 0.0 && c.discount <= 1.0))
    throw DomainError("discount must lie in (0, 1]");
  if (!(c.actor_lr > 0.0) || !(c.critic_lr > 0.0))
    throw DomainError("learning rates must be positive");
  if (c.hidden_dim < 1) throw DomainError("hidden_dim must be >= 1");
  if (c.update_epochs < 1) throw DomainError("update_epochs must be >= 1");
  if (c.entropy_coeff < 0.0) throw DomainError("entropy_coeff must be >= 0");
  if (!(c.reward_scale > 0.0)) throw DomainError("reward_scale must be positive");
}

namespace {

inline void axpy(double a, const double* __restrict x, double* __restrict y,
                 int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

// Four fixed-order accumulator lanes; a strictly sequential reduction defeats
// SIMD and these kernels carry the whole update pass.
inline double dot(const double* __restrict a, const double* __restrict b,
                  int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

// tanh and head layers applied to a z1 buffer that already holds
// b1 + W1 columns for the active inputs.
void forward_from_z1(const Mlp& net, double* h1, double* h2, double* out) {
  for (int r = 0; r < net.hidden; ++r) h1[r] = std::tanh(h1[r]);
  for (int r = 0; r < net.hidden; ++r) {
    h2[r] = std::tanh(net.b2[static_cast<std::size_t>(r)] +
                      dot(&net.w2[static_cast<std::size_t>(r) * net.hidden], h1,
                          net.hidden));
  }
  for (int r = 0; r < net.output; ++r) {
    out[r] = net.b3[static_cast<std::size_t>(r)] +
             dot(&net.w3[static_cast<std::size_t>(r) * net.hidden], h2,
                 net.hidden);
  }
}

// Dense forward for the per-sample reference path. w1 is [input x hidden],
// so nonzero features gather contiguous columns.
void dense_forward(const Mlp& net, const double* x, double* h1, double* h2,
                   double* out) {
  std::memcpy(h1, net.b1.data(),
              sizeof(double) * static_cast<std::size_t>(net.hidden));
  for (int j = 0; j < net.input; ++j) {
    if (x[j] != 0.0) {
      axpy(x[j], &net.w1[static_cast<std::size_t>(j) * net.hidden], h1,
           net.hidden);
    }
  }
  forward_from_z1(net, h1, h2, out);
}

// Dense reverse pass given the head gradient dz3. dh2/dh1 are scratch of
// size hidden; they end up holding dz2/dz1.
void dense_backward(const Mlp& net, const double* x, const double* h1,
                    const double* h2, const double* dz3, MlpGrads& g,
                    double* dh2, double* dh1) {
  for (int r = 0; r < net.output; ++r) {
    g.b3[static_cast<std::size_t>(r)] += dz3[r];
    axpy(dz3[r], h2, &g.w3[static_cast<std::size_t>(r) * net.hidden], net.hidden);
  }
  std::memset(dh2, 0, sizeof(double) * static_cast<std::size_t>(net.hidden));
  for (int r = 0; r < net.output; ++r) {
    if (dz3[r] != 0.0) {
      axpy(dz3[r], &net.w3[static_cast<std::size_t>(r) * net.hidden], dh2,
           net.hidden);
    }
  }
  for (int c = 0; c < net.hidden; ++c) dh2[c] *= 1.0 - h2[c] * h2[c];

  std::memset(dh1, 0, sizeof(double) * static_cast<std::size_t>(net.hidden));
  for (int r = 0; r < net.hidden; ++r) {
    const double d = dh2[r];
    g.b2[static_cast<std::size_t>(r)] += d;
    axpy(d, h1, &g.w2[static_cast<std::size_t>(r) * net.hidden], net.hidden);
    axpy(d, &net.w2[static_cast<std::size_t>(r) * net.hidden], dh1, net.hidden);
  }
  for (int c = 0; c < net.hidden; ++c) dh1[c] *= 1.0 - h1[c] * h1[c];
  for (int c = 0; c < net.hidden; ++c) g.b1[static_cast<std::size_t>(c)] += dh1[c];
  for (int j = 0; j < net.input; ++j) {
    if (x[j] != 0.0) {
      axpy(x[j], dh1, &g.w1[static_cast<std::size_t>(j) * net.hidden],
           net.hidden);
    }
  }
}

// Stable log-softmax into logp and probabilities into probs; returns entropy.
double log_softmax(std::span<const double> logits, std::span<double> logp,
                   std::span<double> probs) {
  const std::size_t n = logits.size();
  double mx = logits[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  const double log_z = std::log(sum);
  double entropy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] /= sum;
    logp[i] = logits[i] - mx - log_z;
    entropy -= probs[i] * logp[i];
  }
  return entropy;
}

// Clipped-surrogate head for one sample: loss/entropy/clip bookkeeping into
// diag and, when dz3 is given, the gradient of the minimized loss w.r.t. the
// logits.
void actor_head(std::span<const double> logits, std::span<double> logp,
                std::span<double> probs, int action, double log_prob_old,
                double advantage, const PpoConfig& cfg, LossDiagnostics& diag,
                double* dz3) {
  const double entropy = log_softmax(logits, logp, probs);
  const double ratio =
      std::exp(logp[static_cast<std::size_t>(action)] - log_prob_old);
  const double unclipped = ratio * advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * advantage;
  const double surrogate = std::min(unclipped, clipped);

  diag.actor_loss += -surrogate - cfg.entropy_coeff * entropy;
  diag.entropy += entropy;
  if (ratio < 1.0 - cfg.clip || ratio > 1.0 + cfg.clip) diag.clip_fraction += 1.0;

  if (dz3 != nullptr) {
    // d(surrogate)/d(log pi(a)) through the min; zero when the clipped branch
    // is active, since clip is flat outside the band.
    const double dsurr_dlogp = (unclipped <= clipped) ? advantage * ratio : 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double indicator = (static_cast<int>(i) == action) ? 1.0 : 0.0;
      dz3[i] = -dsurr_dlogp * (indicator - probs[i]) +
               cfg.entropy_coeff * probs[i] * (logp[i] + entropy);
    }
  }
}

struct WorkBuffers {
  std::vector<double> h1, h2, logits, logp, probs, dz3, dh2, dh1;
  std::vector<double> ch1, ch2, cdh2, cdh1;
  double cout = 0.0;

  void resize(const Mlp& actor, const Mlp& critic) {
    h1.resize(static_cast<std::size_t>(actor.hidden));
    h2.resize(static_cast<std::size_t>(actor.hidden));
    logits.resize(static_cast<std::size_t>(actor.output));
    logp.resize(static_cast<std::size_t>(actor.output));
    probs.resize(static_cast<std::size_t>(actor.output));
    dz3.resize(static_cast<std::size_t>(actor.output));
    dh2.resize(static_cast<std::size_t>(actor.hidden));
    dh1.resize(static_cast<std::size_t>(actor.hidden));
    ch1.resize(static_cast<std::size_t>(critic.hidden));
    ch2.resize(static_cast<std::size_t>(critic.hidden));
    cdh2.resize(static_cast<std::size_t>(critic.hidden));
    cdh1.resize(static_cast<std::size_t>(critic.hidden));
  }
};

// Dense per-sample pass shared by net_gradients and net_losses.
void accumulate_sample(const NetworkParams& nets, const double* x, int action,
                       double log_prob_old, double advantage, double ret,
                       const PpoConfig& cfg, MlpGrads* actor_g,
                       MlpGrads* critic_g, WorkBuffers& wb,
                       LossDiagnostics& diag) {
  dense_forward(nets.actor, x, wb.h1.data(), wb.h2.data(), wb.logits.data());
  actor_head(wb.logits, wb.logp, wb.probs, action, log_prob_old, advantage,
             cfg, diag, actor_g != nullptr ? wb.dz3.data() : nullptr);
  if (actor_g != nullptr) {
    dense_backward(nets.actor, x, wb.h1.data(), wb.h2.data(), wb.dz3.data(),
                   *actor_g, wb.dh2.data(), wb.dh1.data());
  }

  dense_forward(nets.critic, x, wb.ch1.data(), wb.ch2.data(), &wb.cout);
  const double err = wb.cout - ret;
  diag.critic_loss += err * err;
  if (critic_g != nullptr) {
    const double dloss = 2.0 * err;
    dense_backward(nets.critic, x, wb.ch1.data(), wb.ch2.data(), &dloss,
                   *critic_g, wb.cdh2.data(), wb.cdh1.data());
  }
}

void scale_grads(MlpGrads& g, double s) {
  for (auto* v : {&g.w1, &g.b1, &g.w2, &g.b2, &g.w3, &g.b3}) {
    for (double& x : *v) x *= s;
  }
}

void finish_diag(LossDiagnostics& diag, std::size_t n) {
  const double inv = 1.0 / static_cast<double>(n);
  diag.actor_loss *= inv;
  diag.critic_loss *= inv;
  diag.entropy *= inv;
  diag.clip_fraction *= inv;
}

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_step(Mlp& net, const MlpGrads& g, AdamState& st, double lr) {
  const std::size_t total = net.parameter_count();
  if (st.m.size() != total) {
    st.m.assign(total, 0.0);
    st.v.assign(total, 0.0);
    st.step = 0;
  }
  ++st.step;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(st.step));

  std::size_t off = 0;
  auto apply = [&](std::vector<double>& p, const std::vector<double>& grad) {
    double* m = st.m.data() + off;
    double* v = st.v.data() + off;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
    }
    off += p.size();
  };
  apply(net.w1, g.w1);
  apply(net.b1, g.b1);
  apply(net.w2, g.w2);
  apply(net.b2, g.b2);
  apply(net.w3, g.w3);
  apply(net.b3, g.b3);
}

// Incremental first-layer state along one trajectory: consecutive steps share
// every history column, so each step adds at most one new column plus the
// rescaled step feature.
struct PrefixState {
  const Mlp* net = nullptr;
  int n_irs = 0;
  int n_users = 0;
  std::vector<double> base;  // b1 + columns of the fixed history prefix

  void reset(const Mlp& network, int irs, int users) {
    net = &network;
    n_irs = irs;
    n_users = users;
    base = network.b1;
  }

  // z1 for decision step t (1-based); the caller advances steps in order and
  // passes the action chosen at step t - 1.
  void z1_for_step(int t, const int* actions, double* z1) {
    if (t > 1) {
      const std::size_t col = static_cast<std::size_t>(t - 2) * n_users +
                              static_cast<std::size_t>(actions[t - 2]);
      axpy(1.0, &net->w1[col * net->hidden], base.data(), net->hidden);
    }
    std::memcpy(z1, base.data(),
                sizeof(double) * static_cast<std::size_t>(net->hidden));
    const std::size_t last = static_cast<std::size_t>(n_irs) * n_users;
    axpy(static_cast<double>(t) / n_irs, &net->w1[last * net->hidden], z1,
         net->hidden);
  }
};

bool finite(double x) { return std::isfinite(x); }

}  // namespace

Mlp Mlp::xavier(int input, int hidden, int output, std::mt19937_64& rng) {
  if (input < 1 || hidden < 1 || output < 1) {
    throw DomainError("network dimensions must be >= 1");
  }
  Mlp net;
  net.input = input;
  net.hidden = hidden;
  net.output = output;
  auto fill = [&rng](std::vector<double>& w, std::size_t count, int fan_in,
                     int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    w.resize(count);
    for (double& x : w) x = uniform_in(rng, -limit, limit);
  };
  fill(net.w1, static_cast<std::size_t>(input) * hidden, input, hidden);
  net.b1.assign(static_cast<std::size_t>(hidden), 0.0);
  fill(net.w2, static_cast<std::size_t>(hidden) * hidden, hidden, hidden);
  net.b2.assign(static_cast<std::size_t>(hidden), 0.0);
  fill(net.w3, static_cast<std::size_t>(hidden) * output, hidden, output);
  net.b3.assign(static_cast<std::size_t>(output), 0.0);
  return net;
}

std::size_t Mlp::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
}

bool Mlp::all_finite() const {
  for (const auto* v : {&w1, &b1, &w2, &b2, &w3, &b3}) {
    for (double x : *v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

void Mlp::forward(std::span<const double> x, std::span<double> h1,
                  std::span<double> h2, std::span<double> out) const {
  if (static_cast<int>(x.size()) != input ||
      static_cast<int>(h1.size()) != hidden ||
      static_cast<int>(h2.size()) != hidden ||
      static_cast<int>(out.size()) != output) {
    throw DomainError("forward buffer sizes do not match the network");
  }
  dense_forward(*this, x.data(), h1.data(), h2.data(), out.data());
}

NetworkParams init_networks(int input_dim, int n_actions, int hidden_dim,
                            std::mt19937_64& rng) {
  NetworkParams nets;
  nets.actor = Mlp::xavier(input_dim, hidden_dim, n_actions, rng);
  nets.critic = Mlp::xavier(input_dim, hidden_dim, 1, rng);
  return nets;
}

NetworkParams init_networks(int input_dim, int n_actions, int hidden_dim,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_networks(input_dim, n_actions, hidden_dim, rng);
}

int encoded_state_size(int n_irs, int n_users) {
  return n_irs * n_users + 1;
}

void encode_state(std::span<const int> history, int step, int n_irs,
                  int n_users, std::vector<double>& out) {
  if (step < 1 || step > n_irs) throw DomainError("decision step out of range");
  if (static_cast<int>(history.size()) < step - 1) {
    throw DomainError("history shorter than the decision step requires");
  }
  out.assign(static_cast<std::size_t>(encoded_state_size(n_irs, n_users)), 0.0);
  for (int i = 0; i < step - 1; ++i) {
    out[static_cast<std::size_t>(i) * n_users +
        static_cast<std::size_t>(history[static_cast<std::size_t>(i)])] = 1.0;
  }
  out.back() = static_cast<double>(step) / n_irs;
}

void softmax(std::span<const double> logits, std::span<double> probs) {
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] /= sum;
}

Trajectory rollout(const NetworkParams& nets, const ObjectiveEvaluator& eval,
                   ObjectiveMode mode, std::mt19937_64& rng) {
  const int n = eval.n_irs();
  const int users = eval.n_users();
  if (nets.actor.output != users) {
    throw DomainError("actor head size does not match the user count");
  }

  Trajectory traj;
  traj.actions.reserve(static_cast<std::size_t>(n));
  traj.log_probs.reserve(static_cast<std::size_t>(n));
  traj.values.reserve(static_cast<std::size_t>(n));

  WorkBuffers wb;
  wb.resize(nets.actor, nets.critic);
  PrefixState actor_state, critic_state;
  actor_state.reset(nets.actor, n, users);
  critic_state.reset(nets.critic, n, users);

  for (int t = 1; t <= n; ++t) {
    actor_state.z1_for_step(t, traj.actions.data(), wb.h1.data());
    forward_from_z1(nets.actor, wb.h1.data(), wb.h2.data(), wb.logits.data());
    log_softmax(wb.logits, wb.logp, wb.probs);

    const double u = uniform01(rng);
    int action = users - 1;
    double cumulative = 0.0;
    for (int i = 0; i < users; ++i) {
      cumulative += wb.probs[static_cast<std::size_t>(i)];
      if (u < cumulative) {
        action = i;
        break;
      }
    }

    critic_state.z1_for_step(t, traj.actions.data(), wb.ch1.data());
    forward_from_z1(nets.critic, wb.ch1.data(), wb.ch2.data(), &wb.cout);

    traj.actions.push_back(action);
    traj.log_probs.push_back(wb.logp[static_cast<std::size_t>(action)]);
    traj.values.push_back(wb.cout);
  }

  traj.reward_bps = eval.objective_integral(Allocation{traj.actions}, mode);
  return traj;
}

void compute_gae(std::span<const double> values, double terminal_reward,
                 double discount, double gae_lambda,
                 std::vector<double>& advantages, std::vector<double>& returns) {
  const std::size_t n = values.size();
  advantages.resize(n);
  returns.resize(n);
  double gae = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = (i + 1 < n) ? values[i + 1] : 0.0;
    const double reward = (i + 1 == n) ? terminal_reward : 0.0;
    const double delta = reward + discount * next_value - values[i];
    gae = delta + discount * gae_lambda * gae;
    advantages[i] = gae;
  }
  for (std::size_t i = 0; i < n; ++i) returns[i] = advantages[i] + values[i];
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage,
                  std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

MlpGrads::MlpGrads(const Mlp& like)
    : w1(like.w1.size(), 0.0),
      b1(like.b1.size(), 0.0),
      w2(like.w2.size(), 0.0),
      b2(like.b2.size(), 0.0),
      w3(like.w3.size(), 0.0),
      b3(like.b3.size(), 0.0) {}

void MlpGrads::zero() {
  for (auto* v : {&w1, &b1, &w2, &b2, &w3, &b3}) {
    std::fill(v->begin(), v->end(), 0.0);
  }
}

LossDiagnostics net_gradients(const NetworkParams& nets,
                              std::span<const StepSample> samples,
                              const PpoConfig& config, MlpGrads& actor_grads,
                              MlpGrads& critic_grads) {
  if (samples.empty()) throw DomainError("gradient pass over an empty sample set");
  actor_grads = MlpGrads(nets.actor);
  critic_grads = MlpGrads(nets.critic);
  WorkBuffers wb;
  wb.resize(nets.actor, nets.critic);
  LossDiagnostics diag;
  for (const StepSample& s : samples) {
    accumulate_sample(nets, s.state.data(), s.action, s.log_prob_old,
                      s.advantage, s.value_return, config, &actor_grads,
                      &critic_grads, wb, diag);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  scale_grads(actor_grads, inv);
  scale_grads(critic_grads, inv);
  finish_diag(diag, samples.size());
  return diag;
}

LossDiagnostics net_losses(const NetworkParams& nets,
                           std::span<const StepSample> samples,
                           const PpoConfig& config) {
  if (samples.empty()) throw DomainError("loss pass over an empty sample set");
  WorkBuffers wb;
  wb.resize(nets.actor, nets.critic);
  LossDiagnostics diag;
  for (const StepSample& s : samples) {
    accumulate_sample(nets, s.state.data(), s.action, s.log_prob_old,
                      s.advantage, s.value_return, config, nullptr, nullptr, wb,
                      diag);
  }
  finish_diag(diag, samples.size());
  return diag;
}

namespace detail {

namespace {

constexpr int kStepBlock = 16;

// Per-trajectory workspace for the blocked pass: activations, head-gradient
// rows, and first-layer gradient rows, all [n_steps x hidden].
struct TrajWorkspace {
  std::vector<double> h1, h2, dz2, dz1;
  std::vector<double> dh1_block;  // kStepBlock x hidden scratch

  void resize(int steps, int hidden) {
    const std::size_t n = static_cast<std::size_t>(steps) * hidden;
    h1.resize(n);
    h2.resize(n);
    dz2.resize(n);
    dz1.resize(n);
    dh1_block.resize(static_cast<std::size_t>(kStepBlock) * hidden);
  }
};

// Hidden-layer forward for a run of steps: H2 = tanh(H1 W2^T + b2), reading
// each W2 row once per block.
void blocked_hidden_forward(const Mlp& net, int steps, TrajWorkspace& ws) {
  const int hidden = net.hidden;
  for (int b0 = 0; b0 < steps; b0 += kStepBlock) {
    const int b1 = std::min(steps, b0 + kStepBlock);
    for (int r = 0; r < hidden; ++r) {
      const double* w2row = &net.w2[static_cast<std::size_t>(r) * hidden];
      const double bias = net.b2[static_cast<std::size_t>(r)];
      for (int b = b0; b < b1; ++b) {
        ws.h2[static_cast<std::size_t>(b) * hidden + r] =
            bias + dot(w2row, &ws.h1[static_cast<std::size_t>(b) * hidden], hidden);
      }
    }
    for (int b = b0; b < b1; ++b) {
      double* row = &ws.h2[static_cast<std::size_t>(b) * hidden];
      for (int r = 0; r < hidden; ++r) row[r] = std::tanh(row[r]);
    }
  }
}

// Hidden-layer reverse for a run of steps: accumulates dW2, db2 and turns the
// stored dz2 rows into dz1 rows. W2 and its gradient are read once per block.
void blocked_hidden_backward(const Mlp& net, int steps, TrajWorkspace& ws,
                             MlpGrads& g) {
  const int hidden = net.hidden;
  for (int b0 = 0; b0 < steps; b0 += kStepBlock) {
    const int b1 = std::min(steps, b0 + kStepBlock);
    const int width = b1 - b0;
    for (int r = 0; r < hidden; ++r) {
      double* grad_row = &g.w2[static_cast<std::size_t>(r) * hidden];
      for (int b = b0; b < b1; ++b) {
        const double d = ws.dz2[static_cast<std::size_t>(b) * hidden + r];
        g.b2[static_cast<std::size_t>(r)] += d;
        if (d != 0.0) {
          axpy(d, &ws.h1[static_cast<std::size_t>(b) * hidden], grad_row, hidden);
        }
      }
    }
    std::memset(ws.dh1_block.data(), 0,
                sizeof(double) * static_cast<std::size_t>(width) * hidden);
    for (int r = 0; r < hidden; ++r) {
      const double* w2row = &net.w2[static_cast<std::size_t>(r) * hidden];
      for (int b = b0; b < b1; ++b) {
        const double d = ws.dz2[static_cast<std::size_t>(b) * hidden + r];
        if (d != 0.0) {
          axpy(d, w2row, &ws.dh1_block[static_cast<std::size_t>(b - b0) * hidden],
               hidden);
        }
      }
    }
    for (int b = b0; b < b1; ++b) {
      const double* h1row = &ws.h1[static_cast<std::size_t>(b) * hidden];
      const double* src = &ws.dh1_block[static_cast<std::size_t>(b - b0) * hidden];
      double* dst = &ws.dz1[static_cast<std::size_t>(b) * hidden];
      for (int r = 0; r < hidden; ++r) {
        dst[r] = src[r] * (1.0 - h1row[r] * h1row[r]);
      }
    }
  }
}

// First-layer gradients from the stored dz1 rows. Each history column c_i
// feeds every step t >= i + 2, so its gradient is a suffix sum; the step
// feature column collects the step-weighted sum.
void prefix_w1_backward(const Mlp& net, int steps, int n_users,
                        const int* actions, const TrajWorkspace& ws,
                        MlpGrads& g, std::vector<double>& suffix,
                        std::vector<double>& step_weighted) {
  const int hidden = net.hidden;
  suffix.assign(static_cast<std::size_t>(hidden), 0.0);
  step_weighted.assign(static_cast<std::size_t>(hidden), 0.0);
  for (int t = steps; t >= 1; --t) {
    const double* dz1row = &ws.dz1[static_cast<std::size_t>(t - 1) * hidden];
    axpy(1.0, dz1row, suffix.data(), hidden);
    axpy(static_cast<double>(t) / steps, dz1row, step_weighted.data(), hidden);
    if (t >= 2) {
      const std::size_t col = static_cast<std::size_t>(t - 2) * n_users +
                              static_cast<std::size_t>(actions[t - 2]);
      axpy(1.0, suffix.data(), &g.w1[col * hidden], hidden);
    }
  }
  axpy(1.0, suffix.data(), g.b1.data(), hidden);
  const std::size_t last = static_cast<std::size_t>(steps) * n_users;
  axpy(1.0, step_weighted.data(), &g.w1[last * hidden], hidden);
}

}  // namespace

LossDiagnostics trajectory_gradients(const NetworkParams& nets,
                                     std::span<const Trajectory> batch,
                                     std::span<const double> advantages,
                                     std::span<const double> returns,
                                     const PpoConfig& config, int n_irs,
                                     int n_users, MlpGrads& actor_grads,
                                     MlpGrads& critic_grads) {
  actor_grads = MlpGrads(nets.actor);
  critic_grads = MlpGrads(nets.critic);
  const std::size_t steps = static_cast<std::size_t>(n_irs);
  const int hidden = nets.actor.hidden;

  TrajWorkspace actor_ws, critic_ws;
  actor_ws.resize(n_irs, hidden);
  critic_ws.resize(n_irs, nets.critic.hidden);
  PrefixState actor_state, critic_state;
  std::vector<double> logits(static_cast<std::size_t>(nets.actor.output));
  std::vector<double> logp(logits.size()), probs(logits.size()),
      dz3(logits.size());
  std::vector<double> suffix, step_weighted;

  LossDiagnostics diag;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const Trajectory& traj = batch[e];
    if (static_cast<int>(traj.actions.size()) != n_irs) {
      throw DomainError("trajectory length does not match the element count");
    }

    actor_state.reset(nets.actor, n_irs, n_users);
    critic_state.reset(nets.critic, n_irs, n_users);
    for (int t = 1; t <= n_irs; ++t) {
      actor_state.z1_for_step(t, traj.actions.data(),
                              &actor_ws.h1[static_cast<std::size_t>(t - 1) * hidden]);
      critic_state.z1_for_step(
          t, traj.actions.data(),
          &critic_ws.h1[static_cast<std::size_t>(t - 1) * nets.critic.hidden]);
    }
    for (int t = 0; t < n_irs; ++t) {
      double* row = &actor_ws.h1[static_cast<std::size_t>(t) * hidden];
      for (int r = 0; r < hidden; ++r) row[r] = std::tanh(row[r]);
      double* crow = &critic_ws.h1[static_cast<std::size_t>(t) * nets.critic.hidden];
      for (int r = 0; r < nets.critic.hidden; ++r) crow[r] = std::tanh(crow[r]);
    }
    blocked_hidden_forward(nets.actor, n_irs, actor_ws);
    blocked_hidden_forward(nets.critic, n_irs, critic_ws);

    for (int t = 0; t < n_irs; ++t) {
      const std::size_t idx = e * steps + static_cast<std::size_t>(t);
      const double* h2row = &actor_ws.h2[static_cast<std::size_t>(t) * hidden];
      for (int r = 0; r < nets.actor.output; ++r) {
        logits[static_cast<std::size_t>(r)] =
            nets.actor.b3[static_cast<std::size_t>(r)] +
            dot(&nets.actor.w3[static_cast<std::size_t>(r) * hidden], h2row,
                hidden);
      }
      const int action = traj.actions[static_cast<std::size_t>(t)];
      actor_head(logits, logp, probs, action,
                 traj.log_probs[static_cast<std::size_t>(t)], advantages[idx],
                 config, diag, dz3.data());

      double* dz2row = &actor_ws.dz2[static_cast<std::size_t>(t) * hidden];
      std::memset(dz2row, 0, sizeof(double) * static_cast<std::size_t>(hidden));
      for (int r = 0; r < nets.actor.output; ++r) {
        const double d = dz3[static_cast<std::size_t>(r)];
        actor_grads.b3[static_cast<std::size_t>(r)] += d;
        axpy(d, h2row, &actor_grads.w3[static_cast<std::size_t>(r) * hidden],
             hidden);
        axpy(d, &nets.actor.w3[static_cast<std::size_t>(r) * hidden], dz2row,
             hidden);
      }
      for (int r = 0; r < hidden; ++r) dz2row[r] *= 1.0 - h2row[r] * h2row[r];

      // critic head: linear value output, squared error loss
      const int chidden = nets.critic.hidden;
      const double* ch2row = &critic_ws.h2[static_cast<std::size_t>(t) * chidden];
      const double value = nets.critic.b3[0] +
                           dot(nets.critic.w3.data(), ch2row, chidden);
      const double err = value - returns[idx];
      diag.critic_loss += err * err;
      const double dvalue = 2.0 * err;
      critic_grads.b3[0] += dvalue;
      axpy(dvalue, ch2row, critic_grads.w3.data(), chidden);
      double* cdz2row = &critic_ws.dz2[static_cast<std::size_t>(t) * chidden];
      for (int r = 0; r < chidden; ++r) {
        cdz2row[r] = dvalue * nets.critic.w3[static_cast<std::size_t>(r)] *
                     (1.0 - ch2row[r] * ch2row[r]);
      }
    }

    blocked_hidden_backward(nets.actor, n_irs, actor_ws, actor_grads);
    blocked_hidden_backward(nets.critic, n_irs, critic_ws, critic_grads);
    prefix_w1_backward(nets.actor, n_irs, n_users, traj.actions.data(),
                       actor_ws, actor_grads, suffix, step_weighted);
    prefix_w1_backward(nets.critic, n_irs, n_users, traj.actions.data(),
                       critic_ws, critic_grads, suffix, step_weighted);
  }

  const std::size_t total = batch.size() * steps;
  const double inv = 1.0 / static_cast<double>(total);
  scale_grads(actor_grads, inv);
  scale_grads(critic_grads, inv);
  finish_diag(diag, total);
  return diag;
}

}  // namespace detail

LossDiagnostics ppo_update(std::span<const Trajectory> batch,
                           NetworkParams& nets, const PpoConfig& config,
                           int n_irs, int n_users) {
  if (static_cast<int>(batch.size()) != config.batch) {
    throw DomainError("update called with a batch of the wrong size");
  }

  // GAE per episode, then advantage standardization across the whole batch.
  const std::size_t steps = static_cast<std::size_t>(n_irs);
  std::vector<double> advantages(batch.size() * steps);
  std::vector<double> returns(batch.size() * steps);
  {
    std::vector<double> adv, ret;
    for (std::size_t e = 0; e < batch.size(); ++e) {
      compute_gae(batch[e].values, batch[e].reward_bps * config.reward_scale,
                  config.discount, config.gae_lambda, adv, ret);
      std::copy(adv.begin(), adv.end(),
                advantages.begin() + static_cast<std::ptrdiff_t>(e * steps));
      std::copy(ret.begin(), ret.end(),
                returns.begin() + static_cast<std::ptrdiff_t>(e * steps));
    }
  }
  const std::size_t total = advantages.size();
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(total);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(total);
  const double std_floor = std::max(std::sqrt(var), 1e-8);
  for (double& a : advantages) a = (a - mean) / std_floor;

  MlpGrads actor_grads, critic_grads;
  LossDiagnostics diag;
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    diag = detail::trajectory_gradients(nets, batch, advantages, returns,
                                        config, n_irs, n_users, actor_grads,
                                        critic_grads);
    if (!finite(diag.actor_loss) || !finite(diag.critic_loss)) {
      std::ostringstream msg;
      msg << "non-finite loss at update epoch " << epoch << ": actor "
          << diag.actor_loss << ", critic " << diag.critic_loss;
      throw NonFiniteLoss(msg.str());
    }
    adam_step(nets.actor, actor_grads, nets.actor_adam, config.actor_lr);
    adam_step(nets.critic, critic_grads, nets.critic_adam, config.critic_lr);
    if (!nets.actor.all_finite() || !nets.critic.all_finite()) {
      throw NonFiniteLoss("network parameters left the finite range");
    }
  }
  return diag;
}

TrainResult train(const Scenario& scenario, ObjectiveMode mode, double power_w,
                  const PpoConfig& config, const QuadratureSettings& quad) {
  validate_config(config);
  const ObjectiveEvaluator eval(scenario, power_w, quad);
  const int n = eval.n_irs();
  const int users = eval.n_users();
  if (n < 1) throw DomainError("training needs at least one IRS element");

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.nets = init_networks(encoded_state_size(n, users), users,
                              config.hidden_dim, rng);

  // The best tracker starts from one uniformly random allocation.
  result.best.assign.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) result.best.assign.push_back(bounded_rand(rng, users));
  result.best_integral_bps = eval.objective_integral(result.best, mode);

  result.curve.reserve(static_cast<std::size_t>(config.episodes));
  std::vector<Trajectory> buffer;
  buffer.reserve(static_cast<std::size_t>(config.batch));

  for (int episode = 1; episode <= config.episodes; ++episode) {
    Trajectory traj = rollout(result.nets, eval, mode, rng);
    if (traj.reward_bps > result.best_integral_bps) {
      result.best_integral_bps = traj.reward_bps;
      result.best.assign = traj.actions;
    }
    result.curve.push_back({episode, traj.reward_bps, result.best_integral_bps});
    buffer.push_back(std::move(traj));
    if (static_cast<int>(buffer.size()) == config.batch) {
      ppo_update(buffer, result.nets, config, n, users);
      buffer.clear();
    }
  }

  result.best_capacity_bps = std::max(0.0, result.best_integral_bps);
  return result;
}

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  return json{{"input", net.input},   {"hidden", net.hidden},
              {"output", net.output}, {"w1", net.w1},
              {"b1", net.b1},         {"w2", net.w2},
              {"b2", net.b2},         {"w3", net.w3},
              {"b3", net.b3}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  net.input = j.at("input").get<int>();
  net.hidden = j.at("hidden").get<int>();
  net.output = j.at("output").get<int>();
  net.w1 = j.at("w1").get<std::vector<double>>();
  net.b1 = j.at("b1").get<std::vector<double>>();
  net.w2 = j.at("w2").get<std::vector<double>>();
  net.b2 = j.at("b2").get<std::vector<double>>();
  net.w3 = j.at("w3").get<std::vector<double>>();
  net.b3 = j.at("b3").get<std::vector<double>>();
  if (net.w1.size() != static_cast<std::size_t>(net.input) * net.hidden ||
      net.w2.size() != static_cast<std::size_t>(net.hidden) * net.hidden ||
      net.w3.size() != static_cast<std::size_t>(net.hidden) * net.output) {
    throw MalformedConfig("checkpoint weight sizes are inconsistent");
  }
  return net;
}

json adam_to_json(const AdamState& st) {
  return json{{"m", st.m}, {"v", st.v}, {"step", st.step}};
}

AdamState adam_from_json(const json& j) {
  AdamState st;
  st.m = j.at("m").get<std::vector<double>>();
  st.v = j.at("v").get<std::vector<double>>();
  st.step = j.at("step").get<long>();
  return st;
}

json config_to_json(const PpoConfig& c) {
  return json{{"episodes", c.episodes},
              {"batch", c.batch},
              {"clip", c.clip},
              {"gae_lambda", c.gae_lambda},
              {"discount", c.discount},
              {"actor_lr", c.actor_lr},
              {"critic_lr", c.critic_lr},
              {"hidden_dim", c.hidden_dim},
              {"update_epochs", c.update_epochs},
              {"entropy_coeff", c.entropy_coeff},
              {"seed", c.seed},
              {"reward_scale", c.reward_scale}};
}

PpoConfig config_from_json(const json& j) {
  PpoConfig c;
  c.episodes = j.at("episodes").get<int>();
  c.batch = j.at("batch").get<int>();
  c.clip = j.at("clip").get<double>();
  c.gae_lambda = j.at("gae_lambda").get<double>();
  c.discount = j.at("discount").get<double>();
  c.actor_lr = j.at("actor_lr").get<double>();
  c.critic_lr = j.at("critic_lr").get<double>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.update_epochs = j.at("update_epochs").get<int>();
  c.entropy_coeff = j.at("entropy_coeff").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.reward_scale = j.at("reward_scale").get<double>();
  return c;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& nets,
                     const PpoConfig& config, const std::string& rng_state) {
  json j;
  j["version"] = kCheckpointVersion;
  j["config"] = config_to_json(config);
  j["rng_state"] = rng_state;
  j["actor"] = mlp_to_json(nets.actor);
  j["critic"] = mlp_to_json(nets.critic);
  j["actor_adam"] = adam_to_json(nets.actor_adam);
  j["critic_adam"] = adam_to_json(nets.critic_adam);
  std::ofstream out(path);
  if (!out) throw Error("cannot open checkpoint file for writing: " + path);
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw MalformedConfig(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw MalformedConfig("unsupported checkpoint version");
  }
  Checkpoint cp;
  cp.config = config_from_json(j.at("config"));
  cp.rng_state = j.at("rng_state").get<std::string>();
  cp.nets.actor = mlp_from_json(j.at("actor"));
  cp.nets.critic = mlp_from_json(j.at("critic"));
  cp.nets.actor_adam = adam_from_json(j.at("actor_adam"));
  cp.nets.critic_adam = adam_from_json(j.at("critic_adam"));
  return cp;
}

}  // namespace lumisec
