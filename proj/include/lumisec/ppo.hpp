// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lumisec/allocation.hpp"

namespace lumisec {

struct PpoConfig {
  int episodes = 1500;
  int batch = 64;
  double clip = 0.2;          // surrogate clipping epsilon
  double gae_lambda = 0.95;
  double discount = 0.99;
  double actor_lr = 1e-4;
  double critic_lr = 5e-4;
  int hidden_dim = 256;
  int update_epochs = 4;      // full-batch passes per update
  double entropy_coeff = 0.01;
  std::uint64_t seed = 0;
  double reward_scale = 1e-9;  // terminal rewards enter GAE in Gbit/s
};

/// Throws DomainError when a config field is outside its valid range.
void validate_config(const PpoConfig& config);

/// Two-hidden-layer perceptron with tanh activations and a linear head.
/// w2/w3 are row-major [out x in]; w1 is stored [input x hidden] so that the
/// mostly-one-hot state encoding gathers contiguous columns.
struct Mlp {
  int input = 0;
  int hidden = 0;
  int output = 0;
  std::vector<double> w1, b1, w2, b2, w3, b3;

  static Mlp xavier(int input, int hidden, int output, std::mt19937_64& rng);

  std::size_t parameter_count() const;
  bool all_finite() const;

  /// h1/h2 receive the hidden activations (post-tanh), out the head values.
  void forward(std::span<const double> x, std::span<double> h1,
               std::span<double> h2, std::span<double> out) const;
};

/// Adam first/second moment accumulators over a flattened parameter vector.
struct AdamState {
  std::vector<double> m, v;
  long step = 0;
};

struct NetworkParams {
  Mlp actor;   // logits over the K+1 user tags
  Mlp critic;  // scalar value head
  AdamState actor_adam, critic_adam;
};

NetworkParams init_networks(int input_dim, int n_actions, int hidden_dim,
                            std::uint64_t seed);
NetworkParams init_networks(int input_dim, int n_actions, int hidden_dim,
                            std::mt19937_64& rng);

int encoded_state_size(int n_irs, int n_users);

/// Fixed-length featurization of the allocation prefix at decision step
/// `step` (1-based): n_irs one-hot blocks of width n_users, all-zero while
/// unallocated, plus one trailing normalized-step entry step / n_irs.
void encode_state(std::span<const int> history, int step, int n_irs,
                  int n_users, std::vector<double>& out);

/// Numerically stable softmax.
void softmax(std::span<const double> logits, std::span<double> probs);

/// One full episode. States are implicit in the action prefix; statistics are
/// recorded at sampling time (the frozen policy of PPO's ratio).
struct Trajectory {
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  double reward_bps = 0.0;  // terminal pre-clamp secrecy value
};

Trajectory rollout(const NetworkParams& nets, const ObjectiveEvaluator& eval,
                   ObjectiveMode mode, std::mt19937_64& rng);

/// GAE over an episode with zero intermediate rewards, the terminal reward at
/// the last step, and a zero bootstrap value past the end. `returns` holds
/// advantage + value, the critic regression target.
void compute_gae(std::span<const double> values, double terminal_reward,
                 double discount, double gae_lambda,
                 std::vector<double>& advantages, std::vector<double>& returns);

/// min(r A, clip(r, 1 - eps, 1 + eps) A), the per-step clipped surrogate.
double clipped_surrogate(double ratio, double advantage, double clip);

/// One (state, action) sample with its frozen-policy statistics, in the dense
/// form used by the gradient checks.
struct StepSample {
  std::vector<double> state;
  int action = 0;
  double log_prob_old = 0.0;
  double advantage = 0.0;
  double value_return = 0.0;
};

struct MlpGrads {
  std::vector<double> w1, b1, w2, b2, w3, b3;
  MlpGrads() = default;
  explicit MlpGrads(const Mlp& like);
  void zero();
};

struct LossDiagnostics {
  double actor_loss = 0.0;   // minimized: -(mean surrogate + entropy bonus)
  double critic_loss = 0.0;  // mean squared value error
  double entropy = 0.0;      // mean policy entropy
  double clip_fraction = 0.0;
};

/// Mean analytic gradients of the actor objective (clipped surrogate plus
/// entropy bonus, negated for minimization) and of the critic squared error,
/// by reverse-mode accumulation through the tanh layers and the softmax head.
LossDiagnostics net_gradients(const NetworkParams& nets,
                              std::span<const StepSample> samples,
                              const PpoConfig& config, MlpGrads& actor_grads,
                              MlpGrads& critic_grads);

/// The loss values alone; the quantity the finite-difference oracle probes.
LossDiagnostics net_losses(const NetworkParams& nets,
                           std::span<const StepSample> samples,
                           const PpoConfig& config);

/// PPO update over one batch of episodes: GAE advantages standardized across
/// the batch (std floor 1e-8), then `update_epochs` full-batch gradient steps
/// with Adam on actor and critic. The stored rollout statistics play the role
/// of the frozen policy; the ratio is 1 on the first pass. Throws
/// NonFiniteLoss when a loss or parameter leaves the finite range.
LossDiagnostics ppo_update(std::span<const Trajectory> batch,
                           NetworkParams& nets, const PpoConfig& config,
                           int n_irs, int n_users);

namespace detail {

/// Batched gradient pass over whole trajectories, the path ppo_update runs.
/// Exploits the prefix structure of the state encoding (incremental first
/// layer, suffix-summed input gradients) and blocks the hidden-layer work
/// over steps. Equal to net_gradients on the flattened dense samples up to
/// floating-point accumulation order.
LossDiagnostics trajectory_gradients(const NetworkParams& nets,
                                     std::span<const Trajectory> batch,
                                     std::span<const double> advantages,
                                     std::span<const double> returns,
                                     const PpoConfig& config, int n_irs,
                                     int n_users, MlpGrads& actor_grads,
                                     MlpGrads& critic_grads);

}  // namespace detail

struct CurvePoint {
  int episode = 0;
  double reward_bps = 0.0;       // pre-clamp secrecy value of this episode
  double best_so_far_bps = 0.0;  // running max, seeded by the initial draw
};

struct TrainResult {
  Allocation best;
  double best_integral_bps = 0.0;  // pre-clamp value of the best allocation
  double best_capacity_bps = 0.0;  // clamped secrecy capacity of the best
  std::vector<CurvePoint> curve;
  NetworkParams nets;  // final parameters, for checkpointing
};

/// Episodic training: one rollout per episode with the terminal secrecy
/// reward, a PPO update every `batch` episodes, and best-allocation tracking
/// seeded by a uniformly random allocation drawn before the first episode.
/// Identical (scenario, mode, power, config) reproduce identical results.
TrainResult train(const Scenario& scenario, ObjectiveMode mode, double power_w,
                  const PpoConfig& config, const QuadratureSettings& quad = {});

/// Versioned JSON checkpoint holding the networks, optimizer moments, config,
/// and RNG state. Doubles round-trip exactly.
void save_checkpoint(const std::string& path, const NetworkParams& nets,
                     const PpoConfig& config, const std::string& rng_state);

struct Checkpoint {
  NetworkParams nets;
  PpoConfig config;
  std::string rng_state;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace lumisec
