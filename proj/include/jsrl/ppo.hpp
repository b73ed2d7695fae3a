#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "jsrl/dense_net.hpp"
#include "jsrl/message_passing.hpp"

namespace jsrl {

/// Policy and value heads of one agent.
struct AgentNets {
  DenseNet policy;  // logits, one per action
  DenseNet value;   // scalar
  int action_count() const { return policy.output_dim(); }
};

AgentNets init_agent_nets(int obs_dim, int action_count, int hidden, Activation activation,
                          uint64_t seed);

/// Probabilities of a masked softmax: illegal entries get exactly zero,
/// legal entries are softmax over their logits (max-shifted for stability).
/// Throws if no entry is legal.
Vec masked_softmax(std::span<const double> logits, std::span<const uint8_t> mask);

/// Inverse-CDF draw over explicit probabilities (cumulative sum walk).
int sample_categorical(std::span<const double> probs, std::mt19937_64& rng);

/// Highest legal logit, ties to the lowest index.
int argmax_masked(std::span<const double> logits, std::span<const uint8_t> mask);

struct ActionSample {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

ActionSample sample_action(const AgentNets& nets, std::span<const double> obs,
                           std::span<const uint8_t> mask, std::mt19937_64& rng);
ActionSample greedy_action(const AgentNets& nets, std::span<const double> obs,
                           std::span<const uint8_t> mask);

/// G_t = r_t + gamma * (1 - done_t) * G_{t+1}.
Vec discounted_returns(std::span<const double> rewards, std::span<const uint8_t> dones,
                       double gamma);

struct GaeResult {
  Vec advantages;
  Vec value_targets;  // advantages + values
};

/// Generalized advantage estimation. `values` has one entry per transition
/// plus the bootstrap value of the state after the last one (0 if terminal).
GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values,
                         std::span<const uint8_t> dones, double gamma, double lambda);

struct Transition {
  std::shared_ptr<const Graph> graph;  // state, kept for end-to-end updates
  Vec observation;                     // encoder readout at collection time
  std::vector<uint8_t> mask;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

struct TrajectoryBatch {
  std::vector<Transition> steps;
  double bootstrap_value = 0.0;  // value after the last step (0 if terminal)
  Vec advantages;                // filled by prepare_advantages
  Vec value_targets;
};

void prepare_advantages(TrajectoryBatch& batch, double gamma, double lambda);

struct PPOConfig {
  double gamma = 0.99;
  double lambda_gae = 0.95;
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatch_size = 64;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double lr = 3e-4;
  double max_grad_norm = 0.5;
  UpdateMode update_mode = UpdateMode::kAdam;
  ExecMode exec = ExecMode::kParallel;  // bit-identical to serial by design
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;  // plain squared error, before value_coef
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int transitions = 0;
};

/// When set, observations are recomputed through the encoder every time a
/// transition is visited and the encoder parameters train jointly with the
/// heads (gradients flow from both heads through the readout into all
/// message-passing rounds).
struct EncoderTraining {
  EncoderParams* encoder = nullptr;
  AdamState* message_opt = nullptr;
  AdamState* update_opt = nullptr;
  ReadoutSpec readout;
};

/// Clipped-surrogate update: epochs x shuffled minibatches over the batch.
/// Loss = -min(ratio*A, clip(ratio)*A) + value_coef*(v-target)^2
///        - entropy_coef*H, averaged per minibatch; advantages are normalized
/// over the whole batch first (skipped if their variance < 1e-8); gradients
/// get a joint global-norm cap across every trained parameter block.
UpdateStats ppo_update(AgentNets& nets, AdamState& policy_opt, AdamState& value_opt,
                       const TrajectoryBatch& batch, const PPOConfig& cfg,
                       std::mt19937_64& shuffle_rng, EncoderTraining* enc = nullptr);

}  // namespace jsrl
