#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jsrl/environment.hpp"
#include "jsrl/ppo.hpp"

namespace jsrl {

struct EncoderConfig {
  int rounds = 3;
  int hidden = 64;
  int message_dim = 16;
  Activation activation = Activation::kTanh;
};

struct HeadConfig {
  int hidden = 64;
  Activation activation = Activation::kTanh;
};

/// Everything one independent learner owns: its own encoder, heads and
/// optimizer states. Agents share nothing; they interact only through the
/// environment.
struct AgentBinding {
  int agent_id = 0;
  ReadoutSpec readout;
  EncoderParams encoder;
  AgentNets nets;
  AdamState policy_opt, value_opt, message_opt, update_opt;
};

std::vector<AgentBinding> make_bindings(const Environment& env, const EncoderConfig& enc_cfg,
                                        const HeadConfig& head_cfg, uint64_t seed);

struct EpisodeSummary {
  int steps = 0;
  std::vector<double> returns;  // per agent, undiscounted
  bool success = false;
  std::optional<int> makespan;
};

struct EpisodeData {
  std::vector<TrajectoryBatch> batches;  // per agent, aligned step-for-step
  EpisodeSummary summary;
};

/// One synchronous episode: every agent encodes the same graph through its
/// own encoder, acts under its legal mask, and records its own transitions.
/// Transition done flags mark true terminals only; a step-cap ending leaves
/// done false and fills the bootstrap values instead.
EpisodeData collect_episode(Environment& env, const std::vector<AgentBinding>& bindings,
                            uint64_t seed, bool greedy, ExecMode mode = ExecMode::kParallel);

struct TrainSchedule {
  int episodes = 1000;
  int eval_every = 50;    // 0 disables periodic evaluation
  int eval_episodes = 3;  // greedy episodes per evaluation point
  uint64_t seed = 0;
  double target_success_rate = -1.0;  // >0: stop once eval success reaches it
};

struct CurveRow {
  int episode = 0;
  int agent_id = 0;
  std::string phase;  // train | eval
  double episode_return = 0.0;
  int episode_steps = 0;
  int success_flag = 0;
  std::optional<int> makespan;
  std::optional<double> success_rate;  // eval rows: rate over the eval block
};

struct TrainLogRow {
  int episode = 0;
  int agent_id = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_return = 0.0;
};

struct TrainResult {
  std::vector<CurveRow> curves;
  std::vector<TrainLogRow> log;
  double final_eval_success_rate = -1.0;
};

/// Alternates collect_episode with one ppo_update per agent (each agent
/// training its own encoder end-to-end), evaluating greedily every
/// eval_every episodes. Deterministic given schedule.seed.
TrainResult train(const EnvFactory& factory, std::vector<AgentBinding>& bindings,
                  const PPOConfig& ppo, const TrainSchedule& schedule);

}  // namespace jsrl
