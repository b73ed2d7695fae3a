#include "jsrl/multi_agent.hpp"

#include <numeric>
#include <stdexcept>

#include "jsrl/rng.hpp"

namespace jsrl {

std::vector<AgentBinding> make_bindings(const Environment& env, const EncoderConfig& enc_cfg,
                                        const HeadConfig& head_cfg, uint64_t seed) {
  auto graph = env.graph();
  const int node_dim = graph->node_features().cols;
  const int edge_dim = graph->edge_attrs().cols;
  std::vector<AgentBinding> out;
  out.reserve(static_cast<size_t>(env.agent_count()));
  for (int i = 0; i < env.agent_count(); ++i) {
    AgentBinding b;
    b.agent_id = i;
    b.readout = env.observation_readout(i);
    b.encoder = init_encoder(node_dim, edge_dim, enc_cfg.message_dim, enc_cfg.hidden,
                             enc_cfg.rounds, enc_cfg.activation, derive_seed(seed, 0x40, i));
    const int obs_dim = readout_dim(b.readout, graph->num_nodes(), b.encoder.node_dim());
    b.nets = init_agent_nets(obs_dim, env.action_width(i), head_cfg.hidden, head_cfg.activation,
                             derive_seed(seed, 0x41, i));
    b.policy_opt = make_adam_state(b.nets.policy);
    b.value_opt = make_adam_state(b.nets.value);
    b.message_opt = make_adam_state(b.encoder.message_net);
    b.update_opt = make_adam_state(b.encoder.update_net);
    out.push_back(std::move(b));
  }
  return out;
}

EpisodeData collect_episode(Environment& env, const std::vector<AgentBinding>& bindings,
                            uint64_t seed, bool greedy, ExecMode mode) {
  const int n = env.agent_count();
  if (static_cast<int>(bindings.size()) != n)
    throw std::invalid_argument("collect_episode: binding count does not match agent count");

  env.reset(derive_seed(seed, 0));
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) rngs.push_back(make_rng(seed, 1 + static_cast<uint64_t>(i)));

  EpisodeData data;
  data.batches.resize(static_cast<size_t>(n));
  data.summary.returns.assign(static_cast<size_t>(n), 0.0);

  while (!env.done()) {
    auto graph = env.graph();
    std::vector<int> actions(static_cast<size_t>(n));
    std::vector<Transition> pending(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const AgentBinding& b = bindings[static_cast<size_t>(i)];
      NodeEmbeddings emb = encode(*graph, b.encoder, mode);
      Vec obs = readout(emb, b.readout);
      std::vector<uint8_t> mask = env.legal_mask(i);
      ActionSample s = greedy ? greedy_action(b.nets, obs, mask)
                              : sample_action(b.nets, obs, mask, rngs[static_cast<size_t>(i)]);
      actions[static_cast<size_t>(i)] = s.action;
      Transition& t = pending[static_cast<size_t>(i)];
      t.graph = graph;
      t.observation = std::move(obs);
      t.mask = std::move(mask);
      t.action = s.action;
      t.log_prob = s.log_prob;
      t.value = s.value;
    }
    StepResult result = env.step(actions);
    for (int i = 0; i < n; ++i) {
      Transition& t = pending[static_cast<size_t>(i)];
      t.reward = result.rewards[static_cast<size_t>(i)];
      // done marks true terminals; hitting the step cap is a truncation and
      // gets bootstrapped below instead.
      t.done = result.done && env.success();
      data.summary.returns[static_cast<size_t>(i)] += t.reward;
      data.batches[static_cast<size_t>(i)].steps.push_back(std::move(t));
    }
  }

  data.summary.steps = env.steps();
  data.summary.success = env.success();
  data.summary.makespan = env.makespan();

  if (!env.success()) {
    auto graph = env.graph();
    for (int i = 0; i < n; ++i) {
      const AgentBinding& b = bindings[static_cast<size_t>(i)];
      NodeEmbeddings emb = encode(*graph, b.encoder, mode);
      Vec obs = readout(emb, b.readout);
      ForwardCache vc;
      Vec v = forward(b.nets.value, obs, &vc);
      data.batches[static_cast<size_t>(i)].bootstrap_value = v[0];
    }
  }
  return data;
}

TrainResult train(const EnvFactory& factory, std::vector<AgentBinding>& bindings,
                  const PPOConfig& ppo, const TrainSchedule& schedule) {
  if (schedule.episodes < 0) throw std::invalid_argument("train: negative episode count");
  auto env = factory();
  const int n = env->agent_count();
  if (static_cast<int>(bindings.size()) != n)
    throw std::invalid_argument("train: binding count does not match agent count");

  TrainResult result;

  auto run_eval = [&](int episode) {
    double successes = 0.0;
    std::vector<CurveRow> block;
    for (int e = 0; e < schedule.eval_episodes; ++e) {
      uint64_t eval_seed = derive_seed(schedule.seed, 0x30,
                                       (static_cast<uint64_t>(episode) << 20) |
                                           static_cast<uint64_t>(e));
      EpisodeData data = collect_episode(*env, bindings, eval_seed, /*greedy=*/true, ppo.exec);
      successes += data.summary.success ? 1.0 : 0.0;
      for (int i = 0; i < n; ++i) {
        CurveRow row;
        row.episode = episode;
        row.agent_id = i;
        row.phase = "eval";
        row.episode_return = data.summary.returns[static_cast<size_t>(i)];
        row.episode_steps = data.summary.steps;
        row.success_flag = data.summary.success ? 1 : 0;
        row.makespan = data.summary.makespan;
        block.push_back(std::move(row));
      }
    }
    double rate = schedule.eval_episodes > 0 ? successes / schedule.eval_episodes : 0.0;
    for (auto& row : block) row.success_rate = rate;
    result.curves.insert(result.curves.end(), block.begin(), block.end());
    return rate;
  };

  int completed = 0;
  int last_eval_episode = -1;
  for (int ep = 0; ep < schedule.episodes; ++ep) {
    EpisodeData data = collect_episode(*env, bindings, derive_seed(schedule.seed, 0x10, ep),
                                       /*greedy=*/false, ppo.exec);
    for (int i = 0; i < n; ++i) {
      CurveRow row;
      row.episode = ep;
      row.agent_id = i;
      row.phase = "train";
      row.episode_return = data.summary.returns[static_cast<size_t>(i)];
      row.episode_steps = data.summary.steps;
      row.success_flag = data.summary.success ? 1 : 0;
      row.makespan = data.summary.makespan;
      result.curves.push_back(std::move(row));
    }
    for (int i = 0; i < n; ++i) {
      TrajectoryBatch& batch = data.batches[static_cast<size_t>(i)];
      if (batch.steps.empty()) continue;  // terminal at reset: nothing to learn from
      prepare_advantages(batch, ppo.gamma, ppo.lambda_gae);
      AgentBinding& b = bindings[static_cast<size_t>(i)];
      EncoderTraining enc{&b.encoder, &b.message_opt, &b.update_opt, b.readout};
      auto shuffle_rng = make_rng(schedule.seed, 0x20 + static_cast<uint64_t>(i),
                                  static_cast<uint64_t>(ep));
      UpdateStats stats =
          ppo_update(b.nets, b.policy_opt, b.value_opt, batch, ppo, shuffle_rng, &enc);
      TrainLogRow log;
      log.episode = ep;
      log.agent_id = i;
      log.policy_loss = stats.policy_loss;
      log.value_loss = stats.value_loss;
      log.entropy = stats.entropy;
      log.clip_fraction = stats.clip_fraction;
      log.mean_return = data.summary.returns[static_cast<size_t>(i)];
      result.log.push_back(log);
    }
    completed = ep + 1;
    if (schedule.eval_every > 0 && schedule.eval_episodes > 0 &&
        (ep + 1) % schedule.eval_every == 0) {
      double rate = run_eval(ep);
      result.final_eval_success_rate = rate;
      last_eval_episode = ep;
      if (schedule.target_success_rate > 0 && rate >= schedule.target_success_rate) break;
    }
  }
  // make sure the run ends with a fresh greedy measurement
  if (completed > 0 && schedule.eval_episodes > 0 && last_eval_episode != completed - 1)
    result.final_eval_success_rate = run_eval(completed);
  return result;
}

}  // namespace jsrl
