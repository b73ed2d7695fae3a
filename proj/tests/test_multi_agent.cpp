#include <doctest.h>

#include <memory>

#include "jsrl/env_rmc.hpp"
#include "jsrl/multi_agent.hpp"
#include "jsrl/rng.hpp"

using namespace jsrl;

namespace {

EncoderConfig small_encoder() { return {2, 8, 4, Activation::kTanh}; }
HeadConfig small_head() { return {16, Activation::kTanh}; }

RmcConfig targets(int a, int b) {
  RmcConfig cfg;
  cfg.target_wp1 = a;
  cfg.target_wp2 = b;
  return cfg;
}

}  // namespace

TEST_CASE("make_bindings sizes every agent from the environment") {
  RmcEnv env(targets(2, 2));
  auto bindings = make_bindings(env, small_encoder(), small_head(), 3);
  REQUIRE(bindings.size() == 2);
  for (const AgentBinding& b : bindings) {
    CHECK(b.readout == ReadoutSpec::flatten());
    CHECK(b.encoder.rounds == 2);
    CHECK(b.nets.policy.input_dim() == 9 * 4);
    CHECK(b.nets.policy.output_dim() == kRmcActionWidth);
    CHECK(b.nets.value.output_dim() == 1);
  }
  // independent learners: different parameters per agent
  CHECK(bindings[0].nets.policy.weights[0] != bindings[1].nets.policy.weights[0]);
  CHECK(bindings[0].encoder.message_net.weights[0] != bindings[1].encoder.message_net.weights[0]);
}

TEST_CASE("collect_episode is deterministic per seed") {
  RmcEnv env(targets(2, 1));
  auto bindings = make_bindings(env, small_encoder(), small_head(), 3);

  EpisodeData a = collect_episode(env, bindings, 7, false);
  EpisodeData b = collect_episode(env, bindings, 7, false);
  CHECK(a.summary.steps == b.summary.steps);
  CHECK(a.summary.returns == b.summary.returns);
  REQUIRE(a.batches[0].steps.size() == b.batches[0].steps.size());
  for (size_t i = 0; i < a.batches[0].steps.size(); ++i) {
    CHECK(a.batches[0].steps[i].action == b.batches[0].steps[i].action);
    CHECK(a.batches[0].steps[i].log_prob == b.batches[0].steps[i].log_prob);
    CHECK(a.batches[0].steps[i].reward == b.batches[0].steps[i].reward);
  }
}

TEST_CASE("step-cap endings bootstrap, real terminals do not") {
  RmcConfig cfg = targets(5, 5);
  cfg.max_steps = 3;
  RmcEnv capped(cfg);
  auto bindings = make_bindings(capped, small_encoder(), small_head(), 3);
  EpisodeData truncated = collect_episode(capped, bindings, 1, false);
  CHECK(!truncated.summary.success);
  CHECK(truncated.summary.steps == 3);
  for (const TrajectoryBatch& batch : truncated.batches) {
    for (const Transition& t : batch.steps) CHECK(!t.done);
    CHECK(batch.bootstrap_value != 0.0);  // the value head of a random init
  }

  RmcEnv quick(targets(1, 0));
  auto qb = make_bindings(quick, small_encoder(), small_head(), 3);
  // drive until one sampled episode actually reaches the goal
  for (uint64_t seed = 0; seed < 64; ++seed) {
    EpisodeData done = collect_episode(quick, qb, seed, false);
    if (!done.summary.success) continue;
    for (const TrajectoryBatch& batch : done.batches) {
      CHECK(batch.bootstrap_value == 0.0);
      REQUIRE(!batch.steps.empty());
      CHECK(batch.steps.back().done);
      for (size_t i = 0; i + 1 < batch.steps.size(); ++i) CHECK(!batch.steps[i].done);
    }
    CHECK(done.summary.makespan == done.summary.steps);
    return;
  }
  FAIL("no sampled episode reached the goal in 64 tries");
}

TEST_CASE("agents share nothing but the environment") {
  RmcEnv env(targets(2, 2));
  auto bindings = make_bindings(env, small_encoder(), small_head(), 3);
  env.reset(0);
  auto graph = env.graph();

  auto agent0_action = [&] {
    NodeEmbeddings emb = encode(*graph, bindings[0].encoder);
    Vec obs = readout(emb, bindings[0].readout);
    return greedy_action(bindings[0].nets, obs, env.legal_mask(0)).action;
  };
  int before = agent0_action();
  for (auto& w : bindings[1].nets.policy.weights)
    for (double& v : w.data) v += 10.0;
  for (auto& w : bindings[1].encoder.message_net.weights)
    for (double& v : w.data) v -= 5.0;
  CHECK(agent0_action() == before);
}

TEST_CASE("train runs episodes, evals and updates without coupling") {
  EnvFactory factory = [] { return std::make_unique<RmcEnv>(targets(1, 1)); };
  auto probe = factory();
  auto bindings = make_bindings(*probe, small_encoder(), small_head(), 5);

  PPOConfig ppo;
  ppo.epochs = 2;
  ppo.minibatch_size = 16;
  TrainSchedule schedule;
  schedule.episodes = 3;
  schedule.eval_every = 2;
  schedule.eval_episodes = 2;
  schedule.seed = 11;

  TrainResult result = train(factory, bindings, ppo, schedule);
  int train_rows = 0, eval_rows = 0;
  for (const CurveRow& r : result.curves) {
    if (r.phase == "train") ++train_rows;
    if (r.phase == "eval") {
      ++eval_rows;
      REQUIRE(r.success_rate.has_value());
    }
  }
  CHECK(train_rows == 3 * 2);
  CHECK(eval_rows == (2 + 2) * 2);  // one mid-run block, one final block
  CHECK(result.log.size() == 3 * 2);
  CHECK(result.final_eval_success_rate >= 0.0);
}

TEST_CASE("zero targets terminate at reset and training skips empty batches") {
  EnvFactory factory = [] { return std::make_unique<RmcEnv>(targets(0, 0)); };
  auto probe = factory();
  auto bindings = make_bindings(*probe, small_encoder(), small_head(), 5);

  PPOConfig ppo;
  TrainSchedule schedule;
  schedule.episodes = 50;
  schedule.eval_every = 5;
  schedule.eval_episodes = 2;
  schedule.seed = 1;
  schedule.target_success_rate = 0.5;  // trivially reached, stops at episode 5

  TrainResult result = train(factory, bindings, ppo, schedule);
  CHECK(result.log.empty());  // nothing to learn from zero-step episodes
  int train_rows = 0;
  for (const CurveRow& r : result.curves)
    if (r.phase == "train") ++train_rows;
  CHECK(train_rows == 5 * 2);
  CHECK(result.final_eval_success_rate == 1.0);
}
