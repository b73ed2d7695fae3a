#include <CLI11.hpp>

#include "jsrl/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"job-shop scheduling RL toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_dir, rule;
  uint64_t seed = 0;
  int episodes = 0, seeds = 10;
  bool have_out = false, have_seed = false, have_episodes = false;

  auto add_common = [&](CLI::App* cmd, bool need_config) {
    auto* c = cmd->add_option("--config", config_path, "run configuration file");
    if (need_config) c->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)")
        ->each([&](const std::string&) { have_out = true; });
    cmd->add_option("--seed", seed, "root seed (overrides config)")
        ->each([&](const std::string&) { have_seed = true; });
  };

  auto* train = app.add_subcommand("train", "train agents and write curves + checkpoints");
  add_common(train, true);
  train->add_option("--episodes", episodes, "episode count (overrides config)")
      ->each([&](const std::string&) { have_episodes = true; });

  auto* eval = app.add_subcommand("eval", "greedy rollouts of saved checkpoints");
  add_common(eval, true);
  eval->add_option("--checkpoints", checkpoint_dir, "checkpoint directory")->required();
  eval->add_option("--episodes", episodes, "episodes to evaluate")->default_val(10);

  auto* baseline = app.add_subcommand("baseline", "dispatching-rule rollouts across seeds");
  add_common(baseline, true);
  baseline->add_option("--rule", rule, "dispatch rule: fifo, spt or random")->required();
  baseline->add_option("--seeds", seeds, "number of seeds (0..n-1)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--seed", seed, "configuration seed");

  CLI11_PARSE(app, argc, argv);

  jsrl::CliOverrides ov;
  if (have_out) ov.out_dir = out_dir;
  if (have_seed) ov.seed = seed;
  if (have_episodes) ov.episodes = episodes;

  if (train->parsed()) return jsrl::cmd_train(config_path, ov);
  if (eval->parsed()) return jsrl::cmd_eval(checkpoint_dir, config_path, episodes, ov);
  if (baseline->parsed()) return jsrl::cmd_baseline(config_path, rule, seeds, ov);
  return jsrl::cmd_gradcheck(seed);
}
