#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace jsrl {

/// Command-line flags that override config values before anything runs. The
/// resolved values are what the run-manifest echoes.
struct CliOverrides {
  std::optional<std::string> out_dir;
  std::optional<uint64_t> seed;
  std::optional<int> episodes;
};

/// Trains per the config; writes run-manifest, curves.csv, training_log.csv
/// and checkpoints/ under the output directory. Returns a process exit code.
int cmd_train(const std::string& config_path, const CliOverrides& overrides);

/// Greedy rollouts of a trained checkpoint; writes run-manifest and report.csv
/// (one aggregated row via compare).
int cmd_eval(const std::string& checkpoint_dir, const std::string& config_path, int episodes,
             const CliOverrides& overrides);

/// Dispatching-rule rollouts across seeds 0..seeds-1; writes run-manifest and
/// report.csv with one row per seed.
int cmd_baseline(const std::string& config_path, const std::string& rule, int seeds,
                 const CliOverrides& overrides);

/// Finite-difference gradient check over random dense-net and encoder
/// configurations; prints max relative errors and returns non-zero on
/// failure.
int cmd_gradcheck(uint64_t seed = 0);

}  // namespace jsrl
