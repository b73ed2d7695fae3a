#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jsrl/env_imm.hpp"
#include "jsrl/environment.hpp"

namespace jsrl {

struct EpisodeRow {
  std::string policy;
  uint64_t seed = 0;
  std::optional<int> makespan;
  int steps = 0;
  bool success = false;
};

/// Runs one full episode with every agent driven by `rule`. State invariants
/// are checked every step; job-shop episodes also get their schedule
/// validated at the end.
EpisodeRow run_dispatch(Environment& env, DispatchRule rule, uint64_t seed);

struct BruteForceResult {
  int makespan = 0;
  Schedule schedule;
};

/// Exact minimum makespan over the non-delay schedules the environment can
/// produce: depth-first search over the event-driven decision tree, branching
/// on which waiting job an idle machine loads. Restricted to mini instances
/// (<= 3 jobs and <= 3 machines); fails explicitly if nothing finishes within
/// step_cap.
BruteForceResult brute_force_optimal(const ShopInstance& inst, int step_cap);

struct CompareRow {
  std::string policy;
  int runs = 0;
  double mean_makespan = 0.0;  // over successful runs
  int min_makespan = 0;
  int max_makespan = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
};

/// Aggregates rows per policy, sorted by policy name; permutation-invariant
/// over the input order.
std::vector<CompareRow> compare(std::span<const EpisodeRow> rows);

}  // namespace jsrl
