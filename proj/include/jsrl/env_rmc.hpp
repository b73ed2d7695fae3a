#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "jsrl/environment.hpp"

namespace jsrl {

/// Two-workpiece robot cell: each workpiece type flows along a fixed route of
/// stations, machines hold one piece at a time, buffers are unbounded.
struct RmcConfig {
  int target_wp1 = 20;  // pieces of each type to deliver (also the initial
  int target_wp2 = 20;  // input buffer stock)
  int max_steps = 500;
  int processing_ticks = 1;   // ticks a piece stays on a machine before ready
  int move_cap_per_tick = 0;  // max executed moves per tick, 0 = unlimited
  double delivery_bonus = 1.0;
  double step_penalty = 0.01;
  double terminal_bonus = 10.0;
};

/// Station ids in graph-node order.
enum RmcNode : int {
  kRmcIB1 = 0,
  kRmcIB2,
  kRmcM1,
  kRmcM2,
  kRmcM3,
  kRmcMB1,
  kRmcMB2,
  kRmcMB3,
  kRmcOB,
  kRmcNodeCount
};

inline constexpr int kRmcRouteEdges = 7;  // stations per route minus one
inline constexpr int kRmcActionWidth = 1 << kRmcRouteEdges;

/// Station sequence per workpiece type. Route edge k of agent a runs from
/// kRmcRoutes[a][k] to kRmcRoutes[a][k+1]; bit k of agent a's action
/// activates that edge. Graph edge ids are 7*a + k.
inline constexpr std::array<std::array<int, 8>, 2> kRmcRoutes = {{
    {kRmcIB1, kRmcM1, kRmcMB1, kRmcM2, kRmcMB2, kRmcM3, kRmcMB3, kRmcOB},
    {kRmcIB2, kRmcM2, kRmcMB2, kRmcM3, kRmcMB3, kRmcM1, kRmcMB1, kRmcOB},
}};

struct RmcMachineState {
  int piece = -1;     // workpiece type on the machine, -1 if empty
  int remaining = 0;  // ticks until the piece is ready
  bool operator==(const RmcMachineState&) const = default;
};

struct RmcState {
  std::array<std::array<int, 2>, kRmcNodeCount> counts{};  // [node][type]
  std::array<RmcMachineState, 3> machines{};               // M1..M3
  int step = 0;
  std::array<uint8_t, 2> bonus_paid{};
  bool operator==(const RmcState&) const = default;
};

class RmcEnv final : public Environment {
 public:
  explicit RmcEnv(RmcConfig cfg);

  int agent_count() const override { return 2; }
  int action_width(int agent_id) const override;
  ReadoutSpec observation_readout(int agent_id) const override;

  void reset(uint64_t seed) override;  // dynamics are deterministic; seed unused
  std::shared_ptr<const Graph> graph() const override;
  std::vector<uint8_t> legal_mask(int agent_id) const override;
  StepResult step(const std::vector<int>& joint_action) override;

  bool done() const override { return done_; }
  int steps() const override { return state_.step; }
  bool success() const override { return success_; }
  std::optional<int> makespan() const override;

  int dispatch_action(int agent_id, DispatchRule rule, std::mt19937_64& rng) const override;

  const RmcConfig& config() const { return cfg_; }
  const RmcState& state() const { return state_; }
  void set_state(const RmcState& s);  // test/search hook; recomputes episode flags

  /// Bit k set iff route edge k may be activated by `agent` right now.
  int movable_bits(int agent) const;

  /// Node features: [#wp1, #wp2, machine-role flag, buffer-role flag].
  static Graph to_graph(const RmcState& state);

  /// Piece conservation and machine/count consistency; throws on violation.
  void check_invariants() const;

 private:
  bool edge_activatable(int agent, int k) const;
  bool edge_executable(int agent, int k) const;
  void refresh_flags();

  RmcConfig cfg_;
  RmcState state_;
  bool done_ = false;
  bool success_ = false;
  int makespan_ = -1;
  mutable std::shared_ptr<const Graph> graph_cache_;
};

}  // namespace jsrl
