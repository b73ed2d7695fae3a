#include "jsrl/env_rmc.hpp"

#include <stdexcept>
#include <string>

namespace jsrl {

namespace {

bool is_machine_station(int node) { return node >= kRmcM1 && node <= kRmcM3; }

void validate_config(const RmcConfig& cfg) {
  if (cfg.target_wp1 < 0 || cfg.target_wp2 < 0)
    throw std::invalid_argument("RmcConfig: targets must be non-negative");
  if (cfg.max_steps < 1) throw std::invalid_argument("RmcConfig: max_steps must be >= 1");
  if (cfg.processing_ticks < 1)
    throw std::invalid_argument("RmcConfig: processing_ticks must be >= 1");
  if (cfg.move_cap_per_tick < 0)
    throw std::invalid_argument("RmcConfig: move_cap_per_tick must be >= 0");
}

}  // namespace

RmcEnv::RmcEnv(RmcConfig cfg) : cfg_(cfg) {
  validate_config(cfg_);
  reset(0);
}

int RmcEnv::action_width(int agent_id) const {
  if (agent_id < 0 || agent_id >= 2) throw std::out_of_range("RmcEnv: bad agent id");
  return kRmcActionWidth;
}

ReadoutSpec RmcEnv::observation_readout(int agent_id) const {
  if (agent_id < 0 || agent_id >= 2) throw std::out_of_range("RmcEnv: bad agent id");
  return ReadoutSpec::flatten();
}

void RmcEnv::reset(uint64_t /*seed*/) {
  state_ = RmcState{};
  state_.counts[kRmcIB1][0] = cfg_.target_wp1;
  state_.counts[kRmcIB2][1] = cfg_.target_wp2;
  done_ = false;
  success_ = false;
  makespan_ = -1;
  refresh_flags();  // zero targets are already met at reset
  graph_cache_.reset();
}

void RmcEnv::set_state(const RmcState& s) {
  state_ = s;
  refresh_flags();
  graph_cache_.reset();
}

void RmcEnv::refresh_flags() {
  success_ = state_.counts[kRmcOB][0] >= cfg_.target_wp1 &&
             state_.counts[kRmcOB][1] >= cfg_.target_wp2;
  if (success_ && makespan_ < 0) makespan_ = state_.step;
  done_ = success_ || state_.step >= cfg_.max_steps;
}

Graph RmcEnv::to_graph(const RmcState& state) {
  Mat feats(kRmcNodeCount, 4);
  for (int n = 0; n < kRmcNodeCount; ++n) {
    feats(n, 0) = state.counts[n][0];
    feats(n, 1) = state.counts[n][1];
    const bool machine_role = n <= kRmcM3;  // input buffers share the machine role flag
    feats(n, 2) = machine_role ? 1.0 : 0.0;
    feats(n, 3) = machine_role ? 0.0 : 1.0;
  }
  std::vector<Edge> edges;
  Mat attrs(2 * kRmcRouteEdges, 2);
  for (int a = 0; a < 2; ++a)
    for (int k = 0; k < kRmcRouteEdges; ++k) {
      edges.push_back({kRmcRoutes[a][k], kRmcRoutes[a][k + 1]});
      attrs(static_cast<int>(edges.size()) - 1, a) = 1.0;
    }
  return Graph(std::move(feats), std::move(edges), std::move(attrs));
}

std::shared_ptr<const Graph> RmcEnv::graph() const {
  if (!graph_cache_) graph_cache_ = std::make_shared<const Graph>(to_graph(state_));
  return graph_cache_;
}

// Mask-level test: the sender holds a piece of the agent's type and a
// machine receiver is empty. Machine readiness is checked only at execution,
// after this tick's timer decrement.
bool RmcEnv::edge_activatable(int agent, int k) const {
  const int s = kRmcRoutes[agent][k];
  const int r = kRmcRoutes[agent][k + 1];
  if (is_machine_station(s)) {
    if (state_.machines[s - kRmcM1].piece != agent) return false;
  } else if (state_.counts[s][agent] <= 0) {
    return false;
  }
  if (is_machine_station(r) && state_.machines[r - kRmcM1].piece != -1) return false;
  return true;
}

bool RmcEnv::edge_executable(int agent, int k) const {
  if (!edge_activatable(agent, k)) return false;
  const int s = kRmcRoutes[agent][k];
  if (is_machine_station(s) && state_.machines[s - kRmcM1].remaining > 0) return false;
  return true;
}

int RmcEnv::movable_bits(int agent) const {
  int bits = 0;
  for (int k = 0; k < kRmcRouteEdges; ++k)
    if (edge_activatable(agent, k)) bits |= 1 << k;
  return bits;
}

std::vector<uint8_t> RmcEnv::legal_mask(int agent_id) const {
  if (agent_id < 0 || agent_id >= 2) throw std::out_of_range("RmcEnv: bad agent id");
  const int movable = movable_bits(agent_id);
  std::vector<uint8_t> mask(kRmcActionWidth, 0);
  // An action is legal iff it only activates currently executable edges.
  for (int a = 0; a < kRmcActionWidth; ++a) mask[a] = (a & ~movable) == 0 ? 1 : 0;
  return mask;
}

StepResult RmcEnv::step(const std::vector<int>& joint_action) {
  if (done_) throw std::logic_error("RmcEnv::step: episode already finished");
  if (joint_action.size() != 2)
    throw std::invalid_argument("RmcEnv::step: expected 2 actions, got " +
                                std::to_string(joint_action.size()));
  for (int a = 0; a < 2; ++a) {
    const int act = joint_action[a];
    if (act < 0 || act >= kRmcActionWidth)
      throw std::invalid_argument("RmcEnv::step: agent " + std::to_string(a) +
                                  " action out of range: " + std::to_string(act));
    if ((act & ~movable_bits(a)) != 0)
      throw std::invalid_argument("RmcEnv::step: agent " + std::to_string(a) +
                                  " chose illegal action " + std::to_string(act));
  }

  state_.step += 1;

  // Timers run first; a piece whose timer reaches 0 is ready and may leave
  // its machine later in this same tick.
  for (RmcMachineState& m : state_.machines)
    if (m.piece != -1 && m.remaining > 0) m.remaining -= 1;

  std::array<int, 2> delivered{};
  int moves = 0;

  // Activated edges execute in ascending edge id (all of agent 0's route,
  // then agent 1's). Edges that are impossible right now — piece not ready,
  // or an earlier move in the same tick took the machine — skip silently.
  for (int e = 0; e < 2 * kRmcRouteEdges; ++e) {
    const int agent = e / kRmcRouteEdges;
    const int k = e % kRmcRouteEdges;
    if ((joint_action[agent] >> k & 1) == 0) continue;
    if (cfg_.move_cap_per_tick > 0 && moves >= cfg_.move_cap_per_tick) break;
    if (!edge_executable(agent, k)) continue;
    const int s = kRmcRoutes[agent][k];
    const int r = kRmcRoutes[agent][k + 1];
    state_.counts[s][agent] -= 1;
    state_.counts[r][agent] += 1;
    if (is_machine_station(s)) state_.machines[s - kRmcM1] = {};
    if (is_machine_station(r)) state_.machines[r - kRmcM1] = {agent, cfg_.processing_ticks};
    if (r == kRmcOB) delivered[agent] += 1;
    moves += 1;
  }

  StepResult result;
  result.rewards.assign(2, 0.0);
  const std::array<int, 2> targets{cfg_.target_wp1, cfg_.target_wp2};
  for (int a = 0; a < 2; ++a) {
    result.rewards[a] = cfg_.delivery_bonus * delivered[a] - cfg_.step_penalty;
    if (!state_.bonus_paid[a] && state_.counts[kRmcOB][a] >= targets[a]) {
      result.rewards[a] += cfg_.terminal_bonus;
      state_.bonus_paid[a] = 1;
    }
  }

  refresh_flags();
  result.done = done_;
  graph_cache_.reset();
  return result;
}

std::optional<int> RmcEnv::makespan() const {
  if (makespan_ < 0) return std::nullopt;
  return makespan_;
}

int RmcEnv::dispatch_action(int agent_id, DispatchRule rule, std::mt19937_64& rng) const {
  if (agent_id < 0 || agent_id >= 2) throw std::out_of_range("RmcEnv: bad agent id");
  // There are no per-piece queues to order by age or processing time here:
  // pieces of one type are interchangeable, so fifo and spt both degenerate
  // to "keep everything moving".
  if (rule == DispatchRule::kFifo || rule == DispatchRule::kSpt) return movable_bits(agent_id);
  return Environment::dispatch_action(agent_id, rule, rng);
}

void RmcEnv::check_invariants() const {
  const std::array<int, 2> totals{cfg_.target_wp1, cfg_.target_wp2};
  for (int a = 0; a < 2; ++a) {
    int sum = 0;
    for (int n = 0; n < kRmcNodeCount; ++n) {
      if (state_.counts[n][a] < 0) throw std::runtime_error("RmcEnv: negative count");
      sum += state_.counts[n][a];
    }
    if (sum != totals[a])
      throw std::runtime_error("RmcEnv: piece conservation broken for type " + std::to_string(a));
  }
  if (state_.counts[kRmcIB1][1] != 0 || state_.counts[kRmcIB2][0] != 0)
    throw std::runtime_error("RmcEnv: input buffer holds foreign workpiece type");
  for (int m = 0; m < 3; ++m) {
    const RmcMachineState& ms = state_.machines[m];
    const int node = kRmcM1 + m;
    if (ms.piece < -1 || ms.piece > 1) throw std::runtime_error("RmcEnv: bad machine piece");
    if (ms.remaining < 0 || ms.remaining > cfg_.processing_ticks)
      throw std::runtime_error("RmcEnv: bad machine timer");
    if (ms.piece == -1) {
      if (ms.remaining != 0) throw std::runtime_error("RmcEnv: timer on empty machine");
      if (state_.counts[node][0] != 0 || state_.counts[node][1] != 0)
        throw std::runtime_error("RmcEnv: pieces recorded on empty machine");
    } else {
      if (state_.counts[node][ms.piece] != 1 || state_.counts[node][1 - ms.piece] != 0)
        throw std::runtime_error("RmcEnv: machine counts inconsistent");
    }
  }
}

}  // namespace jsrl
