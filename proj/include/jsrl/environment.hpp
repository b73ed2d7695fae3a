#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "jsrl/graph.hpp"
#include "jsrl/message_passing.hpp"

namespace jsrl {

enum class DispatchRule { kFifo, kSpt, kRandom };

DispatchRule dispatch_rule_from_string(std::string_view name);
std::string_view to_string(DispatchRule rule);

struct StepResult {
  std::vector<double> rewards;  // one per agent
  bool done = false;
};

/// Synchronous multi-agent scheduling environment. Every agent submits one
/// action index each tick; agents never read each other's state directly,
/// only the shared graph observation.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int agent_count() const = 0;
  virtual int action_width(int agent_id) const = 0;
  virtual ReadoutSpec observation_readout(int agent_id) const = 0;

  virtual void reset(uint64_t seed) = 0;
  /// Graph view of the current state; stable until the next step/reset.
  virtual std::shared_ptr<const Graph> graph() const = 0;
  virtual std::vector<uint8_t> legal_mask(int agent_id) const = 0;
  /// joint_action[i] is agent i's choice; throws if an action is illegal
  /// under the current masks.
  virtual StepResult step(const std::vector<int>& joint_action) = 0;

  virtual bool done() const = 0;
  virtual int steps() const = 0;
  /// True when the scheduling goal was reached (not a step-cap timeout).
  virtual bool success() const = 0;
  /// Tick at which the goal was reached, once success() holds.
  virtual std::optional<int> makespan() const = 0;

  /// Action a dispatching rule would take for one agent in the current state.
  virtual int dispatch_action(int agent_id, DispatchRule rule, std::mt19937_64& rng) const;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

}  // namespace jsrl
