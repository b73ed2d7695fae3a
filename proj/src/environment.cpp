#include "jsrl/environment.hpp"

#include <stdexcept>
#include <string>

#include "jsrl/rng.hpp"

namespace jsrl {

DispatchRule dispatch_rule_from_string(std::string_view name) {
  if (name == "fifo") return DispatchRule::kFifo;
  if (name == "spt") return DispatchRule::kSpt;
  if (name == "random") return DispatchRule::kRandom;
  throw std::invalid_argument("unknown dispatch rule: " + std::string(name));
}

std::string_view to_string(DispatchRule rule) {
  switch (rule) {
    case DispatchRule::kFifo: return "fifo";
    case DispatchRule::kSpt: return "spt";
    case DispatchRule::kRandom: return "random";
  }
  throw std::logic_error("bad dispatch rule enum");
}

int Environment::dispatch_action(int agent_id, DispatchRule rule, std::mt19937_64& rng) const {
  if (rule != DispatchRule::kRandom)
    throw std::logic_error("dispatch rule not implemented for this environment");
  const std::vector<uint8_t> mask = legal_mask(agent_id);
  std::vector<int> legal;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) legal.push_back(static_cast<int>(i));
  if (legal.empty()) throw std::runtime_error("dispatch_action: no legal action");
  return legal[bounded_int(rng, static_cast<int>(legal.size()))];
}

}  // namespace jsrl
