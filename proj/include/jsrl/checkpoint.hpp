#pragma once

#include <string>
#include <vector>

#include "jsrl/dense_net.hpp"
#include "jsrl/multi_agent.hpp"

namespace jsrl {

/// Textual network container. Format (whitespace-separated):
///   densenet 1
///   layers <k> <s0> ... <sk>
///   activation tanh|relu|identity
///   <weights layer 0, row-major> <biases layer 0> <weights layer 1> ...
/// Values are written with enough digits to round-trip doubles exactly.
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

/// One file per agent per component under `dir`:
///   agent<k>_policy.net, agent<k>_value.net, agent<k>_message.net, agent<k>_update.net
void save_bindings(const std::vector<AgentBinding>& bindings, const std::string& dir);

/// Loads parameters into existing bindings; shapes must match and errors name
/// the offending file.
void load_bindings(std::vector<AgentBinding>& bindings, const std::string& dir);

}  // namespace jsrl
