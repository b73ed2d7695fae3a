#pragma once

#include <map>
#include <string>

#include "jsrl/env_imm.hpp"
#include "jsrl/env_rmc.hpp"
#include "jsrl/multi_agent.hpp"

namespace jsrl {

/// Fully resolved run description. Serializing and re-parsing one of these is
/// the identity, which is what makes run manifests re-runnable.
struct RunConfig {
  std::string environment = "rmc";  // rmc | imm
  std::string out_dir = "out";
  RmcConfig rmc;
  ImmConfig imm;
  std::string instance_path;  // imm only; resolved relative to cwd
  EncoderConfig encoder;
  HeadConfig head;
  PPOConfig ppo;
  TrainSchedule schedule;
};

/// Sectioned key=value text. `#` starts a comment; keys must be unique per
/// section; unknown sections or keys are errors (they are always typos).
/// The seed key is mandatory — runs are never seeded from the clock.
RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

/// Environment factory per the config (loads and validates the IMM instance
/// once, sharing it across produced environments).
EnvFactory make_env_factory(const RunConfig& cfg);

}  // namespace jsrl
