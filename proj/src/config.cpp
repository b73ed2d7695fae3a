#include "jsrl/config.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

namespace jsrl {
namespace {

using Section = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::map<std::string, Section> parse_sections(const std::string& text, const std::string& origin) {
  std::map<std::string, Section> sections;
  std::istringstream is(text);
  std::string line, current;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) fail("empty section name");
      sections[current];  // a section may legitimately stay empty
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (current.empty()) fail("key outside any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (!sections[current].emplace(key, value).second) fail("duplicate key '" + key + "'");
  }
  return sections;
}

/// Pulls typed values out of one section, tracking which keys were consumed so
/// leftovers can be reported as unknown.
class SectionReader {
 public:
  SectionReader(const std::string& origin, const std::string& name, const Section* section)
      : origin_(origin), name_(name), section_(section) {}

  bool has(const std::string& key) const { return section_ && section_->count(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    consumed_.insert(key);
    const std::string& raw = section_->at(key);
    std::istringstream is(raw);
    T value;
    if (!(is >> value) || !(is >> std::ws).eof())
      throw std::runtime_error(origin_ + ": [" + name_ + "] " + key + ": cannot parse '" + raw +
                               "'");
    out = value;
  }

  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    consumed_.insert(key);
    out = section_->at(key);
  }

  void get(const std::string& key, Activation& out) {
    std::string tag{to_string(out)};
    get(key, tag);
    out = activation_from_string(tag);
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [key, value] : *section_)
      if (!consumed_.count(key))
        throw std::runtime_error(origin_ + ": [" + name_ + "] unknown key '" + key + "'");
  }

 private:
  std::string origin_, name_;
  const Section* section_;
  std::set<std::string> consumed_;
};

const char* kSectionNames[] = {"run", "rmc", "imm", "encoder", "head", "ppo"};

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  auto sections = parse_sections(text, origin);
  for (const auto& [name, unused] : sections) {
    bool known = false;
    for (const char* k : kSectionNames) known |= name == k;
    if (!known) throw std::runtime_error(origin + ": unknown section [" + name + "]");
  }
  auto section = [&](const char* name) -> const Section* {
    auto it = sections.find(name);
    return it == sections.end() ? nullptr : &it->second;
  };

  RunConfig cfg;
  SectionReader run(origin, "run", section("run"));
  run.get("environment", cfg.environment);
  if (cfg.environment != "rmc" && cfg.environment != "imm")
    throw std::runtime_error(origin + ": environment must be rmc or imm, got '" +
                             cfg.environment + "'");
  if (!run.has("seed")) throw std::runtime_error(origin + ": [run] seed is mandatory");
  run.get("seed", cfg.schedule.seed);
  run.get("episodes", cfg.schedule.episodes);
  run.get("eval_every", cfg.schedule.eval_every);
  run.get("eval_episodes", cfg.schedule.eval_episodes);
  run.get("target_success_rate", cfg.schedule.target_success_rate);
  run.get("out_dir", cfg.out_dir);
  run.finish();

  SectionReader rmc(origin, "rmc", section("rmc"));
  rmc.get("target_wp1", cfg.rmc.target_wp1);
  rmc.get("target_wp2", cfg.rmc.target_wp2);
  rmc.get("max_steps", cfg.rmc.max_steps);
  rmc.get("processing_ticks", cfg.rmc.processing_ticks);
  rmc.get("move_cap_per_tick", cfg.rmc.move_cap_per_tick);
  rmc.get("delivery_bonus", cfg.rmc.delivery_bonus);
  rmc.get("step_penalty", cfg.rmc.step_penalty);
  rmc.get("terminal_bonus", cfg.rmc.terminal_bonus);
  rmc.finish();

  SectionReader imm(origin, "imm", section("imm"));
  imm.get("instance_path", cfg.instance_path);
  imm.get("max_steps", cfg.imm.max_steps);
  imm.get("completion_bonus", cfg.imm.completion_bonus);
  imm.get("step_penalty", cfg.imm.step_penalty);
  imm.get("terminal_scale", cfg.imm.terminal_scale);
  imm.finish();
  if (cfg.environment == "imm" && cfg.instance_path.empty())
    throw std::runtime_error(origin + ": [imm] instance_path is required for environment=imm");

  // Two propagation rounds suffice for the job-shop graph's buffer→machine
  // neighborhoods; the cell graph's longer routes default deeper.
  cfg.encoder.rounds = cfg.environment == "imm" ? 2 : 3;
  SectionReader enc(origin, "encoder", section("encoder"));
  enc.get("rounds", cfg.encoder.rounds);
  enc.get("hidden", cfg.encoder.hidden);
  enc.get("message_dim", cfg.encoder.message_dim);
  enc.get("activation", cfg.encoder.activation);
  enc.finish();

  SectionReader head(origin, "head", section("head"));
  head.get("hidden", cfg.head.hidden);
  head.get("activation", cfg.head.activation);
  head.finish();

  SectionReader ppo(origin, "ppo", section("ppo"));
  ppo.get("gamma", cfg.ppo.gamma);
  ppo.get("lambda_gae", cfg.ppo.lambda_gae);
  ppo.get("clip_eps", cfg.ppo.clip_eps);
  ppo.get("epochs", cfg.ppo.epochs);
  ppo.get("minibatch_size", cfg.ppo.minibatch_size);
  ppo.get("value_coef", cfg.ppo.value_coef);
  ppo.get("entropy_coef", cfg.ppo.entropy_coef);
  ppo.get("lr", cfg.ppo.lr);
  ppo.get("max_grad_norm", cfg.ppo.max_grad_norm);
  if (ppo.has("update_mode")) {
    std::string tag;
    ppo.get("update_mode", tag);
    cfg.ppo.update_mode = update_mode_from_string(tag);
  }
  if (ppo.has("exec")) {
    std::string tag;
    ppo.get("exec", tag);
    if (tag == "serial")
      cfg.ppo.exec = ExecMode::kSerial;
    else if (tag == "parallel")
      cfg.ppo.exec = ExecMode::kParallel;
    else
      throw std::runtime_error(origin + ": [ppo] exec must be serial or parallel, got '" + tag +
                               "'");
  }
  ppo.finish();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open config");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str(), path);
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\n";
  os << "environment = " << cfg.environment << '\n';
  os << "seed = " << cfg.schedule.seed << '\n';
  os << "episodes = " << cfg.schedule.episodes << '\n';
  os << "eval_every = " << cfg.schedule.eval_every << '\n';
  os << "eval_episodes = " << cfg.schedule.eval_episodes << '\n';
  os << "target_success_rate = " << num(cfg.schedule.target_success_rate) << '\n';
  os << "out_dir = " << cfg.out_dir << '\n';
  os << "\n[rmc]\n";
  os << "target_wp1 = " << cfg.rmc.target_wp1 << '\n';
  os << "target_wp2 = " << cfg.rmc.target_wp2 << '\n';
  os << "max_steps = " << cfg.rmc.max_steps << '\n';
  os << "processing_ticks = " << cfg.rmc.processing_ticks << '\n';
  os << "move_cap_per_tick = " << cfg.rmc.move_cap_per_tick << '\n';
  os << "delivery_bonus = " << num(cfg.rmc.delivery_bonus) << '\n';
  os << "step_penalty = " << num(cfg.rmc.step_penalty) << '\n';
  os << "terminal_bonus = " << num(cfg.rmc.terminal_bonus) << '\n';
  os << "\n[imm]\n";
  if (!cfg.instance_path.empty()) os << "instance_path = " << cfg.instance_path << '\n';
  os << "max_steps = " << cfg.imm.max_steps << '\n';
  os << "completion_bonus = " << num(cfg.imm.completion_bonus) << '\n';
  os << "step_penalty = " << num(cfg.imm.step_penalty) << '\n';
  os << "terminal_scale = " << num(cfg.imm.terminal_scale) << '\n';
  os << "\n[encoder]\n";
  os << "rounds = " << cfg.encoder.rounds << '\n';
  os << "hidden = " << cfg.encoder.hidden << '\n';
  os << "message_dim = " << cfg.encoder.message_dim << '\n';
  os << "activation = " << to_string(cfg.encoder.activation) << '\n';
  os << "\n[head]\n";
  os << "hidden = " << cfg.head.hidden << '\n';
  os << "activation = " << to_string(cfg.head.activation) << '\n';
  os << "\n[ppo]\n";
  os << "gamma = " << num(cfg.ppo.gamma) << '\n';
  os << "lambda_gae = " << num(cfg.ppo.lambda_gae) << '\n';
  os << "clip_eps = " << num(cfg.ppo.clip_eps) << '\n';
  os << "epochs = " << cfg.ppo.epochs << '\n';
  os << "minibatch_size = " << cfg.ppo.minibatch_size << '\n';
  os << "value_coef = " << num(cfg.ppo.value_coef) << '\n';
  os << "entropy_coef = " << num(cfg.ppo.entropy_coef) << '\n';
  os << "lr = " << num(cfg.ppo.lr) << '\n';
  os << "max_grad_norm = " << num(cfg.ppo.max_grad_norm) << '\n';
  os << "update_mode = " << to_string(cfg.ppo.update_mode) << '\n';
  os << "exec = " << (cfg.ppo.exec == ExecMode::kSerial ? "serial" : "parallel") << '\n';
  return os.str();
}

EnvFactory make_env_factory(const RunConfig& cfg) {
  if (cfg.environment == "rmc") {
    RmcConfig rc = cfg.rmc;
    return [rc] { return std::make_unique<RmcEnv>(rc); };
  }
  auto inst = std::make_shared<ShopInstance>(load_instance(cfg.instance_path));
  ImmConfig ic = cfg.imm;
  return [inst, ic] { return std::make_unique<ImmEnv>(*inst, ic); };
}

}  // namespace jsrl
