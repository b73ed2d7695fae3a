#include "jsrl/env_imm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "jsrl/rng.hpp"

namespace jsrl {

namespace {

// Node layout: IB, M1..Mm, MB1..MBm, OB.
int ib_node() { return 0; }
int machine_node(int k) { return 1 + k; }
int buffer_node(const ShopInstance& inst, int k) { return 1 + inst.machine_count + k; }
int ob_node(const ShopInstance& inst) { return 1 + 2 * inst.machine_count; }

int ops_of(const ShopInstance& inst, int job) {
  return static_cast<int>(inst.jobs[job].machine_sequence.size());
}

}  // namespace

void validate_shop(const ShopInstance& inst) {
  if (inst.machine_count < 1) throw std::invalid_argument("ShopInstance: need >= 1 machine");
  if (inst.jobs.empty()) throw std::invalid_argument("ShopInstance: need >= 1 job");
  for (size_t j = 0; j < inst.jobs.size(); ++j) {
    const JobSpec& job = inst.jobs[j];
    if (job.job_id != static_cast<int>(j))
      throw std::invalid_argument("ShopInstance: job ids must be 0..J-1 in order");
    if (job.machine_sequence.empty())
      throw std::invalid_argument("ShopInstance: job " + std::to_string(j) + " has no operations");
    if (job.machine_sequence.size() != job.processing_times.size())
      throw std::invalid_argument("ShopInstance: job " + std::to_string(j) +
                                  " sequence/times length mismatch");
    std::vector<char> seen(inst.machine_count, 0);
    for (int m : job.machine_sequence) {
      if (m < 0 || m >= inst.machine_count)
        throw std::invalid_argument("ShopInstance: job " + std::to_string(j) +
                                    " references machine " + std::to_string(m));
      if (seen[m])
        throw std::invalid_argument("ShopInstance: job " + std::to_string(j) +
                                    " visits machine " + std::to_string(m) + " twice");
      seen[m] = 1;
    }
    for (int t : job.processing_times)
      if (t <= 0)
        throw std::invalid_argument("ShopInstance: job " + std::to_string(j) +
                                    " has non-positive processing time");
  }
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& path, int line) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      parse_fail(path, line, "expected integer, got '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

ShopInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_instance: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "missing header");
  ShopInstance inst;
  int jobs_declared = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    int fields = 0;
    while (ss >> tok) {
      const size_t eq = tok.find('=');
      if (eq == std::string::npos) parse_fail(path, 1, "bad header token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      try {
        if (key == "jobs") {
          jobs_declared = std::stoi(val);
        } else if (key == "machines") {
          inst.machine_count = std::stoi(val);
        } else if (key == "seed") {
          inst.seed = std::stoull(val);
        } else {
          parse_fail(path, 1, "unknown header key '" + key + "'");
        }
      } catch (const std::runtime_error&) {
        throw;
      } catch (const std::exception&) {
        parse_fail(path, 1, "bad header value '" + val + "'");
      }
      ++fields;
    }
    if (fields != 3) parse_fail(path, 1, "header needs jobs=, machines=, seed=");
  }
  if (jobs_declared != 30 || inst.machine_count != 4)
    parse_fail(path, 1, "benchmark instance must be 30 jobs x 4 machines");

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string id_part, seq_part, time_part;
    if (!std::getline(ss, id_part, ';') || !std::getline(ss, seq_part, ';') ||
        !std::getline(ss, time_part))
      parse_fail(path, lineno, "expected 'job_id; machines; times'");
    JobSpec job;
    try {
      job.job_id = std::stoi(id_part);
    } catch (const std::exception&) {
      parse_fail(path, lineno, "bad job id '" + id_part + "'");
    }
    if (job.job_id != static_cast<int>(inst.jobs.size()))
      parse_fail(path, lineno, "job ids must run 0..29 in order, got " +
                                   std::to_string(job.job_id));
    const std::vector<int> seq = parse_int_list(seq_part, path, lineno);
    job.processing_times = parse_int_list(time_part, path, lineno);
    if (seq.size() != 4 || job.processing_times.size() != 4)
      parse_fail(path, lineno, "each job needs 4 machines and 4 times");
    std::vector<char> seen(4, 0);
    for (int m : seq) {
      if (m < 1 || m > 4) parse_fail(path, lineno, "machine number out of range 1..4");
      if (seen[m - 1]) parse_fail(path, lineno, "machine " + std::to_string(m) + " listed twice");
      seen[m - 1] = 1;
      job.machine_sequence.push_back(m - 1);
    }
    for (int t : job.processing_times)
      if (t <= 0) parse_fail(path, lineno, "non-positive processing time");
    inst.jobs.push_back(std::move(job));
  }
  if (inst.job_count() != 30)
    throw std::runtime_error(path + ": expected 30 jobs, found " +
                             std::to_string(inst.job_count()));
  validate_shop(inst);
  return inst;
}

void write_instance(const ShopInstance& inst, const std::string& path) {
  validate_shop(inst);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_instance: cannot open " + path);
  out << "jobs=" << inst.job_count() << " machines=" << inst.machine_count
      << " seed=" << inst.seed << "\n";
  for (const JobSpec& job : inst.jobs) {
    out << job.job_id << "; ";
    for (size_t i = 0; i < job.machine_sequence.size(); ++i)
      out << (i ? "," : "") << job.machine_sequence[i] + 1;
    out << "; ";
    for (size_t i = 0; i < job.processing_times.size(); ++i)
      out << (i ? "," : "") << job.processing_times[i];
    out << "\n";
  }
}

ShopInstance generate_instance(int jobs, int machines, int time_lo, int time_hi, uint64_t seed) {
  if (jobs < 1 || machines < 1) throw std::invalid_argument("generate_instance: bad shape");
  if (time_lo < 1 || time_hi < time_lo)
    throw std::invalid_argument("generate_instance: bad time range");
  ShopInstance inst;
  inst.machine_count = machines;
  inst.seed = seed;
  std::mt19937_64 rng = make_rng(seed, 0x1275);
  for (int j = 0; j < jobs; ++j) {
    JobSpec job;
    job.job_id = j;
    job.machine_sequence = shuffled_indices(machines, rng);
    for (int s = 0; s < machines; ++s)
      job.processing_times.push_back(time_lo + bounded_int(rng, time_hi - time_lo + 1));
    inst.jobs.push_back(std::move(job));
  }
  validate_shop(inst);
  return inst;
}

ShopInstance benchmark_instance(uint64_t seed) {
  ShopInstance inst = generate_instance(30, 4, 5, 25, seed);
  inst.jobs[1] = JobSpec{1, {1, 2, 0, 3}, {14, 12, 20, 10}};
  return inst;
}

int lower_bound(const ShopInstance& inst) {
  validate_shop(inst);
  int best = 0;
  std::vector<int> machine_load(inst.machine_count, 0);
  for (const JobSpec& job : inst.jobs) {
    int total = 0;
    for (size_t s = 0; s < job.machine_sequence.size(); ++s) {
      total += job.processing_times[s];
      machine_load[job.machine_sequence[s]] += job.processing_times[s];
    }
    best = std::max(best, total);
  }
  for (int load : machine_load) best = std::max(best, load);
  return best;
}

ScheduleReport validate_schedule(const Schedule& schedule, const ShopInstance& inst) {
  for (const OpRecord& op : schedule) {
    if (op.job < 0 || op.job >= inst.job_count())
      return {ScheduleCheck::kStageOrder, "unknown job " + std::to_string(op.job)};
    if (op.op_index < 0 || op.op_index >= ops_of(inst, op.job))
      return {ScheduleCheck::kStageOrder,
              "job " + std::to_string(op.job) + " has no operation " + std::to_string(op.op_index)};
  }

  // (a) machine exclusivity
  for (int m = 0; m < inst.machine_count; ++m) {
    std::vector<const OpRecord*> ops;
    for (const OpRecord& op : schedule)
      if (op.machine == m) ops.push_back(&op);
    std::sort(ops.begin(), ops.end(),
              [](const OpRecord* a, const OpRecord* b) { return a->start < b->start; });
    for (size_t i = 1; i < ops.size(); ++i)
      if (ops[i]->start <= ops[i - 1]->finish)
        return {ScheduleCheck::kMachineOverlap,
                "machine " + std::to_string(m) + " runs jobs " + std::to_string(ops[i - 1]->job) +
                    " and " + std::to_string(ops[i]->job) + " at step " +
                    std::to_string(ops[i]->start)};
  }

  // (b) stage order: per job the executed ops must be a prefix 0,1,2,... of
  // its sequence on the right machines
  for (int j = 0; j < inst.job_count(); ++j) {
    std::vector<const OpRecord*> ops;
    for (const OpRecord& op : schedule)
      if (op.job == j) ops.push_back(&op);
    std::sort(ops.begin(), ops.end(),
              [](const OpRecord* a, const OpRecord* b) { return a->start < b->start; });
    for (size_t i = 0; i < ops.size(); ++i) {
      if (ops[i]->op_index != static_cast<int>(i))
        return {ScheduleCheck::kStageOrder, "job " + std::to_string(j) + " runs operation " +
                                                std::to_string(ops[i]->op_index) + " in position " +
                                                std::to_string(i)};
      if (ops[i]->machine != inst.jobs[j].machine_sequence[i])
        return {ScheduleCheck::kStageOrder, "job " + std::to_string(j) + " operation " +
                                                std::to_string(i) + " ran on machine " +
                                                std::to_string(ops[i]->machine)};
    }
  }

  // (c) duration
  for (const OpRecord& op : schedule) {
    const int expect = inst.jobs[op.job].processing_times[op.op_index];
    if (op.finish - op.start + 1 != expect)
      return {ScheduleCheck::kDuration, "job " + std::to_string(op.job) + " operation " +
                                            std::to_string(op.op_index) + " took " +
                                            std::to_string(op.finish - op.start + 1) +
                                            " ticks, expected " + std::to_string(expect)};
  }

  // (d) precedence
  for (int j = 0; j < inst.job_count(); ++j) {
    std::vector<const OpRecord*> ops;
    for (const OpRecord& op : schedule)
      if (op.job == j) ops.push_back(&op);
    std::sort(ops.begin(), ops.end(), [](const OpRecord* a, const OpRecord* b) {
      return a->op_index < b->op_index;
    });
    for (size_t i = 1; i < ops.size(); ++i)
      if (ops[i]->start <= ops[i - 1]->finish)
        return {ScheduleCheck::kPrecedence,
                "job " + std::to_string(j) + " operation " + std::to_string(i) +
                    " starts at " + std::to_string(ops[i]->start) + " before " +
                    std::to_string(ops[i - 1]->finish) + " ends"};
  }
  return {};
}

ImmEnv::ImmEnv(ShopInstance instance, ImmConfig cfg)
    : instance_(std::move(instance)), cfg_(cfg) {
  validate_shop(instance_);
  if (cfg_.max_steps < 1) throw std::invalid_argument("ImmConfig: max_steps must be >= 1");
  lower_bound_ = lower_bound(instance_);
  reset(0);
}

int ImmEnv::action_width(int agent_id) const {
  if (agent_id < 0 || agent_id >= agent_count()) throw std::out_of_range("ImmEnv: bad agent id");
  return instance_.job_count() + 1;
}

ReadoutSpec ImmEnv::observation_readout(int agent_id) const {
  if (agent_id < 0 || agent_id >= agent_count()) throw std::out_of_range("ImmEnv: bad agent id");
  return ReadoutSpec::single_node(buffer_node(instance_, agent_id));
}

void ImmEnv::reset(uint64_t /*seed*/) {
  state_ = ImmState{};
  state_.jobs.assign(instance_.job_count(), {});
  state_.machines.assign(instance_.machine_count, {});
  schedule_.clear();
  op_start_.assign(instance_.job_count(), 0);
  makespan_ = -1;
  done_ = false;
  graph_cache_.reset();
}

bool ImmEnv::job_selectable(int machine, int job) const {
  const ImmJobState& js = state_.jobs[job];
  if (js.loc == ImmJobState::Loc::kDone || js.loc == ImmJobState::Loc::kMachine) return false;
  // Jobs still at the input buffer count as waiting at their first machine.
  return instance_.jobs[job].machine_sequence[js.stage] == machine;
}

std::vector<uint8_t> ImmEnv::legal_mask(int agent_id) const {
  if (agent_id < 0 || agent_id >= agent_count()) throw std::out_of_range("ImmEnv: bad agent id");
  const int n = instance_.job_count();
  std::vector<uint8_t> mask(n + 1, 0);
  if (state_.machines[agent_id].job != -1) {
    mask[n] = 1;  // busy: forced no-op
    return mask;
  }
  bool any = false;
  for (int j = 0; j < n; ++j)
    if (job_selectable(agent_id, j)) {
      mask[j] = 1;
      any = true;
    }
  if (!any) mask[n] = 1;  // idle machines must take work when there is any
  return mask;
}

StepResult ImmEnv::step(const std::vector<int>& joint_action) {
  if (done_) throw std::logic_error("ImmEnv::step: episode already finished");
  const int m = instance_.machine_count;
  const int n = instance_.job_count();
  if (static_cast<int>(joint_action.size()) != m)
    throw std::invalid_argument("ImmEnv::step: expected " + std::to_string(m) + " actions");
  for (int k = 0; k < m; ++k) {
    const int act = joint_action[k];
    if (act < 0 || act > n)
      throw std::invalid_argument("ImmEnv::step: agent " + std::to_string(k) +
                                  " action out of range: " + std::to_string(act));
    const std::vector<uint8_t> mask = legal_mask(k);
    if (!mask[act])
      throw std::invalid_argument("ImmEnv::step: agent " + std::to_string(k) +
                                  " chose illegal action " + std::to_string(act));
  }

  state_.step += 1;

  // 1: loads. A job is selectable by exactly one machine, so there is no
  // contention to resolve here.
  for (int k = 0; k < m; ++k) {
    const int act = joint_action[k];
    if (act == n) continue;
    ImmJobState& js = state_.jobs[act];
    js.loc = ImmJobState::Loc::kMachine;
    state_.machines[k] = {act, instance_.jobs[act].processing_times[js.stage]};
    op_start_[act] = state_.step;
  }

  // 2: all busy timers tick, including jobs loaded this step.
  for (ImmMachineState& ms : state_.machines)
    if (ms.job != -1) ms.remaining -= 1;

  // 3: completions leave their machine.
  std::vector<int> completions(m, 0);
  for (int k = 0; k < m; ++k) {
    ImmMachineState& ms = state_.machines[k];
    if (ms.job == -1 || ms.remaining > 0) continue;
    const int j = ms.job;
    ImmJobState& js = state_.jobs[j];
    schedule_.push_back({j, js.stage, k, op_start_[j], state_.step});
    js.stage += 1;
    ms = {};
    completions[k] += 1;
    if (js.stage == ops_of(instance_, j)) {
      js.loc = ImmJobState::Loc::kDone;
      state_.finished += 1;
    } else {
      js.loc = ImmJobState::Loc::kBuffer;
      js.arrival = state_.step;
    }
  }

  // 4: jobs not picked straight off the input buffer drain to their first
  // machine's buffer.
  for (ImmJobState& js : state_.jobs)
    if (js.loc == ImmJobState::Loc::kInputBuffer) js.loc = ImmJobState::Loc::kBuffer;

  StepResult result;
  result.rewards.assign(m, 0.0);
  for (int k = 0; k < m; ++k)
    result.rewards[k] = cfg_.completion_bonus * completions[k] - cfg_.step_penalty;
  if (state_.finished == n) {
    makespan_ = state_.step;
    const double bonus = cfg_.terminal_scale * lower_bound_ / makespan_;
    for (int k = 0; k < m; ++k) result.rewards[k] += bonus;
  }
  done_ = state_.finished == n || state_.step >= cfg_.max_steps;
  result.done = done_;
  graph_cache_.reset();
  return result;
}

std::optional<int> ImmEnv::makespan() const {
  if (makespan_ < 0) return std::nullopt;
  return makespan_;
}

int ImmEnv::dispatch_action(int agent_id, DispatchRule rule, std::mt19937_64& rng) const {
  if (agent_id < 0 || agent_id >= agent_count()) throw std::out_of_range("ImmEnv: bad agent id");
  if (rule == DispatchRule::kRandom) return Environment::dispatch_action(agent_id, rule, rng);
  if (state_.machines[agent_id].job != -1) return no_op_action();
  int best = -1;
  long best_key = 0;
  for (int j = 0; j < instance_.job_count(); ++j) {
    if (!job_selectable(agent_id, j)) continue;
    // fifo: earliest arrival first; spt: shortest time on this machine
    // first. Ties go to the lowest job id via the scan order.
    const long key = rule == DispatchRule::kFifo
                         ? state_.jobs[j].arrival
                         : instance_.jobs[j].processing_times[state_.jobs[j].stage];
    if (best < 0 || key < best_key) {
      best = j;
      best_key = key;
    }
  }
  return best < 0 ? no_op_action() : best;
}

Graph ImmEnv::to_graph(const ImmState& state, const ShopInstance& inst) {
  const int n = inst.job_count();
  const int node_count = 2 * inst.machine_count + 2;
  if (static_cast<int>(state.jobs.size()) != n ||
      static_cast<int>(state.machines.size()) != inst.machine_count)
    throw std::invalid_argument("ImmEnv::to_graph: state does not match instance");
  Mat feats(node_count, n);

  int lowest_staged = -1;
  for (int j = 0; j < n; ++j)
    if (state.jobs[j].loc == ImmJobState::Loc::kInputBuffer) {
      lowest_staged = j;
      break;
    }
  if (lowest_staged >= 0) feats(ib_node(), lowest_staged) = 1.0;

  for (int k = 0; k < inst.machine_count; ++k) {
    const ImmMachineState& ms = state.machines[k];
    if (ms.job != -1) {
      feats(machine_node(k), 0) = ms.job + 1;  // 0 means idle
      feats(machine_node(k), 1) = ms.remaining;
    }
  }
  for (int j = 0; j < n; ++j) {
    const ImmJobState& js = state.jobs[j];
    if (js.loc == ImmJobState::Loc::kBuffer)
      feats(buffer_node(inst, inst.jobs[j].machine_sequence[js.stage]), j) = 1.0;
    else if (js.loc == ImmJobState::Loc::kDone)
      feats(ob_node(inst), j) = 1.0;
  }

  // One edge per unfinished job, pointing at its next requirement.
  std::vector<Edge> edges;
  std::vector<int> edge_jobs;
  for (int j = 0; j < n; ++j) {
    const ImmJobState& js = state.jobs[j];
    const std::vector<int>& seq = inst.jobs[j].machine_sequence;
    switch (js.loc) {
      case ImmJobState::Loc::kDone:
        continue;
      case ImmJobState::Loc::kInputBuffer:
        edges.push_back({ib_node(), buffer_node(inst, seq[js.stage])});
        break;
      case ImmJobState::Loc::kBuffer:
        edges.push_back({buffer_node(inst, seq[js.stage]), machine_node(seq[js.stage])});
        break;
      case ImmJobState::Loc::kMachine:
        if (js.stage + 1 == static_cast<int>(seq.size()))
          edges.push_back({machine_node(seq[js.stage]), ob_node(inst)});
        else
          edges.push_back({machine_node(seq[js.stage]), buffer_node(inst, seq[js.stage + 1])});
        break;
    }
    edge_jobs.push_back(j);
  }
  Mat attrs(static_cast<int>(edges.size()), n);
  for (size_t e = 0; e < edge_jobs.size(); ++e) attrs(static_cast<int>(e), edge_jobs[e]) = 1.0;
  return Graph(std::move(feats), std::move(edges), std::move(attrs));
}

std::shared_ptr<const Graph> ImmEnv::graph() const {
  if (!graph_cache_) graph_cache_ = std::make_shared<const Graph>(to_graph(state_, instance_));
  return graph_cache_;
}

void ImmEnv::check_invariants() const {
  const int n = instance_.job_count();
  int finished = 0;
  std::vector<int> on_machine(instance_.machine_count, 0);
  for (int j = 0; j < n; ++j) {
    const ImmJobState& js = state_.jobs[j];
    const int ops = ops_of(instance_, j);
    if (js.stage < 0 || js.stage > ops) throw std::runtime_error("ImmEnv: stage out of range");
    if ((js.loc == ImmJobState::Loc::kDone) != (js.stage == ops))
      throw std::runtime_error("ImmEnv: finished flag disagrees with stage");
    if (js.loc == ImmJobState::Loc::kDone) {
      ++finished;
    } else if (js.loc == ImmJobState::Loc::kMachine) {
      const int k = instance_.jobs[j].machine_sequence[js.stage];
      if (state_.machines[k].job != j)
        throw std::runtime_error("ImmEnv: job claims machine that does not hold it");
      on_machine[k] += 1;
    }
  }
  if (finished != state_.finished) throw std::runtime_error("ImmEnv: finished census broken");
  for (int k = 0; k < instance_.machine_count; ++k) {
    const ImmMachineState& ms = state_.machines[k];
    if (on_machine[k] > 1) throw std::runtime_error("ImmEnv: machine exclusivity broken");
    if (ms.job == -1) {
      if (ms.remaining != 0) throw std::runtime_error("ImmEnv: timer on idle machine");
    } else {
      if (ms.remaining < 1) throw std::runtime_error("ImmEnv: stale finished job on machine");
      if (on_machine[k] != 1) throw std::runtime_error("ImmEnv: machine job without owner");
    }
  }
}

}  // namespace jsrl
