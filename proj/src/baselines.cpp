#include "jsrl/baselines.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

#include "jsrl/env_rmc.hpp"
#include "jsrl/rng.hpp"

namespace jsrl {

EpisodeRow run_dispatch(Environment& env, DispatchRule rule, uint64_t seed) {
  env.reset(seed);
  std::mt19937_64 rng = make_rng(seed, 0xd15);
  auto* rmc = dynamic_cast<RmcEnv*>(&env);
  auto* imm = dynamic_cast<ImmEnv*>(&env);
  while (!env.done()) {
    std::vector<int> joint(env.agent_count());
    for (int a = 0; a < env.agent_count(); ++a) joint[a] = env.dispatch_action(a, rule, rng);
    env.step(joint);
    if (rmc) rmc->check_invariants();
    if (imm) imm->check_invariants();
  }
  if (imm) {
    const ScheduleReport report = validate_schedule(imm->schedule(), imm->instance());
    if (!report.ok()) throw std::runtime_error("run_dispatch: invalid schedule: " + report.detail);
  }
  EpisodeRow row;
  row.policy = std::string(to_string(rule));
  row.seed = seed;
  row.makespan = env.makespan();
  row.steps = env.steps();
  row.success = env.success();
  return row;
}

namespace {

struct SearchContext {
  const ShopInstance* inst;
  int cap;
  int best = std::numeric_limits<int>::max();
  Schedule best_schedule;

  std::vector<int> next_op, job_ready, job_left;
  std::vector<int> machine_free, machine_left;
  Schedule partial;
  int max_finish = 0;

  int bound() const {
    int lb = max_finish;
    for (size_t j = 0; j < next_op.size(); ++j)
      if (job_left[j] > 0) lb = std::max(lb, job_ready[j] + job_left[j] - 1);
    for (size_t k = 0; k < machine_free.size(); ++k)
      if (machine_left[k] > 0) lb = std::max(lb, machine_free[k] + machine_left[k] - 1);
    return lb;
  }

  void dfs() {
    if (bound() >= best) return;
    bool all_done = true;
    // Next decision: the machine that can load soonest (lowest id on ties);
    // same-instant loads on other machines surface on the recursive calls.
    int pick_machine = -1;
    int pick_time = std::numeric_limits<int>::max();
    for (size_t j = 0; j < next_op.size(); ++j) {
      if (job_left[j] == 0) continue;
      all_done = false;
      const int k = inst->jobs[j].machine_sequence[next_op[j]];
      const int at = std::max(machine_free[k], job_ready[j]);
      if (at < pick_time || (at == pick_time && k < pick_machine)) {
        pick_time = at;
        pick_machine = k;
      }
    }
    if (all_done) {
      if (max_finish < best) {
        best = max_finish;
        best_schedule = partial;
      }
      return;
    }
    for (size_t j = 0; j < next_op.size(); ++j) {
      if (job_left[j] == 0) continue;
      if (inst->jobs[j].machine_sequence[next_op[j]] != pick_machine) continue;
      if (job_ready[j] > pick_time) continue;
      const int p = inst->jobs[j].processing_times[next_op[j]];
      const int finish = pick_time + p - 1;
      if (finish > cap) continue;

      const int save_ready = job_ready[j];
      const int save_free = machine_free[pick_machine];
      const int save_finish = max_finish;
      partial.push_back({static_cast<int>(j), next_op[j], pick_machine, pick_time, finish});
      next_op[j] += 1;
      job_ready[j] = finish + 1;
      job_left[j] -= p;
      machine_free[pick_machine] = finish + 1;
      machine_left[pick_machine] -= p;
      max_finish = std::max(max_finish, finish);

      dfs();

      max_finish = save_finish;
      machine_left[pick_machine] += p;
      machine_free[pick_machine] = save_free;
      job_left[j] += p;
      job_ready[j] = save_ready;
      next_op[j] -= 1;
      partial.pop_back();
    }
  }
};

}  // namespace

BruteForceResult brute_force_optimal(const ShopInstance& inst, int step_cap) {
  validate_shop(inst);
  if (inst.job_count() > 3 || inst.machine_count > 3)
    throw std::invalid_argument("brute_force_optimal: instance exceeds 3 jobs x 3 machines");
  if (step_cap < 1) throw std::invalid_argument("brute_force_optimal: bad step cap");

  SearchContext ctx;
  ctx.inst = &inst;
  ctx.cap = step_cap;
  ctx.next_op.assign(inst.job_count(), 0);
  ctx.job_ready.assign(inst.job_count(), 1);
  ctx.job_left.assign(inst.job_count(), 0);
  ctx.machine_free.assign(inst.machine_count, 1);
  ctx.machine_left.assign(inst.machine_count, 0);
  for (int j = 0; j < inst.job_count(); ++j)
    for (size_t s = 0; s < inst.jobs[j].processing_times.size(); ++s) {
      ctx.job_left[j] += inst.jobs[j].processing_times[s];
      ctx.machine_left[inst.jobs[j].machine_sequence[s]] += inst.jobs[j].processing_times[s];
    }

  ctx.dfs();
  if (ctx.best == std::numeric_limits<int>::max())
    throw std::runtime_error("brute_force_optimal: no schedule within step cap " +
                             std::to_string(step_cap));
  return {ctx.best, std::move(ctx.best_schedule)};
}

std::vector<CompareRow> compare(std::span<const EpisodeRow> rows) {
  if (rows.empty()) throw std::invalid_argument("compare: need at least one run");
  std::map<std::string, std::vector<const EpisodeRow*>> groups;
  for (const EpisodeRow& row : rows) groups[row.policy].push_back(&row);
  std::vector<CompareRow> out;
  for (const auto& [policy, members] : groups) {
    CompareRow agg;
    agg.policy = policy;
    agg.runs = static_cast<int>(members.size());
    long makespan_sum = 0;
    int with_makespan = 0;
    for (const EpisodeRow* row : members) {
      agg.mean_steps += row->steps;
      if (row->success) agg.success_rate += 1.0;
      if (!row->makespan) continue;
      const int ms = *row->makespan;
      makespan_sum += ms;
      if (with_makespan == 0) {
        agg.min_makespan = agg.max_makespan = ms;
      } else {
        agg.min_makespan = std::min(agg.min_makespan, ms);
        agg.max_makespan = std::max(agg.max_makespan, ms);
      }
      ++with_makespan;
    }
    agg.mean_steps /= agg.runs;
    agg.success_rate /= agg.runs;
    if (with_makespan > 0) agg.mean_makespan = static_cast<double>(makespan_sum) / with_makespan;
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace jsrl
