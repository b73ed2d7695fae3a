#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsrl/environment.hpp"

namespace jsrl {

/// One job: the machines it must visit, in order, with aligned durations.
struct JobSpec {
  int job_id = 0;
  std::vector<int> machine_sequence;  // distinct 0-based machine ids
  std::vector<int> processing_times;  // positive tick counts, one per stage
  bool operator==(const JobSpec&) const = default;
};

struct ShopInstance {
  int machine_count = 0;
  uint64_t seed = 0;  // generator seed recorded in the file header
  std::vector<JobSpec> jobs;

  int job_count() const { return static_cast<int>(jobs.size()); }
  bool operator==(const ShopInstance&) const = default;
};

/// Generic consistency: job ids are 0..J-1 in order, sequences non-empty with
/// distinct in-range machines, positive times. Throws on violation.
void validate_shop(const ShopInstance& inst);

/// Strict benchmark loader: exactly 30 jobs x 4 machines, every sequence a
/// permutation of all machines. Parse errors carry the line number.
/// File format: header `jobs=30 machines=4 seed=<n>`, then one line per job
/// `job_id; m1,m2,m3,m4; t1,t2,t3,t4` with 1-based machine numbers.
ShopInstance load_instance(const std::string& path);
void write_instance(const ShopInstance& inst, const std::string& path);

/// Random instance: per job a uniform permutation of all machines and times
/// uniform in [time_lo, time_hi].
ShopInstance generate_instance(int jobs, int machines, int time_lo, int time_hi, uint64_t seed);

/// The bundled 30x4 benchmark: generate_instance(30, 4, 5, 25, seed) with
/// job 1 overwritten to the reference row (M2,M3,M1,M4; 14,12,20,10).
ShopInstance benchmark_instance(uint64_t seed = 42);

/// max(largest per-machine workload, largest per-job duration sum).
int lower_bound(const ShopInstance& inst);

/// One executed operation; start/finish are inclusive tick numbers.
struct OpRecord {
  int job = 0;
  int op_index = 0;
  int machine = 0;
  int start = 0;
  int finish = 0;
  bool operator==(const OpRecord&) const = default;
};

using Schedule = std::vector<OpRecord>;

enum class ScheduleCheck {
  kOk,
  kMachineOverlap,  // two operations share a machine tick
  kStageOrder,      // op order or machine contradicts the job's sequence
  kDuration,        // operation length != processing time
  kPrecedence,      // operation starts before its predecessor finished
};

struct ScheduleReport {
  ScheduleCheck verdict = ScheduleCheck::kOk;
  std::string detail;
  bool ok() const { return verdict == ScheduleCheck::kOk; }
};

/// Checks a (possibly partial) schedule against the instance; reports the
/// first violation found, in the order the ScheduleCheck values are declared.
ScheduleReport validate_schedule(const Schedule& schedule, const ShopInstance& inst);

struct ImmConfig {
  int max_steps = 3000;
  double completion_bonus = 1.0;
  double step_penalty = 0.01;
  double terminal_scale = 50.0;  // terminal reward = scale * lower_bound / makespan
};

struct ImmJobState {
  enum class Loc { kInputBuffer, kBuffer, kMachine, kDone };
  int stage = 0;  // index of the next (or running) operation
  Loc loc = Loc::kInputBuffer;
  int arrival = 0;  // tick the job reached its current waiting spot
  bool operator==(const ImmJobState&) const = default;
};

struct ImmMachineState {
  int job = -1;
  int remaining = 0;
  bool operator==(const ImmMachineState&) const = default;
};

struct ImmState {
  std::vector<ImmJobState> jobs;
  std::vector<ImmMachineState> machines;
  int step = 0;
  int finished = 0;
  bool operator==(const ImmState&) const = default;
};

/// Job-shop floor with one selection agent per machine. Jobs wait in their
/// next machine's buffer; an idle machine must pick a waiting job (no-op is
/// legal only when it has none), so every episode is a non-delay schedule.
class ImmEnv final : public Environment {
 public:
  ImmEnv(ShopInstance instance, ImmConfig cfg);

  int agent_count() const override { return instance_.machine_count; }
  int action_width(int agent_id) const override;  // job_count + 1 (last = no-op)
  ReadoutSpec observation_readout(int agent_id) const override;  // own buffer node

  void reset(uint64_t seed) override;  // dynamics are deterministic; seed unused
  std::shared_ptr<const Graph> graph() const override;
  std::vector<uint8_t> legal_mask(int agent_id) const override;
  StepResult step(const std::vector<int>& joint_action) override;

  bool done() const override { return done_; }
  int steps() const override { return state_.step; }
  bool success() const override { return state_.finished == instance_.job_count(); }
  std::optional<int> makespan() const override;

  int dispatch_action(int agent_id, DispatchRule rule, std::mt19937_64& rng) const override;

  const ShopInstance& instance() const { return instance_; }
  const ImmConfig& config() const { return cfg_; }
  const ImmState& state() const { return state_; }
  const Schedule& schedule() const { return schedule_; }
  int no_op_action() const { return instance_.job_count(); }

  /// Node order: IB, machines, machine buffers, OB. Feature width = job
  /// count: IB one-hot of the lowest-id undrained job; machine k =
  /// [job_id+1, remaining, 0...]; buffers and OB hold per-job presence flags.
  /// One edge per unfinished job toward its next requirement, attribute
  /// one-hot(job_id).
  static Graph to_graph(const ImmState& state, const ShopInstance& inst);

  /// Census and exclusivity checks; throws on violation.
  void check_invariants() const;

 private:
  bool job_selectable(int machine, int job) const;

  ShopInstance instance_;
  ImmConfig cfg_;
  ImmState state_;
  Schedule schedule_;
  std::vector<int> op_start_;  // per job, start tick of the running operation
  int lower_bound_ = 0;
  int makespan_ = -1;
  bool done_ = false;
  mutable std::shared_ptr<const Graph> graph_cache_;
};

}  // namespace jsrl
