#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "jsrl/env_imm.hpp"
#include "jsrl/rng.hpp"

using namespace jsrl;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream os(path);
  os << content;
  return path;
}

/// Two jobs through two machines in the same order but with mirrored times;
/// serving the long job first is distinctly worse.
ShopInstance mirrored_pair() {
  ShopInstance inst;
  inst.machine_count = 2;
  inst.jobs = {{0, {0, 1}, {6, 2}}, {1, {0, 1}, {2, 6}}};
  return inst;
}

ShopInstance single_job(int machines, std::vector<int> seq, std::vector<int> times) {
  ShopInstance inst;
  inst.machine_count = machines;
  inst.jobs = {{0, std::move(seq), std::move(times)}};
  return inst;
}

}  // namespace

TEST_CASE("validate_shop rejects malformed instances") {
  ShopInstance inst = mirrored_pair();
  CHECK_NOTHROW(validate_shop(inst));
  inst.jobs[1].job_id = 5;
  CHECK_THROWS(validate_shop(inst));
  inst = mirrored_pair();
  inst.jobs[0].machine_sequence = {0, 0};
  CHECK_THROWS(validate_shop(inst));
  inst = mirrored_pair();
  inst.jobs[0].machine_sequence = {0, 2};
  CHECK_THROWS(validate_shop(inst));
  inst = mirrored_pair();
  inst.jobs[0].processing_times = {6, 0};
  CHECK_THROWS(validate_shop(inst));
  inst = mirrored_pair();
  inst.jobs[0].processing_times = {6};
  CHECK_THROWS(validate_shop(inst));
}

TEST_CASE("instance files round-trip exactly") {
  ShopInstance inst = benchmark_instance(42);
  CHECK(inst.jobs[1].machine_sequence == std::vector<int>{1, 2, 0, 3});
  CHECK(inst.jobs[1].processing_times == std::vector<int>{14, 12, 20, 10});
  for (const JobSpec& job : inst.jobs)
    for (int t : job.processing_times) {
      CHECK(t >= 5);
      CHECK(t <= 25);
    }
  std::string path = temp_file("roundtrip_instance.txt", "");
  write_instance(inst, path);
  CHECK(load_instance(path) == inst);
  CHECK(benchmark_instance(42) == inst);  // generation is deterministic
}

TEST_CASE("the bundled benchmark file matches the generator") {
  ShopInstance shipped = load_instance("data/imm_instance_30x4.txt");
  CHECK(shipped == benchmark_instance(42));
}

TEST_CASE("instance parse errors carry the line number") {
  auto check_error = [](const std::string& name, const std::string& content,
                        const std::string& needle) {
    std::string path = temp_file(name, content);
    try {
      load_instance(path);
      FAIL_CHECK("expected a parse failure for " << name);
    } catch (const std::exception& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                    "message was: " << e.what());
    }
  };
  check_error("bad_header.txt", "jobs=30 machines=4\n", ":1:");
  check_error("bad_shape.txt", "jobs=3 machines=4 seed=0\n", "30 jobs x 4 machines");
  check_error("bad_machine.txt",
              "jobs=30 machines=4 seed=0\n0; 1,2,3,5; 5,5,5,5\n", ":2:");
  check_error("dup_machine.txt",
              "jobs=30 machines=4 seed=0\n0; 1,2,2,4; 5,5,5,5\n", "listed twice");
  check_error("bad_order.txt",
              "jobs=30 machines=4 seed=0\n1; 1,2,3,4; 5,5,5,5\n", "0..29 in order");
  check_error("bad_time.txt",
              "jobs=30 machines=4 seed=0\n0; 1,2,3,4; 5,0,5,5\n", "non-positive");
  check_error("too_few.txt", "jobs=30 machines=4 seed=0\n0; 1,2,3,4; 5,5,5,5\n",
              "expected 30 jobs");
}

TEST_CASE("lower bound is the larger of job sums and machine loads") {
  ShopInstance inst;
  inst.machine_count = 2;
  inst.jobs = {{0, {0, 1}, {10, 5}}, {1, {1, 0}, {7, 3}}};
  // job sums 15 and 10; machine loads M0 = 13, M1 = 12
  CHECK(lower_bound(inst) == 15);
  CHECK(lower_bound(benchmark_instance(42)) >= 56);  // job 1 alone needs 56
}

TEST_CASE("a single job runs its stages back to back") {
  ImmEnv env(single_job(4, {1, 2, 0, 3}, {14, 12, 20, 10}), ImmConfig{});
  auto rng = make_rng(0);
  while (!env.done()) {
    std::vector<int> action(4);
    for (int k = 0; k < 4; ++k) action[k] = env.dispatch_action(k, DispatchRule::kFifo, rng);
    env.step(action);
    env.check_invariants();
  }
  CHECK(env.success());
  CHECK(env.makespan() == 56);
  Schedule expect{{0, 0, 1, 1, 14}, {0, 1, 2, 15, 26}, {0, 2, 0, 27, 46}, {0, 3, 3, 47, 56}};
  CHECK(env.schedule() == expect);
  CHECK(validate_schedule(env.schedule(), env.instance()).ok());
}

TEST_CASE("masks force idle machines to take waiting work") {
  ImmEnv env(mirrored_pair(), ImmConfig{});
  // fresh floor: machine 0 must choose a job, machine 1 has nothing
  auto m0 = env.legal_mask(0);
  CHECK(m0 == std::vector<uint8_t>{1, 1, 0});
  auto m1 = env.legal_mask(1);
  CHECK(m1 == std::vector<uint8_t>{0, 0, 1});

  env.step({0, env.no_op_action()});  // machine 0 starts the long job
  // busy machines may only no-op; job 1 drained to machine 0's buffer
  CHECK(env.legal_mask(0) == std::vector<uint8_t>{0, 0, 1});
  CHECK(env.state().jobs[1].loc == ImmJobState::Loc::kBuffer);
}

TEST_CASE("fifo and spt order the queue differently") {
  ImmEnv env(mirrored_pair(), ImmConfig{});
  auto rng = make_rng(1);
  // both jobs wait at machine 0 with equal arrival: fifo takes the lower id,
  // spt the shorter processing time
  CHECK(env.dispatch_action(0, DispatchRule::kFifo, rng) == 0);
  CHECK(env.dispatch_action(0, DispatchRule::kSpt, rng) == 1);
  CHECK(env.dispatch_action(1, DispatchRule::kFifo, rng) == env.no_op_action());
}

TEST_CASE("dispatch rollouts produce the hand-computed makespans") {
  for (auto [rule, expect] : {std::pair{DispatchRule::kFifo, 14},
                              std::pair{DispatchRule::kSpt, 10}}) {
    ImmEnv env(mirrored_pair(), ImmConfig{});
    auto rng = make_rng(2);
    env.reset(0);
    while (!env.done()) {
      std::vector<int> action(2);
      for (int k = 0; k < 2; ++k) action[k] = env.dispatch_action(k, rule, rng);
      env.step(action);
    }
    CHECK(env.makespan() == expect);
    CHECK(validate_schedule(env.schedule(), env.instance()).ok());
  }
}

TEST_CASE("rewards pay per completion plus a makespan-scaled finish bonus") {
  ImmConfig cfg;
  cfg.completion_bonus = 2.0;
  cfg.step_penalty = 0.25;
  cfg.terminal_scale = 10.0;
  ImmEnv env(single_job(2, {0, 1}, {2, 1}), cfg);
  const int lb = lower_bound(env.instance());  // = 3, the job's total work

  StepResult r = env.step({0, env.no_op_action()});  // load job on machine 0
  CHECK(r.rewards[0] == doctest::Approx(-0.25));
  CHECK(r.rewards[1] == doctest::Approx(-0.25));
  r = env.step({env.no_op_action(), env.no_op_action()});  // finishes stage 0
  CHECK(r.rewards[0] == doctest::Approx(2.0 - 0.25));
  CHECK(r.rewards[1] == doctest::Approx(-0.25));
  r = env.step({env.no_op_action(), 0});  // stage 1 loads and finishes (1 tick)
  CHECK(env.done());
  CHECK(env.makespan() == 3);
  const double bonus = 10.0 * lb / 3.0;
  CHECK(r.rewards[0] == doctest::Approx(-0.25 + bonus));
  CHECK(r.rewards[1] == doctest::Approx(2.0 - 0.25 + bonus));
}

TEST_CASE("the state graph tracks jobs through buffers and machines") {
  ShopInstance inst = mirrored_pair();
  ImmEnv env(inst, ImmConfig{});
  const int J = 2, M = 2;
  auto g0 = env.graph();
  REQUIRE(g0->num_nodes() == 2 * M + 2);
  REQUIRE(g0->node_dim() == J);
  REQUIRE(g0->num_edges() == J);  // every job points at its first requirement
  CHECK(g0->node_features()(0, 0) == 1.0);  // input buffer one-hot: job 0
  CHECK(g0->node_features()(0, 1) == 0.0);
  for (int j = 0; j < J; ++j) {
    CHECK(g0->edges()[j].sender == 0);
    CHECK(g0->edges()[j].receiver == 1 + M + 0);  // both start on machine 0
    CHECK(g0->edge_attrs()(j, j) == 1.0);
  }

  env.step({1, env.no_op_action()});  // job 1 (2 ticks) onto machine 0
  auto g1 = env.graph();
  CHECK(g1->node_features()(1 + 0, 0) == 2.0);  // machine 0 holds job id 1
  CHECK(g1->node_features()(1 + 0, 1) == 1.0);  // one tick left
  CHECK(g1->node_features()(1 + M + 0, 0) == 1.0);  // job 0 waits in its buffer
  CHECK(g1->node_features()(0, 0) == 0.0);  // input buffer drained
  REQUIRE(g1->num_edges() == 2);
  // job 0: buffer -> machine 0; job 1: machine 0 -> buffer of machine 1
  CHECK(g1->edges()[0].sender == 1 + M + 0);
  CHECK(g1->edges()[0].receiver == 1 + 0);
  CHECK(g1->edges()[1].sender == 1 + 0);
  CHECK(g1->edges()[1].receiver == 1 + M + 1);

  // last-stage jobs point at the output store
  env.step({env.no_op_action(), env.no_op_action()});  // job 1 -> buffer of M1
  env.step({0, 1});                                    // both machines load
  auto g2 = env.graph();
  REQUIRE(g2->num_edges() == 2);
  CHECK(g2->edges()[1].sender == 1 + 1);
  CHECK(g2->edges()[1].receiver == 1 + 2 * M);  // job 1 on its final stage
}

TEST_CASE("the thirty-job census holds through random rollouts") {
  ImmEnv env(benchmark_instance(42), ImmConfig{});
  auto rng = make_rng(77);
  env.reset(0);
  int guard = 0;
  while (!env.done() && guard++ < 400) {
    std::vector<int> action(env.agent_count());
    for (int k = 0; k < env.agent_count(); ++k)
      action[k] = env.dispatch_action(k, DispatchRule::kRandom, rng);
    env.step(action);
    env.check_invariants();
    int at_input = 0, waiting = 0, running = 0, finished = 0;
    for (const ImmJobState& js : env.state().jobs) {
      switch (js.loc) {
        case ImmJobState::Loc::kInputBuffer: ++at_input; break;
        case ImmJobState::Loc::kBuffer: ++waiting; break;
        case ImmJobState::Loc::kMachine: ++running; break;
        case ImmJobState::Loc::kDone: ++finished; break;
      }
    }
    CHECK(at_input + waiting + running + finished == 30);
    CHECK(finished == env.state().finished);
    int loaded = 0;
    for (const ImmMachineState& ms : env.state().machines)
      if (ms.job >= 0) ++loaded;
    CHECK(loaded == running);
  }
}

TEST_CASE("schedule validation pinpoints each corruption kind") {
  // build a clean two-machine trace first
  ImmEnv env(mirrored_pair(), ImmConfig{});
  auto rng = make_rng(5);
  while (!env.done()) {
    std::vector<int> action(2);
    for (int k = 0; k < 2; ++k) action[k] = env.dispatch_action(k, DispatchRule::kSpt, rng);
    env.step(action);
  }
  const Schedule clean = env.schedule();
  const ShopInstance inst = env.instance();
  REQUIRE(validate_schedule(clean, inst).ok());

  SUBCASE("machine overlap") {
    Schedule bad = clean;  // pull job 0's first run onto job 1's machine ticks
    for (OpRecord& op : bad)
      if (op.job == 0 && op.op_index == 0) {
        op.start = 1;
        op.finish = 6;
      }
    ScheduleReport r = validate_schedule(bad, inst);
    CHECK(r.verdict == ScheduleCheck::kMachineOverlap);
  }
  SUBCASE("stage order") {
    // a lone job cannot overlap with anything, so the swapped machines are
    // caught by the sequence check itself
    ImmEnv lone(single_job(2, {0, 1}, {5, 3}), ImmConfig{});
    auto rng2 = make_rng(8);
    while (!lone.done()) {
      std::vector<int> action(2);
      for (int k = 0; k < 2; ++k) action[k] = lone.dispatch_action(k, DispatchRule::kFifo, rng2);
      lone.step(action);
    }
    Schedule bad = lone.schedule();
    bad[0].machine = 1;
    bad[1].machine = 0;
    ScheduleReport r = validate_schedule(bad, lone.instance());
    CHECK(r.verdict == ScheduleCheck::kStageOrder);
  }
  SUBCASE("duration") {
    ImmEnv lone(single_job(2, {0, 1}, {3, 2}), ImmConfig{});
    auto rng2 = make_rng(6);
    while (!lone.done()) {
      std::vector<int> action(2);
      for (int k = 0; k < 2; ++k) action[k] = lone.dispatch_action(k, DispatchRule::kFifo, rng2);
      lone.step(action);
    }
    Schedule bad = lone.schedule();
    bad[0].finish += 2;  // only one job, so no overlap can mask this
    ScheduleReport r = validate_schedule(bad, lone.instance());
    CHECK(r.verdict == ScheduleCheck::kDuration);
  }
  SUBCASE("precedence") {
    ImmEnv lone(single_job(2, {0, 1}, {5, 3}), ImmConfig{});
    auto rng2 = make_rng(7);
    while (!lone.done()) {
      std::vector<int> action(2);
      for (int k = 0; k < 2; ++k) action[k] = lone.dispatch_action(k, DispatchRule::kFifo, rng2);
      lone.step(action);
    }
    Schedule bad = lone.schedule();  // ops are (0..): [1,5] on M0 then [6,8] on M1
    bad[1].start = 4;
    bad[1].finish = 6;  // duration kept, starts before stage 0 ends
    ScheduleReport r = validate_schedule(bad, lone.instance());
    CHECK(r.verdict == ScheduleCheck::kPrecedence);
  }
}

TEST_CASE("makespan never beats the lower bound") {
  ShopInstance inst = benchmark_instance(42);
  const int lb = lower_bound(inst);
  for (uint64_t seed = 0; seed < 3; ++seed) {
    ImmEnv env(inst, ImmConfig{});
    auto rng = make_rng(seed, 0xab);
    env.reset(seed);
    while (!env.done()) {
      std::vector<int> action(env.agent_count());
      for (int k = 0; k < env.agent_count(); ++k)
        action[k] = env.dispatch_action(k, DispatchRule::kRandom, rng);
      env.step(action);
    }
    REQUIRE(env.success());
    CHECK(*env.makespan() >= lb);
  }
}
