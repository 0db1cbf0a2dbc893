#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "pushgrasp/pipeline/scripted.hpp"
#include "pushgrasp/tasks/metrics.hpp"

using namespace pushgrasp;
using namespace pushgrasp::tasks;

TEST_CASE("same seed gives bit-identical observations") {
  for (auto t : {TaskType::push, TaskType::wall, TaskType::edge}) {
    auto setup = make_task_setup(t);
    Env a(setup), b(setup);
    Observation oa = a.reset(42), ob = b.reset(42);
    CHECK(std::memcmp(oa.v.data(), ob.v.data(), sizeof(oa.v)) == 0);
  }
}

TEST_CASE("spawns stay inside the configured init region") {
  for (auto t : {TaskType::push, TaskType::wall, TaskType::edge}) {
    auto setup = make_task_setup(t);
    Env env(setup);
    for (int i = 0; i < 1000; ++i) {
      env.reset(i);
      const Rect& r = setup.config.init_region;
      CHECK(env.body().position.x >= r.x_lo - 1e-9);
      CHECK(env.body().position.x <= r.x_hi + 1e-9);
      if (t == TaskType::push) {
        CHECK(env.body().position.y >= r.y_lo - 1e-9);
        CHECK(env.body().position.y <= r.y_hi + 1e-9);
      }
    }
  }
}

TEST_CASE("wall reset has a wall and no wall contact") {
  auto setup = make_task_setup(TaskType::wall);
  Env env(setup);
  for (int i = 0; i < 100; ++i) {
    env.reset(i);
    REQUIRE(env.scene().wall_x.has_value());
    auto support = sim::object_support_state(env.scene(), env.episode_object(), env.body());
    CHECK(support.kind == sim::SupportKind::against_wall);
    CHECK(support.wall_gap > 0.0);
  }
}

TEST_CASE("zero action on a resting object changes nothing") {
  auto setup = make_task_setup(TaskType::push);
  Env env(setup);
  env.reset(7);
  Vec2 start = env.body().position;
  StepOut out;
  for (int i = 0; i < 30; ++i) out = env.step(Action{});
  CHECK(!out.done);
  CHECK((env.body().position - start).norm() < 1e-6);
}

TEST_CASE("scripted push strictly approaches the target") {
  auto setup = make_task_setup(TaskType::push);
  setup.config.curriculum_stage = 0;
  Env env(setup);
  auto policy = pipeline::scripted_policy(setup);
  Observation obs = env.reset(5);
  double d0 = distance(env.body().position, env.target());
  std::vector<double> dist_at_quarter;
  while (!env.done()) {
    StepOut out = env.step(policy(obs));
    obs = out.obs;
    if (env.steps() % 30 == 0) dist_at_quarter.push_back(out.info.dist_obj_target);
  }
  CHECK(env.result().success);
  for (size_t i = 1; i < dist_at_quarter.size(); ++i) CHECK(dist_at_quarter[i] < dist_at_quarter[i - 1]);
  CHECK(distance(env.body().position, env.target()) < d0);
}

TEST_CASE("scripted expert clears 0.9 SR on the easy split") {
  auto setup = make_task_setup(TaskType::push);
  setup.config.curriculum_stage = 0;
  auto policy = pipeline::scripted_policy(setup);
  EvalStats stats = evaluate(policy, setup, 20, {1, 2, 3});
  CHECK(stats.sr_mean >= 0.9);
}

TEST_CASE("success needs height, both contacts, and persistence") {
  auto setup = make_task_setup(TaskType::wall);
  const auto& cfg = setup.config;
  sim::BodyState high;
  high.position = {0.45, setup.scene.table_top_z + 0.11};
  sim::BodyState low;
  low.position = {0.45, setup.scene.table_top_z + 0.09};

  CHECK(success_condition(setup.scene, high, true, true, cfg));
  CHECK(!success_condition(setup.scene, high, false, false, cfg));  // tossed, no contact
  CHECK(!success_condition(setup.scene, high, true, false, cfg));
  CHECK(!success_condition(setup.scene, low, true, true, cfg));  // below threshold

  SuccessTracker tracker;
  for (int i = 0; i < cfg.success_hold_steps - 1; ++i)
    CHECK(!tracker.update(success_condition(setup.scene, high, true, true, cfg), cfg.success_hold_steps));
  CHECK(tracker.update(true, cfg.success_hold_steps));  // 15th consecutive step

  // Monotone in height: success at h stays success at any h' > h.
  for (double extra = 0.0; extra < 0.3; extra += 0.03) {
    sim::BodyState s = high;
    s.position.y += extra;
    CHECK(success_condition(setup.scene, s, true, true, cfg));
  }
}

TEST_CASE("tte is the euclidean distance in centimeters") {
  CHECK(compute_tte({0.3, 0.4}, {0.3, 0.4}) == doctest::Approx(0.0));
  CHECK(compute_tte({0, 0}, {0.03, 0.04}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(compute_tte({std::nan(""), 0}, {0, 0}), std::invalid_argument);
}

TEST_CASE("always-fail policy evaluates to zero SR with zero spread") {
  auto setup = make_task_setup(TaskType::wall);
  Policy idle = [](const Observation&) { return Action{}; };
  EvalStats stats = evaluate(idle, setup, 5, {1, 2, 3});
  CHECK(stats.sr_mean == 0.0);
  CHECK(stats.sr_std == 0.0);
}

TEST_CASE("actions are clamped: joints stay in limits under extreme commands") {
  auto setup = make_task_setup(TaskType::wall);
  Env env(setup);
  env.reset(3);
  Action a;
  a.arm_delta = {100.0, -100.0, 100.0};
  a.hand_abs = {50.0, -50.0};
  std::array<double, sim::kNumJoints> q_prev = env.robot_state().q;
  for (int i = 0; i < 20 && !env.done(); ++i) {
    env.step(a);
    const auto& q = env.robot_state().q;
    for (int j = 0; j < sim::kNumJoints; ++j) {
      CHECK(q[j] >= setup.robot.joint_limits[j].lo - 1e-12);
      CHECK(q[j] <= setup.robot.joint_limits[j].hi + 1e-12);
      // One decision moves an arm joint at most by the PD response to a
      // max_arm_delta target shift plus residual transients.
      if (j < 3) CHECK(std::abs(q[j] - q_prev[j]) <= setup.robot.max_joint_speed * setup.config.control_dt + 1e-9);
    }
    q_prev = q;
  }
}

TEST_CASE("episode determinism: seed plus actions fixes the result") {
  auto setup = make_task_setup(TaskType::edge);
  auto run = [&] {
    Env env(setup);
    Observation obs = env.reset(11);
    Rng rng(99);
    std::vector<double> trace;
    while (!env.done()) {
      Action a;
      for (auto& d : a.arm_delta) d = rng.uniform(-0.05, 0.05);
      a.hand_abs = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      StepOut out = env.step(a);
      obs = out.obs;
      trace.insert(trace.end(), obs.v.begin(), obs.v.end());
      trace.push_back(out.reward);
    }
    trace.push_back(env.result().success ? 1.0 : 0.0);
    trace.push_back(static_cast<double>(env.result().steps));
    return trace;
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("observation layout covers all 19 slots without overlap") {
  const auto& layout = observation_layout();
  std::array<int, Observation::kDim> hits{};
  for (const auto& [name, span] : layout) {
    for (int i = span.first; i < span.first + span.second; ++i) {
      REQUIRE(i < Observation::kDim);
      hits[i]++;
    }
  }
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("stepping a finished episode throws") {
  auto setup = make_task_setup(TaskType::wall);
  setup.config.horizon = 3;
  Env env(setup);
  env.reset(1);
  while (!env.done()) env.step(Action{});
  CHECK_THROWS_AS(env.step(Action{}), std::logic_error);
  Env fresh(setup);
  CHECK_THROWS_AS(fresh.step(Action{}), std::logic_error);  // not reset yet
}

TEST_CASE("unused observation slots are zero-filled per task") {
  auto edge_setup = make_task_setup(TaskType::edge);
  Env env(edge_setup);
  Observation o = env.reset(2);
  CHECK(o[Observation::kCp] == 0.0);
  CHECK(o[Observation::kCp + 1] == 0.0);

  auto reach_setup = make_task_setup(TaskType::reach);
  Env reach_env(reach_setup);
  o = reach_env.reset(2);
  for (int i = 0; i < 3; ++i) CHECK(o[Observation::kObjPose + i] == 0.0);
}
