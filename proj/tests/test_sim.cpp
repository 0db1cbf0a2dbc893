#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <cstring>

#include "pushgrasp/sim/world.hpp"

using namespace pushgrasp;
using namespace pushgrasp::sim;

namespace {

SceneSpec side_scene() {
  SceneSpec s;
  s.plane = Plane::side_view;
  s.table_top_z = 0.40;
  s.table_x_min = 0.0;
  s.table_x_max = 0.60;
  return s;
}

SceneSpec top_scene() {
  SceneSpec s;
  s.plane = Plane::top_down;
  s.table_top_z = 0.40;
  s.table_x_min = 0.0;
  s.table_x_max = 0.60;
  return s;
}

RobotSpec parked_robot() {
  // Home pose far from the table so the object is untouched.
  RobotSpec r;
  r.base_position = {-0.5, 1.5};
  return r;
}

std::array<double, kNumJoints> zeros() { return {}; }

// Independent FK oracle: chain of unit complex rotations.
std::array<Vec2, 2> fk_oracle(const RobotSpec& spec, const std::array<double, kNumJoints>& q) {
  using C = std::complex<double>;
  C pos(spec.base_position.x, spec.base_position.y);
  C dir(1.0, 0.0);
  for (int i = 0; i < kNumArmJoints; ++i) {
    dir *= std::polar(1.0, q[i]);
    pos += dir * spec.link_lengths[i];
  }
  C thumb = pos + dir * std::polar(1.0, q[3]) * spec.thumb_length;
  C finger = pos + dir * std::polar(1.0, q[4]) * spec.finger_length;
  return {Vec2{thumb.real(), thumb.imag()}, Vec2{finger.real(), finger.imag()}};
}

}  // namespace

TEST_CASE("fk zero configuration is the fully extended pose") {
  RobotSpec r;
  auto tips = forward_kinematics(r, zeros());
  double reach = r.link_lengths[0] + r.link_lengths[1] + r.link_lengths[2];
  CHECK(tips[0].x == doctest::Approx(r.base_position.x + reach + r.thumb_length).epsilon(1e-12));
  CHECK(tips[0].y == doctest::Approx(r.base_position.y).epsilon(1e-12));
  CHECK(tips[1].x == doctest::Approx(r.base_position.x + reach + r.finger_length).epsilon(1e-12));
}

TEST_CASE("fk is 2pi periodic") {
  RobotSpec r;
  r.joint_limits = {JointLimit{-10, 10}, JointLimit{-10, 10}, JointLimit{-10, 10},
                    JointLimit{-10, 10}, JointLimit{-10, 10}};
  std::array<double, kNumJoints> q{0.3, -1.1, 0.7, 0.2, -0.5};
  auto q2 = q;
  q2[1] += 2.0 * M_PI;
  auto a = forward_kinematics(r, q);
  auto b = forward_kinematics(r, q2);
  for (int i = 0; i < 2; ++i) CHECK((a[i] - b[i]).norm() < 1e-9);
}

TEST_CASE("fk matches complex-chain oracle on random configurations") {
  RobotSpec r;
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<double, kNumJoints> q;
    for (auto& v : q) v = rng.uniform(-3.0, 3.0);
    auto got = forward_kinematics(r, q);
    auto want = fk_oracle(r, q);
    for (int i = 0; i < 2; ++i) CHECK((got[i] - want[i]).norm() < 1e-12);
  }
}

TEST_CASE("object at rest on the table stays put") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot = parked_robot();
  BodyState body = resting_state(scene, obj, 0.3);
  RobotState rs = make_robot_state(robot, zeros());
  BodyState b = body;
  for (int i = 0; i < 100; ++i) {
    auto res = step(scene, obj, robot, b, rs, zeros(), 1.0 / 240.0, 8);
    b = res.body;
    rs = res.robot;
  }
  CHECK((b.position - body.position).norm() < 1e-6);
  CHECK(std::abs(b.angle - body.angle) < 1e-6);
}

TEST_CASE("ballistic drop reaches the closed-form impact speed") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot = parked_robot();
  double drop = 0.05;
  BodyState body;
  body.position = {0.3, scene.table_top_z + obj.height / 2.0 + drop};
  RobotState rs = make_robot_state(robot, zeros());
  double dt = 1.0 / 2000.0;
  double v_before = 0.0;
  for (int i = 0; i < 5000; ++i) {
    auto res = step(scene, obj, robot, body, rs, zeros(), dt, 1);
    if (!res.contacts.empty()) break;
    body = res.body;
    v_before = std::abs(body.linear_velocity.y);
  }
  double v_expect = std::sqrt(2.0 * scene.gravity * drop);
  CHECK(v_before == doctest::Approx(v_expect).epsilon(0.02));
}

TEST_CASE("pushed object gains exactly the integrated contact impulse") {
  SceneSpec scene = top_scene();
  scene.friction_table = 0.0;
  ObjectSpec obj;
  RobotSpec robot;
  robot.base_position = {0.0, 0.0};
  // Arm extended along +x; the object sits just above the fingertip so a
  // slow base-joint sweep pushes the tip into its lower face.
  double tip_x = robot.link_lengths[0] + robot.link_lengths[1] + robot.link_lengths[2] +
                 robot.finger_length;
  BodyState body;
  body.position = {tip_x, robot.fingertip_radius + obj.height / 2.0 + 0.005};
  RobotState rs = make_robot_state(robot, zeros());
  double dt = 1.0 / 240.0;
  Vec2 impulse{0.0, 0.0};
  BodyState b = body;
  bool touched = false;
  for (int i = 0; i < 480; ++i) {
    std::array<double, kNumJoints> targets{};
    targets[0] = 0.08 * ((i + 1) * dt);  // constant-rate sweep toward +y
    auto res = step(scene, obj, robot, b, rs, targets, dt, 1);
    for (const auto& c : res.contacts) {
      if (c.pair == ContactPair::thumb_object || c.pair == ContactPair::fingers_object) {
        touched = true;
        Vec2 f = c.normal * (-c.normal_force) + c.normal.perp() * c.tangent_force;
        impulse += f * dt;
      }
    }
    b = res.body;
    rs = res.robot;
  }
  CHECK(touched);
  Vec2 momentum = b.linear_velocity * obj.mass;
  CHECK(momentum.norm() > 1e-5);
  CHECK(b.linear_velocity.y > 0.0);  // pushed along the sweep direction
  CHECK((momentum - impulse).norm() < 0.05 * std::max(momentum.norm(), 1e-12));
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot;
  robot.base_position = {0.05, 0.75};
  BodyState body = resting_state(scene, obj, 0.35);
  auto run = [&] {
    BodyState b = body;
    RobotState rs = make_robot_state(robot, {0.2, -0.5, 0.3, 0.5, -0.5});
    std::vector<double> trace;
    for (int i = 0; i < 60; ++i) {
      std::array<double, kNumJoints> t{0.2 - 0.01 * i, -0.5, 0.3, 0.5, -0.5};
      auto res = step(scene, obj, robot, b, rs, t, 1.0 / 240.0, 8);
      b = res.body;
      rs = res.robot;
      trace.push_back(b.position.x);
      trace.push_back(b.position.y);
      trace.push_back(b.angle);
      trace.push_back(rs.q[0]);
    }
    return trace;
  };
  auto a = run();
  auto c = run();
  REQUIRE(a.size() == c.size());
  CHECK(std::memcmp(a.data(), c.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("energy is non-increasing each step during a damped drop") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot = parked_robot();
  BodyState body;
  body.position = {0.3, scene.table_top_z + obj.height / 2.0 + 0.005};
  body.angle = 0.05;
  RobotState rs = make_robot_state(robot, zeros());
  double dt = 1.0 / 2000.0;
  BodyState b = body;
  double prev_e = mechanical_energy(scene, obj, b, {});
  for (int i = 0; i < 6000; ++i) {
    auto res = step(scene, obj, robot, b, rs, zeros(), dt, 1);
    double e = mechanical_energy(scene, obj, b, res.contacts);
    CHECK(e <= prev_e + 1e-4);
    prev_e = e;
    b = res.body;
  }
  CHECK(std::abs(b.linear_velocity.y) < 0.01);  // settled
}

TEST_CASE("a hard drop at control-rate dt dissipates and settles") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot = parked_robot();
  BodyState body;
  body.position = {0.3, scene.table_top_z + obj.height / 2.0 + 0.03};
  body.angle = 0.05;
  RobotState rs = make_robot_state(robot, zeros());
  BodyState b = body;
  double e0 = mechanical_energy(scene, obj, b, {});
  std::vector<ContactRecord> last;
  for (int i = 0; i < 200; ++i) {
    auto res = step(scene, obj, robot, b, rs, zeros(), 1.0 / 30.0, 16);
    b = res.body;
    last = res.contacts;
  }
  CHECK(mechanical_energy(scene, obj, b, last) <= e0);
  CHECK(std::abs(b.linear_velocity.y) < 0.01);
  CHECK(std::abs(b.angle) < 0.01);  // rocked flat
}

TEST_CASE("friction cone holds for every recorded contact") {
  SceneSpec scene = side_scene();
  scene.wall_x = 0.55;
  ObjectSpec obj;
  RobotSpec robot;
  robot.base_position = {0.05, 0.75};
  Rng rng(11);
  BodyState b = resting_state(scene, obj, 0.45);
  b.linear_velocity = {0.3, 0.0};
  RobotState rs = make_robot_state(robot, {0.3, -0.8, 0.2, 0.6, -0.6});
  for (int i = 0; i < 400; ++i) {
    std::array<double, kNumJoints> t;
    for (int j = 0; j < kNumJoints; ++j) t[j] = rs.q[j] + rng.uniform(-0.05, 0.05);
    auto res = step(scene, obj, robot, b, rs, t, 1.0 / 240.0, 8);
    for (const auto& c : res.contacts) {
      double mu = c.pair == ContactPair::object_table ? scene.friction_table
                  : c.pair == ContactPair::object_wall ? scene.friction_wall
                                                       : scene.friction_finger;
      CHECK(std::abs(c.tangent_force) <= mu * c.normal_force + 1e-6);
      CHECK(c.normal_force >= 0.0);
      CHECK(std::abs(c.normal.norm() - 1.0) < 1e-9);
    }
    b = res.body;
    rs = res.robot;
  }
}

TEST_CASE("no phantom forces without contacts or gravity") {
  SceneSpec scene = side_scene();
  scene.gravity = 0.0;
  ObjectSpec obj;
  RobotSpec robot = parked_robot();
  BodyState body;
  body.position = {0.3, scene.table_top_z + 0.2};
  body.linear_velocity = {0.013, -0.007};
  body.angular_velocity = 0.11;
  RobotState rs = make_robot_state(robot, zeros());
  BodyState b = body;
  for (int i = 0; i < 50; ++i) {
    auto res = step(scene, obj, robot, b, rs, zeros(), 1.0 / 240.0, 4);
    CHECK(res.contacts.empty());
    b = res.body;
  }
  CHECK(std::abs(b.linear_velocity.x - body.linear_velocity.x) < 1e-12);
  CHECK(std::abs(b.linear_velocity.y - body.linear_velocity.y) < 1e-12);
  CHECK(std::abs(b.angular_velocity - body.angular_velocity) < 1e-12);
}

TEST_CASE("fingertips always equal FK of the joint state") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot;
  robot.base_position = {0.05, 0.75};
  BodyState b = resting_state(scene, obj, 0.35);
  RobotState rs = make_robot_state(robot, {0.1, -0.4, 0.2, 0.4, -0.4});
  for (int i = 0; i < 100; ++i) {
    std::array<double, kNumJoints> t{0.1 + 0.002 * i, -0.4, 0.2, 0.4, -0.4};
    auto res = step(scene, obj, robot, b, rs, t, 1.0 / 240.0, 8);
    b = res.body;
    rs = res.robot;
    auto fk = forward_kinematics(robot, rs.q);
    CHECK((rs.fingertips[0] - fk[0]).norm() == 0.0);
    CHECK((rs.fingertips[1] - fk[1]).norm() == 0.0);
  }
}

TEST_CASE("support state classification") {
  SceneSpec scene = side_scene();
  scene.wall_x = 0.55;
  ObjectSpec obj;

  SUBCASE("mid-table box is on_table") {
    BodyState b = resting_state(scene, obj, 0.3);
    CHECK(object_support_state(scene, obj, b).kind == SupportKind::on_table);
  }
  SUBCASE("straddling the edge with half the width beyond") {
    SceneSpec s = side_scene();  // no wall
    BodyState b = resting_state(s, obj, s.table_x_max);
    auto st = object_support_state(s, obj, b);
    CHECK(st.kind == SupportKind::overhanging);
    CHECK(st.overhang_fraction == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("face near the wall reports the analytic gap") {
    BodyState b = resting_state(scene, obj, *scene.wall_x - 0.02 - obj.width / 2.0);
    auto st = object_support_state(scene, obj, b);
    CHECK(st.kind == SupportKind::against_wall);
    CHECK(st.wall_gap == doctest::Approx(0.02).epsilon(1e-9));
  }
  SUBCASE("grasped box high above the table is airborne") {
    BodyState b;
    b.position = {0.3, scene.table_top_z + 0.2};
    CHECK(object_support_state(scene, obj, b).kind == SupportKind::airborne);
  }
  SUBCASE("box below the table surface has fallen") {
    BodyState b;
    b.position = {0.7, scene.table_top_z - 2.0 * obj.height};
    CHECK(object_support_state(scene, obj, b).kind == SupportKind::fallen);
  }
}

TEST_CASE("tunneling raises a diagnostic error") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot = parked_robot();
  BodyState body;
  body.position = {0.3, scene.table_top_z + obj.height / 2.0};
  body.linear_velocity = {0.0, -20.0};
  RobotState rs = make_robot_state(robot, zeros());
  BodyState b = body;
  bool threw = false;
  try {
    for (int i = 0; i < 10; ++i) {
      auto res = step(scene, obj, robot, b, rs, zeros(), 1.0 / 240.0, 1);
      b = res.body;
    }
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("tunneling") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("non-finite state raises numerical divergence") {
  SceneSpec scene = side_scene();
  ObjectSpec obj;
  RobotSpec robot = parked_robot();
  BodyState body;
  body.position = {std::nan(""), 0.5};
  RobotState rs = make_robot_state(robot, zeros());
  CHECK_THROWS_WITH_AS(step(scene, obj, robot, body, rs, zeros(), 1.0 / 240.0, 1),
                       doctest::Contains("numerical divergence"), std::runtime_error);
}
