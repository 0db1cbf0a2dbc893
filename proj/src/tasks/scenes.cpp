#include "pushgrasp/tasks/env.hpp"

#include <stdexcept>

namespace pushgrasp::tasks {

namespace {

constexpr double kTableTopZ = 0.40;
constexpr double kTableXMin = 0.0;
constexpr double kTableXMax = 0.60;
constexpr double kWallX = 0.55;

sim::RobotSpec side_robot() {
  sim::RobotSpec r;
  r.base_position = {0.10, 0.75};
  // Digit joints sweep a physical +-92 deg; full circles just bloat the
  // exploration space.
  r.joint_limits[3] = {-1.6, 1.6};
  r.joint_limits[4] = {-1.6, 1.6};
  return r;
}

sim::RobotSpec top_robot() {
  sim::RobotSpec r;
  r.base_position = {-0.20, 0.0};
  r.joint_limits[3] = {-1.6, 1.6};
  r.joint_limits[4] = {-1.6, 1.6};
  return r;
}

std::array<double, sim::kNumJoints> home_from_ik(const sim::RobotSpec& robot, const Vec2& wrist,
                                                 double link3_angle, double thumb_q, double finger_q) {
  auto arm = sim::arm_ik(robot, wrist, link3_angle);
  if (!arm) throw std::logic_error("task setup: home wrist pose out of reach");
  return {(*arm)[0], (*arm)[1], (*arm)[2], thumb_q, finger_q};
}

}  // namespace

void TaskConfig::validate() const {
  if (horizon <= 0) throw std::invalid_argument("task: horizon must be > 0");
  if (success_height <= 0) throw std::invalid_argument("task: success_height must be > 0");
  if (success_hold_steps <= 0 || push_hold_steps <= 0)
    throw std::invalid_argument("task: hold steps must be > 0");
  if (max_arm_delta <= 0) throw std::invalid_argument("task: max_arm_delta must be > 0");
  if (control_dt <= 0 || physics_substeps < 1) throw std::invalid_argument("task: bad timing");
  if (randomization.mass_lo > randomization.mass_hi || randomization.friction_lo > randomization.friction_hi ||
      randomization.size_lo > randomization.size_hi)
    throw std::invalid_argument("task: degenerate randomization ranges");
  if (curriculum_stage < 0 || curriculum_stage > 2) throw std::invalid_argument("task: curriculum stage in [0,2]");
}

EnvSetup make_task_setup(TaskType task) {
  EnvSetup s;
  s.config.task = task;
  s.scene.table_top_z = kTableTopZ;
  s.scene.table_x_min = kTableXMin;
  s.scene.table_x_max = kTableXMax;

  switch (task) {
    case TaskType::push:
      s.scene.plane = sim::Plane::top_down;
      s.robot = top_robot();
      s.config.horizon = 150;
      s.config.init_region = {0.20, 0.30, -0.08, 0.08};
      // Top-down footprint: width x depth of the flat box.
      s.object.height = 0.12;
      // Push cares mostly about relocation accuracy.
      s.reward.w_motion = 2.5;
      s.reward.sigma_motion = 0.12;
      s.home_q = home_from_ik(s.robot, {0.02, -0.06}, 0.0, 0.6, -0.6);
      break;
    case TaskType::wall:
      s.scene.plane = sim::Plane::side_view;
      s.scene.wall_x = kWallX;
      s.robot = side_robot();
      s.object.height = 0.045;
      s.config.horizon = 120;
      // Crossing the stage gate must not cost reward: keep the pregrasp term
      // no larger than what the grasp term pays right after the switch, and
      // make the lift itself worth leaving a comfortable hug.
      s.reward.w_motion = 2.5;
      s.reward.w_pregrasp = 1.0;
      s.reward.sigma_grasp = 0.08;
      // Spawn band: wall gap in [0.02, 0.05] at the nominal width.
      s.config.init_region = {kWallX - 0.05 - 0.10, kWallX - 0.02 - 0.06, kTableTopZ, kTableTopZ + 0.05};
      s.home_q = home_from_ik(s.robot, {0.25, 0.51}, -0.9, 0.9, -0.4);
      break;
    case TaskType::edge:
      s.scene.plane = sim::Plane::side_view;
      s.robot = side_robot();
      s.object.height = 0.045;
      s.config.horizon = 120;
      s.config.init_region = {kTableXMax - 0.30 * 0.20, kTableXMax + 0.0, kTableTopZ, kTableTopZ + 0.05};
      s.home_q = home_from_ik(s.robot, {0.59, 0.56}, -1.3, -0.95, 0.3);
      break;
    case TaskType::reach:
      s.scene.plane = sim::Plane::side_view;
      s.robot = side_robot();
      s.config.horizon = 60;
      s.config.push_tolerance = 0.03;
      s.config.push_hold_steps = 3;
      s.config.init_region = {0.28, 0.48, 0.50, 0.62};  // reach targets, not object spawns
      s.home_q = home_from_ik(s.robot, {0.30, 0.55}, -0.7, 0.6, -0.6);
      break;
  }
  s.config.validate();
  s.scene.validate();
  s.object.validate();
  s.robot.validate();
  s.reward.validate();
  return s;
}

}  // namespace pushgrasp::tasks
