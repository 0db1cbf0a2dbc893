#include "pushgrasp/pipeline/scripted.hpp"

#include <cmath>
#include <memory>

namespace pushgrasp::pipeline {

using tasks::Action;
using tasks::EnvSetup;
using tasks::Observation;
using tasks::Policy;

namespace {

Vec2 obs_vec(const Observation& o, int idx) { return {o[idx], o[idx + 1]}; }

double home_link3_angle(const EnvSetup& s) { return s.home_q[0] + s.home_q[1] + s.home_q[2]; }

}  // namespace

Action servo_finger_tip(const EnvSetup& setup, const Observation& obs, const Vec2& tip_target,
                        double thumb_q, double finger_q) {
  Action a;
  a.hand_abs = {thumb_q, finger_q};

  std::array<double, sim::kNumJoints> q;
  for (int i = 0; i < sim::kNumJoints; ++i) q[i] = obs[Observation::kQ + i];
  q[3] = thumb_q;
  q[4] = finger_q;
  Vec2 tip = sim::forward_kinematics(setup.robot, q)[1];
  Vec2 err = tip_target - tip;
  double n = err.norm();
  if (n > 0.05) err = err * (0.05 / n);  // bounded tracking step

  // Damped least squares on the numeric 2x3 fingertip Jacobian.
  double jac[2][3];
  const double eps = 1e-6;
  for (int i = 0; i < 3; ++i) {
    auto qp = q;
    qp[i] += eps;
    Vec2 tp = sim::forward_kinematics(setup.robot, qp)[1];
    jac[0][i] = (tp.x - tip.x) / eps;
    jac[1][i] = (tp.y - tip.y) / eps;
  }
  double a00 = 0, a01 = 0, a11 = 0;
  for (int i = 0; i < 3; ++i) {
    a00 += jac[0][i] * jac[0][i];
    a01 += jac[0][i] * jac[1][i];
    a11 += jac[1][i] * jac[1][i];
  }
  const double lambda = 1e-3;
  a00 += lambda;
  a11 += lambda;
  double det = a00 * a11 - a01 * a01;
  if (std::abs(det) < 1e-12) return a;
  double bx = (a11 * err.x - a01 * err.y) / det;
  double by = (a00 * err.y - a01 * err.x) / det;
  for (int i = 0; i < 3; ++i) a.arm_delta[i] = jac[0][i] * bx + jac[1][i] * by;
  return a;
}

Policy scripted_push(const EnvSetup& setup) {
  return [setup](const Observation& obs) {
    Vec2 obj = obs_vec(obs, Observation::kObjPose);
    Vec2 target = obs_vec(obs, Observation::kTarget);
    double remaining = distance(obj, target);
    if (remaining < 0.015) {
      Action hold;
      hold.hand_abs = {setup.home_q[3], setup.home_q[4]};
      return hold;
    }
    Vec2 dir = (target - obj) * (1.0 / remaining);
    Vec2 tip = obs_vec(obs, Observation::kTips + 2);
    Vec2 rel = tip - obj;
    double along = rel.dot(dir);
    double lateral = rel.cross(dir);
    bool behind = along < -0.04 && std::abs(lateral) < 0.05;
    if (!behind) {
      // Stage behind the push line first, detouring around the object.
      Vec2 waypoint = obj - dir * 0.16;
      if (along > -0.04 && rel.norm() < 0.18) {
        double side = lateral >= 0.0 ? 1.0 : -1.0;
        waypoint = obj + dir.perp() * (side * 0.16) - dir * 0.05;
      }
      return servo_finger_tip(setup, obs, waypoint, setup.home_q[3], setup.home_q[4]);
    }
    // Push through the center line: contact point diametrally opposite the
    // target direction, so the push is torque-free.
    Vec2 push_point = obj - dir * 0.07;
    return servo_finger_tip(setup, obs, push_point, setup.home_q[3], setup.home_q[4]);
  };
}

Policy scripted_wall(const EnvSetup& setup) {
  // Phase state lives in the closure; policies are re-created per episode by
  // callers that need fresh state (the arc parameter only ever advances).
  auto arc_angle = std::make_shared<double>(0.0);
  return [setup, arc_angle](const Observation& obs) {
    Vec2 obj = obs_vec(obs, Observation::kObjPose);
    Vec2 cp = obs_vec(obs, Observation::kCp);
    Vec2 finger = obs_vec(obs, Observation::kTips + 2);
    Vec2 corner{setup.scene.wall_x.value_or(setup.scene.table_x_max), setup.scene.table_top_z};
    if (*arc_angle == 0.0 && distance(finger, cp) > 0.02) {
      return servo_finger_tip(setup, obs, cp, setup.home_q[3], setup.home_q[4]);
    }
    *arc_angle = std::min(*arc_angle + 0.02, 1.9);
    Vec2 start = obj - Vec2{0.0, 0.0};  // pivot the object's center line up the wall
    Vec2 radial = start - corner;
    Vec2 tip_target = corner + Rot2(*arc_angle).rotate(radial * 0.98);
    return servo_finger_tip(setup, obs, tip_target, setup.home_q[3], setup.home_q[4]);
  };
}

Policy scripted_edge(const EnvSetup& setup) {
  auto phase = std::make_shared<int>(0);
  return [setup, phase](const Observation& obs) {
    Vec2 obj = obs_vec(obs, Observation::kObjPose);
    Vec2 thumb = obs_vec(obs, Observation::kTips);
    Vec2 finger = obs_vec(obs, Observation::kTips + 2);
    double table_z = setup.scene.table_top_z;
    double edge_x = setup.scene.table_x_max;
    double r = setup.robot.fingertip_radius;

    // Targets: thumb presses the exposed top, finger curls under the overhang.
    Vec2 under{edge_x + 0.035, table_z - 0.035};
    Vec2 top{obj.x, obj.y + 0.035};

    switch (*phase) {
      case 0: {  // descend beyond the edge
        Vec2 staging{edge_x + 0.05, table_z - 0.02};
        if (distance(finger, staging) < 0.015) *phase = 1;
        return servo_finger_tip(setup, obs, staging, setup.home_q[3], setup.home_q[4]);
      }
      case 1: {  // curl the finger under the object
        if (finger.x < obj.x + 0.01 && finger.y < obj.y) *phase = 2;
        Vec2 under_obj{obj.x - 0.01, table_z - 0.5 * 0.043 - r};
        return servo_finger_tip(setup, obs, under_obj, setup.home_q[3] - 0.4, setup.home_q[4]);
      }
      default: {  // squeeze and lift
        Vec2 lift{obj.x - 0.02, std::min(obj.y, thumb.y) + 0.06};
        Action a = servo_finger_tip(setup, obs, lift, setup.home_q[3] - 0.9, setup.home_q[4] + 0.5);
        return a;
      }
    }
    (void)under;
    (void)top;
  };
}

Policy scripted_policy(const EnvSetup& setup) {
  switch (setup.config.task) {
    case tasks::TaskType::push:
      return scripted_push(setup);
    case tasks::TaskType::wall:
      return scripted_wall(setup);
    case tasks::TaskType::edge:
      return scripted_edge(setup);
    case tasks::TaskType::reach:
      return [setup](const Observation& obs) {
        Vec2 target = obs_vec(obs, Observation::kTarget);
        return servo_finger_tip(setup, obs, target, setup.home_q[3], setup.home_q[4]);
      };
  }
  throw std::invalid_argument("scripted_policy: unknown task");
}

}  // namespace pushgrasp::pipeline
