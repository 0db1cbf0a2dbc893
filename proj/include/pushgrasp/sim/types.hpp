#ifndef PUSHGRASP_SIM_TYPES_HPP_
#define PUSHGRASP_SIM_TYPES_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pushgrasp/common.hpp"

namespace pushgrasp::sim {

// Working plane of a scene. Push runs top-down in the table plane (no
// gravity, table friction acts on the sliding object); wall and edge run in
// a side-view vertical plane (gravity on, table/wall/edge contacts).
enum class Plane { top_down, side_view };

struct SceneSpec {
  Plane plane = Plane::side_view;
  double table_top_z = 0.0;   // table surface height; in top_down this is the plane itself
  double table_x_min = 0.0;   // table extent along the push axis
  double table_x_max = 0.6;
  std::optional<double> wall_x;  // vertical wall face, present only in wall scenes
  double gravity = 9.81;         // magnitude, acts along -z in side view
  double friction_table = 0.5;
  double friction_wall = 0.4;
  double friction_finger = 0.9;
  double restitution = 0.0;
  // Penalty contact parameters.
  double contact_stiffness = 5e3;   // N/m
  double contact_damping = 50.0;    // N*s/m
  double friction_reg_vel = 1e-3;   // m/s, tanh regularization velocity

  void validate() const;
};

struct ObjectSpec {
  double width = 0.16;   // planar cross-section along the object's width axis
  double height = 0.05;  // second cross-section dimension (vertical in side view)
  double mass = 0.3;
  double inertia = 0.0;  // auto-derived for a uniform box when <= 0

  double effective_inertia() const {
    if (inertia > 0.0) return inertia;
    return mass * (width * width + height * height) / 12.0;
  }
  void validate() const;
};

struct BodyState {
  Vec2 position;           // (x, z) in side view, (x, y) in top-down
  double angle = 0.0;      // radians
  Vec2 linear_velocity;
  double angular_velocity = 0.0;

  bool finite() const {
    return position.finite() && linear_velocity.finite() && std::isfinite(angle) &&
           std::isfinite(angular_velocity);
  }
};

inline constexpr int kNumArmJoints = 3;
inline constexpr int kNumHandJoints = 2;  // thumb, aggregated finger group
inline constexpr int kNumJoints = kNumArmJoints + kNumHandJoints;

struct JointLimit {
  double lo = -3.14;
  double hi = 3.14;
};

struct PdGain {
  double kp = 400.0;
  double kd = 40.0;  // critically damped for unit joint mass when kd = 2*sqrt(kp)
};

struct RobotSpec {
  std::array<double, kNumArmJoints> link_lengths{0.30, 0.28, 0.14};
  Vec2 base_position{0.0, 0.75};
  double thumb_length = 0.05;
  double finger_length = 0.07;
  double fingertip_radius = 0.012;
  std::array<JointLimit, kNumJoints> joint_limits{
      JointLimit{-3.1, 3.1}, JointLimit{-3.1, 3.1}, JointLimit{-3.1, 3.1},
      JointLimit{-3.1, 3.1}, JointLimit{-3.1, 3.1}};
  std::array<PdGain, kNumJoints> pd_gains{PdGain{}, PdGain{}, PdGain{}, PdGain{}, PdGain{}};
  double max_joint_speed = 4.0;  // rad/s

  void validate() const;
};

struct RobotState {
  std::array<double, kNumJoints> q{};
  std::array<double, kNumJoints> qd{};
  std::array<Vec2, 2> fingertips{};  // thumb tip, finger-group tip; always FK(q)

  bool finite() const;
};

enum class ContactPair { object_table, object_wall, thumb_object, fingers_object };

struct ContactRecord {
  ContactPair pair = ContactPair::object_table;
  Vec2 point;
  Vec2 normal;             // unit, points out of the passive surface toward the object
  double normal_force = 0.0;   // N, >= 0
  double tangent_force = 0.0;  // N, signed along normal.perp()
  double penetration = 0.0;    // m, used by energy accounting
};

const char* contact_pair_name(ContactPair p);

// Discrete support classification of the object relative to table/wall.
enum class SupportKind { on_table, overhanging, against_wall, airborne, fallen };

struct SupportState {
  SupportKind kind = SupportKind::on_table;
  double overhang_fraction = 0.0;  // valid when kind == overhanging
  double wall_gap = 0.0;           // valid when kind == against_wall
};

const char* support_kind_name(SupportKind k);

}  // namespace pushgrasp::sim

#endif  // PUSHGRASP_SIM_TYPES_HPP_
