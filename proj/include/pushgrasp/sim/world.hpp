#ifndef PUSHGRASP_SIM_WORLD_HPP_
#define PUSHGRASP_SIM_WORLD_HPP_

#include <array>
#include <utility>
#include <vector>

#include "pushgrasp/sim/types.hpp"

namespace pushgrasp::sim {

// Planar forward kinematics of the 3-link arm with two digit tips mounted on
// the wrist. Returns {thumb tip, finger-group tip}.
std::array<Vec2, 2> forward_kinematics(const RobotSpec& spec, const std::array<double, kNumJoints>& q);

// Wrist position (end of the third arm link).
Vec2 wrist_position(const RobotSpec& spec, const std::array<double, kNumJoints>& q);

// Closed-form 3-link IK: place the wrist at `wrist` with the third link at
// world angle `link3_angle`. Returns the elbow-up or elbow-down solution, or
// nullopt when out of reach.
std::optional<std::array<double, kNumArmJoints>> arm_ik(const RobotSpec& spec, const Vec2& wrist,
                                                        double link3_angle, bool elbow_up = true);

struct StepResult {
  BodyState body;
  RobotState robot;
  std::vector<ContactRecord> contacts;  // active contacts at the end of the step
};

// Advances object and robot by dt using `substeps` semi-implicit Euler
// substeps. The robot tracks clamped joint targets through a PD response and
// is not perturbed by contact forces (one-way coupling). Throws on
// non-finite input state ("numerical divergence") and on deep penetration
// ("tunneling").
StepResult step(const SceneSpec& scene, const ObjectSpec& obj, const RobotSpec& robot_spec,
                const BodyState& body, const RobotState& robot,
                const std::array<double, kNumJoints>& joint_targets, double dt, int substeps);

RobotState make_robot_state(const RobotSpec& spec, const std::array<double, kNumJoints>& q);

SupportState object_support_state(const SceneSpec& scene, const ObjectSpec& obj, const BodyState& body);

// Corners of the object's box in world frame, counter-clockwise from (-w/2,-h/2).
std::array<Vec2, 4> object_corners(const ObjectSpec& obj, const BodyState& body);

// Penetration depth of a fingertip disc into the object box; 0 when separated.
double tip_penetration(const ObjectSpec& obj, const BodyState& body, const Vec2& tip, double radius);

// Total mechanical energy including elastic energy stored in penalty
// contacts; used by the energy-sanity property.
double mechanical_energy(const SceneSpec& scene, const ObjectSpec& obj, const BodyState& body,
                         const std::vector<ContactRecord>& contacts);

// Flat resting pose at horizontal position x with the penalty springs at
// static equilibrium (side view). Top-down scenes just place the object.
BodyState resting_state(const SceneSpec& scene, const ObjectSpec& obj, double x, double second_coord = 0.0);

}  // namespace pushgrasp::sim

#endif  // PUSHGRASP_SIM_WORLD_HPP_
