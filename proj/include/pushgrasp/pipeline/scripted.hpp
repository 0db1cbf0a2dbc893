#ifndef PUSHGRASP_PIPELINE_SCRIPTED_HPP_
#define PUSHGRASP_PIPELINE_SCRIPTED_HPP_

#include "pushgrasp/tasks/metrics.hpp"

namespace pushgrasp::pipeline {

// Proportional fingertip servo: an action whose arm deltas steer the
// finger-group tip toward tip_target with the wrist held at a fixed world
// orientation; hand joints go to the given absolute targets.
tasks::Action servo_finger_tip(const tasks::EnvSetup& setup, const tasks::Observation& obs,
                               const Vec2& tip_target, double thumb_q, double finger_q);

// Scripted primitives used by the Heuristic baseline and as test oracles.
// Push: drive the fingertip to the contact point behind the object and keep
// pushing until the object sits within tolerance of the target.
tasks::Policy scripted_push(const tasks::EnvSetup& setup);

// Wall: sweep the fingertip along a circular arc centered on the wall-table
// corner, pivoting the object up against the wall.
tasks::Policy scripted_wall(const tasks::EnvSetup& setup);

// Edge: thumb onto the exposed top, finger under the overhang, squeeze, lift.
tasks::Policy scripted_edge(const tasks::EnvSetup& setup);

tasks::Policy scripted_policy(const tasks::EnvSetup& setup);  // dispatch on setup task

}  // namespace pushgrasp::pipeline

#endif  // PUSHGRASP_PIPELINE_SCRIPTED_HPP_
