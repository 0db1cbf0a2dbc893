#ifndef PUSHGRASP_REWARD_REWARD_HPP_
#define PUSHGRASP_REWARD_REWARD_HPP_

#include "pushgrasp/common.hpp"

namespace pushgrasp::reward {

enum class Skill { push, wall, edge };

const char* skill_name(Skill s);
Skill skill_from_name(const std::string& name);

struct RewardConfig {
  double w_motion = 1.0;
  double w_pregrasp = 2.0;
  double w_grasp = 4.0;
  double sigma_motion = 0.10;   // m
  double sigma_pregrasp = 0.05; // m
  double sigma_grasp = 0.05;    // m
  double pregrasp_switch_dist = 0.03;  // m, wall stage switch
  double cp_offset = 0.07;             // m, contact point offset along the width axis
  double wall_lift_offset = 0.10;      // m, lift target above the skill-start pose
  double edge_thumb_offset = 0.015;    // m, thumb target above the object center
  double edge_finger_offset = -0.005;  // m, finger target below the object center
  bool stage_gates_disabled = false;   // ablation: gates pinned to (1, 1)

  void validate() const;
};

// Per-episode latch state of the staged reward.
struct StageState {
  bool pregrasp_latched = false;  // wall: switched from pre-grasp to grasp
  bool grasp_latched = false;     // edge: finger reached below the object
};

// Bounded proximity shaping exp(-|a-b| / sigma); 1 iff a == b.
double proximity(const Vec2& a, const Vec2& b, double sigma);

// c_p = object center + d * (width axis rotated into the world frame).
// width_axis_unit is expressed in the object frame and must be unit length.
Vec2 contact_point(const Vec2& obj_center, double obj_angle, const Vec2& width_axis_unit, double d);

struct RewardInputs {
  Vec2 obj_pos;
  double obj_angle = 0.0;
  double obj_half_width = 0.0;   // for the edge under-object test
  double obj_half_height = 0.0;
  Vec2 thumb_tip;
  Vec2 finger_tip;   // aggregated finger-group tip (the "middle finger")
  Vec2 target;       // P_t, used by push r_motion
  Vec2 anchor;       // object pose at skill start, used by wall r_motion
  Vec2 cp;           // current contact point
};

struct Gates {
  int p_a = 0;
  int p_b = 0;
};

// Advances the latch state and returns the active condition gates.
Gates stage_gates(Skill skill, const RewardInputs& in, const RewardConfig& cfg, StageState& stage);

struct RewardBreakdown {
  double r_motion = 0.0;
  double r_pregrasp = 0.0;
  double r_grasp = 0.0;
  int p_a = 0;
  int p_b = 0;
  double total = 0.0;
};

// r = w_m * r_motion + w_p * r_pregrasp * P(a) + w_g * r_grasp * P(b)
RewardBreakdown compute_reward(Skill skill, const RewardInputs& in, StageState& stage,
                               const RewardConfig& cfg);

}  // namespace pushgrasp::reward

#endif  // PUSHGRASP_REWARD_REWARD_HPP_
