#include "pushgrasp/reward/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace pushgrasp::reward {

const char* skill_name(Skill s) {
  switch (s) {
    case Skill::push: return "push";
    case Skill::wall: return "wall";
    case Skill::edge: return "edge";
  }
  return "?";
}

Skill skill_from_name(const std::string& name) {
  if (name == "push") return Skill::push;
  if (name == "wall") return Skill::wall;
  if (name == "edge") return Skill::edge;
  throw std::invalid_argument("unknown skill: " + name);
}

void RewardConfig::validate() const {
  if (sigma_motion <= 0 || sigma_pregrasp <= 0 || sigma_grasp <= 0)
    throw std::invalid_argument("reward: proximity scales must be > 0");
  if (w_motion < 0 || w_pregrasp < 0 || w_grasp < 0)
    throw std::invalid_argument("reward: weights must be >= 0");
  if (pregrasp_switch_dist <= 0) throw std::invalid_argument("reward: pregrasp_switch_dist must be > 0");
}

double proximity(const Vec2& a, const Vec2& b, double sigma) {
  if (sigma <= 0) throw std::invalid_argument("proximity: sigma must be > 0");
  return std::exp(-distance(a, b) / sigma);
}

Vec2 contact_point(const Vec2& obj_center, double obj_angle, const Vec2& width_axis_unit, double d) {
  if (std::abs(width_axis_unit.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("contact_point: width axis must be unit length");
  return obj_center + Rot2(obj_angle).rotate(width_axis_unit) * d;
}

namespace {

// True once the finger-group tip is below the object's underside plane and
// within its footprint (object frame).
bool finger_below_object(const RewardInputs& in) {
  Vec2 local = Rot2(in.obj_angle).inverse_rotate(in.finger_tip - in.obj_pos);
  return local.y < -in.obj_half_height && std::abs(local.x) <= in.obj_half_width;
}

}  // namespace

Gates stage_gates(Skill skill, const RewardInputs& in, const RewardConfig& cfg, StageState& stage) {
  if (cfg.stage_gates_disabled) return {1, 1};
  switch (skill) {
    case Skill::push:
      return {1, 0};
    case Skill::wall:
      if (!stage.pregrasp_latched && distance(in.finger_tip, in.cp) < cfg.pregrasp_switch_dist)
        stage.pregrasp_latched = true;
      return stage.pregrasp_latched ? Gates{0, 1} : Gates{1, 0};
    case Skill::edge:
      if (!stage.grasp_latched && finger_below_object(in)) stage.grasp_latched = true;
      return {0, stage.grasp_latched ? 1 : 0};
  }
  throw std::invalid_argument("stage_gates: unknown skill");
}

RewardBreakdown compute_reward(Skill skill, const RewardInputs& in, StageState& stage,
                               const RewardConfig& cfg) {
  Gates g = stage_gates(skill, in, cfg, stage);
  RewardBreakdown br;
  br.p_a = g.p_a;
  br.p_b = g.p_b;

  Vec2 grasp_mid = (in.thumb_tip + in.finger_tip) * 0.5;
  br.r_grasp = proximity(grasp_mid, in.obj_pos, cfg.sigma_grasp);

  switch (skill) {
    case Skill::push:
      br.r_motion = proximity(in.obj_pos, in.target, cfg.sigma_motion);
      br.r_pregrasp = proximity(in.finger_tip, in.cp, cfg.sigma_pregrasp);
      break;
    case Skill::wall: {
      Vec2 lift_target = in.anchor + Vec2{0.0, cfg.wall_lift_offset};
      br.r_motion = proximity(in.obj_pos, lift_target, cfg.sigma_motion);
      br.r_pregrasp = proximity(in.finger_tip, in.cp, cfg.sigma_pregrasp);
      break;
    }
    case Skill::edge: {
      Vec2 thumb_target = in.obj_pos + Vec2{0.0, cfg.edge_thumb_offset};
      Vec2 finger_target = in.obj_pos + Vec2{0.0, cfg.edge_finger_offset};
      br.r_motion = -(distance(in.thumb_tip, thumb_target) + distance(in.finger_tip, finger_target));
      br.r_pregrasp = 0.0;
      break;
    }
  }

  br.total = cfg.w_motion * br.r_motion + cfg.w_pregrasp * br.r_pregrasp * g.p_a +
             cfg.w_grasp * br.r_grasp * g.p_b;
  return br;
}

}  // namespace pushgrasp::reward
