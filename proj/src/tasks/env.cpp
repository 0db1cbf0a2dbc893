#include "pushgrasp/tasks/env.hpp"

#include <cmath>
#include <stdexcept>

namespace pushgrasp::tasks {

const char* task_name(TaskType t) {
  switch (t) {
    case TaskType::push: return "push";
    case TaskType::wall: return "wall";
    case TaskType::edge: return "edge";
    case TaskType::reach: return "reach";
  }
  return "?";
}

TaskType task_from_name(const std::string& name) {
  if (name == "push") return TaskType::push;
  if (name == "wall") return TaskType::wall;
  if (name == "edge") return TaskType::edge;
  if (name == "reach") return TaskType::reach;
  throw std::invalid_argument("unknown task: " + name);
}

const char* failure_reason_name(FailureReason f) {
  switch (f) {
    case FailureReason::none: return "none";
    case FailureReason::timeout: return "timeout";
    case FailureReason::fallen: return "fallen";
    case FailureReason::diverged: return "diverged";
  }
  return "?";
}

const std::map<std::string, std::pair<int, int>>& observation_layout() {
  static const std::map<std::string, std::pair<int, int>> layout{
      {"q", {Observation::kQ, 5}},          {"fingertips", {Observation::kTips, 4}},
      {"obj_pose", {Observation::kObjPose, 3}}, {"obj_vel", {Observation::kObjVel, 3}},
      {"target", {Observation::kTarget, 2}},    {"contact_point", {Observation::kCp, 2}}};
  return layout;
}

Action Action::from_raw(const std::array<double, kDim>& raw) {
  Action a;
  for (int i = 0; i < kArmDim; ++i) a.arm_delta[i] = raw[i];
  for (int i = 0; i < kHandDim; ++i) a.hand_abs[i] = raw[kArmDim + i];
  return a;
}

std::array<double, Action::kDim> Action::to_raw() const {
  std::array<double, kDim> raw{};
  for (int i = 0; i < kArmDim; ++i) raw[i] = arm_delta[i];
  for (int i = 0; i < kHandDim; ++i) raw[kArmDim + i] = hand_abs[i];
  return raw;
}

Action action_from_normalized(const EnvSetup& setup, const std::array<double, Action::kDim>& raw) {
  Action a;
  for (int i = 0; i < Action::kArmDim; ++i)
    a.arm_delta[i] = clamp(raw[i], -1.0, 1.0) * setup.config.max_arm_delta;
  for (int i = 0; i < Action::kHandDim; ++i) {
    const auto& jl = setup.robot.joint_limits[Action::kArmDim + i];
    double u = clamp(raw[Action::kArmDim + i], -1.0, 1.0);
    a.hand_abs[i] = jl.lo + (u + 1.0) * 0.5 * (jl.hi - jl.lo);
  }
  return a;
}

std::array<double, Action::kDim> normalized_from_action(const EnvSetup& setup, const Action& a) {
  std::array<double, Action::kDim> raw{};
  for (int i = 0; i < Action::kArmDim; ++i)
    raw[i] = clamp(a.arm_delta[i] / setup.config.max_arm_delta, -1.0, 1.0);
  for (int i = 0; i < Action::kHandDim; ++i) {
    const auto& jl = setup.robot.joint_limits[Action::kArmDim + i];
    raw[Action::kArmDim + i] = clamp(2.0 * (a.hand_abs[i] - jl.lo) / (jl.hi - jl.lo) - 1.0, -1.0, 1.0);
  }
  return raw;
}

bool success_condition(const sim::SceneSpec& scene, const sim::BodyState& body, bool thumb_contact,
                       bool finger_contact, const TaskConfig& cfg) {
  return body.position.y > scene.table_top_z + cfg.success_height && thumb_contact && finger_contact;
}

Env::Env(EnvSetup setup) : setup_(std::move(setup)), rng_(0) {
  setup_.config.validate();
  setup_.scene.validate();
  setup_.object.validate();
  setup_.robot.validate();
  setup_.reward.validate();
  ep_scene_ = setup_.scene;
  ep_object_ = setup_.object;
}

void Env::set_curriculum_stage(int stage) {
  if (stage < 0 || stage > 2) throw std::invalid_argument("curriculum stage must be in [0,2]");
  setup_.config.curriculum_stage = stage;
}

void Env::set_target(const Vec2& target) {
  target_ = target;
  if (setup_.config.task == TaskType::push) {
    Vec2 axis = Rot2(body_.angle).rotate({1.0, 0.0});
    cp_sign_ = axis.dot(target_ - body_.position) >= 0.0 ? -1.0 : 1.0;
  }
}

Vec2 Env::current_cp() const {
  return reward::contact_point(body_.position, body_.angle, {cp_sign_, 0.0}, setup_.reward.cp_offset);
}

void Env::spawn_episode(uint64_t seed, const sim::BodyState* forced_body,
                        const sim::ObjectSpec* forced_object) {
  rng_ = Rng(seed);
  spawn_pregrasp_done_ = false;
  const TaskConfig& cfg = setup_.config;
  int stage = cfg.curriculum_stage;

  // Episode object and scene draws come first so the rng stream layout is
  // stable regardless of spawn rejections.
  ep_object_ = setup_.object;
  double narrow_lo = 0.95, narrow_hi = 1.05;
  double size_lo = stage >= 2 ? cfg.randomization.size_lo : narrow_lo;
  double size_hi = stage >= 2 ? cfg.randomization.size_hi : narrow_hi;
  ep_object_.width *= rng_.uniform(size_lo, size_hi);
  ep_object_.height *= rng_.uniform(size_lo, size_hi);
  double mass_scale = stage >= 2 ? rng_.uniform(cfg.randomization.mass_lo, cfg.randomization.mass_hi) : 1.0;
  ep_object_.mass *= mass_scale;
  ep_scene_ = setup_.scene;
  double fric_scale =
      stage >= 2 ? rng_.uniform(cfg.randomization.friction_lo, cfg.randomization.friction_hi) : 1.0;
  ep_scene_.friction_table *= fric_scale;
  ep_scene_.friction_wall *= fric_scale;
  ep_scene_.friction_finger *= fric_scale;
  if (forced_object) {
    ep_object_ = *forced_object;
    ep_object_.validate();
  }

  if (forced_body) {
    body_ = *forced_body;
    if (!body_.finite()) throw std::invalid_argument("reset_from_state: non-finite body state");
    double depth_limit = 0.005;
    for (const Vec2& c : sim::object_corners(ep_object_, body_)) {
      if (ep_scene_.plane == sim::Plane::side_view && c.x >= ep_scene_.table_x_min &&
          c.x <= ep_scene_.table_x_max && ep_scene_.table_top_z - c.y > depth_limit)
        throw std::invalid_argument("reset_from_state: state penetrates the table");
      if (ep_scene_.wall_x && c.x - *ep_scene_.wall_x > depth_limit)
        throw std::invalid_argument("reset_from_state: state penetrates the wall");
    }
    target_ = body_.position;
    anchor_ = body_.position;
    cp_sign_ = -1.0;
  } else {
    const int kMaxAttempts = 100;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      switch (cfg.task) {
        case TaskType::push: {
          double x = stage >= 1 ? rng_.uniform(cfg.init_region.x_lo, cfg.init_region.x_hi)
                                : 0.5 * (cfg.init_region.x_lo + cfg.init_region.x_hi);
          double y = stage >= 1 ? rng_.uniform(cfg.init_region.y_lo, cfg.init_region.y_hi) : 0.0;
          double angle = stage >= 1 ? rng_.uniform(-0.3, 0.3) : 0.0;
          body_ = sim::BodyState{};
          body_.position = {x, y};
          body_.angle = angle;
          double tx = stage >= 1 ? rng_.uniform(0.35, 0.58) : 0.45;
          double ty = stage >= 1 ? rng_.uniform(-0.12, 0.12) : 0.0;
          target_ = {tx, ty};
          break;
        }
        case TaskType::wall: {
          if (stage == 0) {
            // Reverse curriculum: start from the post-pivot state, standing
            // on the thin edge with the base toward the wall, thumb gap
            // free. The pre-grasp phase is already behind the policy here.
            double gap = rng_.uniform(0.02, 0.03);
            body_ = sim::BodyState{};
            body_.angle = M_PI / 2.0;
            body_.position = {*ep_scene_.wall_x - gap - ep_object_.height / 2.0,
                              ep_scene_.table_top_z + ep_object_.width / 2.0};
            spawn_pregrasp_done_ = true;
          } else {
            double gap = rng_.uniform(0.02, 0.05);
            double x = *ep_scene_.wall_x - gap - ep_object_.width / 2.0;
            body_ = sim::resting_state(ep_scene_, ep_object_, x);
          }
          target_ = body_.position;
          break;
        }
        case TaskType::edge: {
          double f = stage >= 1 ? rng_.uniform(0.25, 0.45) : 0.35;
          double x = ep_scene_.table_x_max + (f - 0.5) * ep_object_.width;
          body_ = sim::resting_state(ep_scene_, ep_object_, x);
          target_ = body_.position;
          break;
        }
        case TaskType::reach: {
          body_ = sim::resting_state(ep_scene_, ep_object_, 0.16);
          double tx = stage >= 1 ? rng_.uniform(cfg.init_region.x_lo, cfg.init_region.x_hi)
                                 : 0.5 * (cfg.init_region.x_lo + cfg.init_region.x_hi);
          double tz = stage >= 1 ? rng_.uniform(cfg.init_region.y_lo, cfg.init_region.y_hi)
                                 : 0.5 * (cfg.init_region.y_lo + cfg.init_region.y_hi);
          target_ = {tx, tz};
          break;
        }
      }
      // Reject spawns that penetrate the wall, fall off the table, or start
      // inside the home-pose fingertips.
      placed = true;
      if (ep_scene_.wall_x) {
        for (const Vec2& c : sim::object_corners(ep_object_, body_))
          if (c.x > *ep_scene_.wall_x) placed = false;
      }
      auto support = sim::object_support_state(ep_scene_, ep_object_, body_);
      if (support.kind == sim::SupportKind::fallen) placed = false;
      for (const Vec2& tip : sim::forward_kinematics(setup_.robot, setup_.home_q))
        if (sim::tip_penetration(ep_object_, body_, tip, setup_.robot.fingertip_radius) > 0.0)
          placed = false;
    }
    if (!placed) throw std::runtime_error("reset: no valid spawn found in 100 attempts");
    anchor_ = body_.position;
    if (cfg.task == TaskType::push) set_target(target_);
    else cp_sign_ = -1.0;
  }

  robot_ = sim::make_robot_state(setup_.robot, setup_.home_q);
  prev_body_ = body_;
  stage_ = reward::StageState{};
  stage_.pregrasp_latched = spawn_pregrasp_done_;
  success_.reset();
  steps_ = 0;
  done_ = false;
  started_ = true;
  result_ = EpisodeResult{};
  last_contacts_.clear();
}

Observation Env::reset(uint64_t seed) {
  spawn_episode(seed, nullptr, nullptr);
  return make_observation();
}

Observation Env::reset_from_state(uint64_t seed, const sim::BodyState& body,
                                  const sim::ObjectSpec& episode_object) {
  spawn_episode(seed, &body, &episode_object);
  return make_observation();
}

Observation Env::make_observation() const {
  Observation o;
  const TaskConfig& cfg = setup_.config;
  for (int i = 0; i < sim::kNumJoints; ++i) o[Observation::kQ + i] = robot_.q[i];
  o[Observation::kTips + 0] = robot_.fingertips[0].x;
  o[Observation::kTips + 1] = robot_.fingertips[0].y;
  o[Observation::kTips + 2] = robot_.fingertips[1].x;
  o[Observation::kTips + 3] = robot_.fingertips[1].y;
  if (cfg.task != TaskType::reach) {
    o[Observation::kObjPose + 0] = body_.position.x;
    o[Observation::kObjPose + 1] = body_.position.y;
    o[Observation::kObjPose + 2] = body_.angle;
    o[Observation::kObjVel + 0] = (body_.position.x - prev_body_.position.x) / cfg.control_dt;
    o[Observation::kObjVel + 1] = (body_.position.y - prev_body_.position.y) / cfg.control_dt;
    o[Observation::kObjVel + 2] = (body_.angle - prev_body_.angle) / cfg.control_dt;
  }
  o[Observation::kTarget + 0] = target_.x;
  o[Observation::kTarget + 1] = target_.y;
  if (cfg.task == TaskType::push || cfg.task == TaskType::wall) {
    Vec2 cp = current_cp();
    o[Observation::kCp + 0] = cp.x;
    o[Observation::kCp + 1] = cp.y;
  }
  return o;
}

StepOut Env::step(const Action& action) {
  if (!started_) throw std::logic_error("environment not reset");
  if (done_) throw std::logic_error("episode finished");
  const TaskConfig& cfg = setup_.config;

  std::array<double, sim::kNumJoints> targets{};
  for (int i = 0; i < Action::kArmDim; ++i) {
    double d = clamp(action.arm_delta[i], -cfg.max_arm_delta, cfg.max_arm_delta);
    targets[i] = robot_.q[i] + d;
  }
  for (int i = 0; i < Action::kHandDim; ++i) {
    const auto& jl = setup_.robot.joint_limits[Action::kArmDim + i];
    targets[Action::kArmDim + i] = clamp(action.hand_abs[i], jl.lo, jl.hi);
  }

  StepOut out;
  bool diverged = false;
  std::string diverged_msg;
  prev_body_ = body_;
  try {
    auto res = sim::step(ep_scene_, ep_object_, setup_.robot, body_, robot_, targets, cfg.control_dt,
                         cfg.physics_substeps);
    body_ = res.body;
    robot_ = res.robot;
    last_contacts_ = std::move(res.contacts);
  } catch (const std::runtime_error& e) {
    diverged = true;
    diverged_msg = e.what();
  }
  ++steps_;

  StepInfo& info = out.info;
  info.contacts = last_contacts_;
  for (const auto& c : last_contacts_) {
    if (c.pair == sim::ContactPair::thumb_object) info.thumb_contact = true;
    if (c.pair == sim::ContactPair::fingers_object) info.finger_contact = true;
  }
  info.support = sim::object_support_state(ep_scene_, ep_object_, body_);

  reward::RewardInputs rin;
  rin.obj_pos = body_.position;
  rin.obj_angle = body_.angle;
  rin.obj_half_width = ep_object_.width / 2.0;
  rin.obj_half_height = ep_object_.height / 2.0;
  rin.thumb_tip = robot_.fingertips[0];
  rin.finger_tip = robot_.fingertips[1];
  rin.target = target_;
  rin.anchor = anchor_;
  rin.cp = (cfg.task == TaskType::push || cfg.task == TaskType::wall) ? current_cp() : Vec2{};
  info.dist_obj_target = distance(body_.position, target_);
  info.dist_finger_cp = distance(robot_.fingertips[1], rin.cp);

  bool inst = false;
  switch (cfg.task) {
    case TaskType::push:
      info.breakdown = reward::compute_reward(reward::Skill::push, rin, stage_, setup_.reward);
      inst = info.dist_obj_target < cfg.push_tolerance;
      break;
    case TaskType::wall:
      info.breakdown = reward::compute_reward(reward::Skill::wall, rin, stage_, setup_.reward);
      inst = success_condition(ep_scene_, body_, info.thumb_contact, info.finger_contact, cfg);
      break;
    case TaskType::edge:
      info.breakdown = reward::compute_reward(reward::Skill::edge, rin, stage_, setup_.reward);
      inst = success_condition(ep_scene_, body_, info.thumb_contact, info.finger_contact, cfg);
      break;
    case TaskType::reach: {
      double d = distance(robot_.fingertips[1], target_);
      info.breakdown = reward::RewardBreakdown{};
      info.breakdown.r_motion = reward::proximity(robot_.fingertips[1], target_, 0.10);
      info.breakdown.p_a = 1;
      info.breakdown.total = info.breakdown.r_motion;
      inst = d < cfg.push_tolerance;
      break;
    }
  }
  out.reward = info.breakdown.total;

  int hold = (cfg.task == TaskType::push || cfg.task == TaskType::reach) ? cfg.push_hold_steps
                                                                         : cfg.success_hold_steps;
  bool succeeded = success_.update(inst, hold);

  if (diverged) {
    done_ = true;
    result_.failure_reason = FailureReason::diverged;
    result_.diagnostic = diverged_msg;
  } else if (succeeded) {
    done_ = true;
    result_.success = true;
    if (cfg.task == TaskType::reach) out.reward += 5.0;  // terminal bonus for the benchmark task
  } else if (info.support.kind == sim::SupportKind::fallen) {
    done_ = true;
    result_.failure_reason = FailureReason::fallen;
  } else if (steps_ >= cfg.horizon) {
    done_ = true;
    result_.failure_reason = FailureReason::timeout;
  }
  if (done_) {
    result_.steps = steps_;
    result_.final_obj_pose = body_;
  }

  out.obs = make_observation();
  out.done = done_;
  return out;
}

}  // namespace pushgrasp::tasks
