#ifndef PUSHGRASP_TASKS_ENV_HPP_
#define PUSHGRASP_TASKS_ENV_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pushgrasp/reward/reward.hpp"
#include "pushgrasp/sim/world.hpp"

namespace pushgrasp::tasks {

enum class TaskType { push, wall, edge, reach };  // reach is the sanity benchmark task

const char* task_name(TaskType t);
TaskType task_from_name(const std::string& name);

// Fixed 19-slot observation, identical layout across tasks; unused slots stay
// zero. Layout: q[5] | fingertips[4] | obj pose[3] | obj vel[3] | target[2] | c_p[2].
struct Observation {
  static constexpr int kDim = 19;
  static constexpr int kQ = 0;
  static constexpr int kTips = 5;
  static constexpr int kObjPose = 9;
  static constexpr int kObjVel = 12;
  static constexpr int kTarget = 15;
  static constexpr int kCp = 17;

  std::array<double, kDim> v{};

  double operator[](int i) const { return v[i]; }
  double& operator[](int i) { return v[i]; }
};

// Human-readable index map of the observation layout, for docs and export.
const std::map<std::string, std::pair<int, int>>& observation_layout();

struct Action {
  static constexpr int kArmDim = 3;
  static constexpr int kHandDim = 2;
  static constexpr int kDim = kArmDim + kHandDim;

  std::array<double, kArmDim> arm_delta{};  // relative, clamped to +-max_arm_delta
  std::array<double, kHandDim> hand_abs{};  // absolute, clamped to joint limits

  static Action from_raw(const std::array<double, kDim>& raw);
  std::array<double, kDim> to_raw() const;
};

enum class FailureReason { none, timeout, fallen, diverged };

const char* failure_reason_name(FailureReason f);

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  sim::BodyState final_obj_pose;
  std::optional<double> tte_cm;
  FailureReason failure_reason = FailureReason::none;
  std::string diagnostic;  // sim error text when failure_reason == diverged
};

struct RandomizationRanges {
  double mass_lo = 0.5, mass_hi = 2.0;
  double friction_lo = 0.7, friction_hi = 1.3;
  double size_lo = 0.8, size_hi = 1.25;
};

struct Rect {
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
};

struct TaskConfig {
  TaskType task = TaskType::push;
  int horizon = 150;
  Rect init_region;
  RandomizationRanges randomization;
  double success_height = 0.10;     // m above the table top
  int success_hold_steps = 15;      // consecutive control steps
  double max_arm_delta = 0.05;      // rad per decision
  double push_tolerance = 0.03;     // m, push/reach goal radius
  int push_hold_steps = 5;
  double control_dt = 1.0 / 30.0;
  int physics_substeps = 16;
  int curriculum_stage = 2;  // 0: fixed spawn, narrow set; 1: random spawn; 2: full ranges

  void validate() const;
};

// Everything an environment needs, fixed across episodes.
struct EnvSetup {
  TaskConfig config;
  sim::SceneSpec scene;
  sim::ObjectSpec object;  // nominal; per-episode randomization scales it
  sim::RobotSpec robot;
  reward::RewardConfig reward;
  std::array<double, sim::kNumJoints> home_q{};
};

// Policies act in normalized units: every component lives in [-1, 1]. Arm
// entries scale to +-max_arm_delta, hand entries map affinely onto the joint
// range. The inverse is used when recording demonstrations.
Action action_from_normalized(const EnvSetup& setup, const std::array<double, Action::kDim>& raw);
std::array<double, Action::kDim> normalized_from_action(const EnvSetup& setup, const Action& a);

struct StepInfo {
  reward::RewardBreakdown breakdown;
  sim::SupportState support;
  bool thumb_contact = false;
  bool finger_contact = false;
  double dist_obj_target = 0.0;
  double dist_finger_cp = 0.0;
  std::vector<sim::ContactRecord> contacts;
};

struct StepOut {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// Instantaneous grasp-success predicate: lifted above the threshold with both
// fingertip contacts active.
bool success_condition(const sim::SceneSpec& scene, const sim::BodyState& body, bool thumb_contact,
                       bool finger_contact, const TaskConfig& cfg);

// Adds the persistence requirement on top of success_condition.
class SuccessTracker {
 public:
  bool update(bool instantaneous, int hold_steps) {
    streak_ = instantaneous ? streak_ + 1 : 0;
    return streak_ >= hold_steps;
  }
  int streak() const { return streak_; }
  void reset() { streak_ = 0; }

 private:
  int streak_ = 0;
};

class Env {
 public:
  explicit Env(EnvSetup setup);

  Observation reset(uint64_t seed);
  StepOut step(const Action& action);

  // Chaining hooks.
  void set_target(const Vec2& target);  // overrides the commanded relocation target
  // Starts an episode from an externally supplied object state (skill
  // finetuning from push terminal states). Robot goes to the home pose.
  Observation reset_from_state(uint64_t seed, const sim::BodyState& body,
                               const sim::ObjectSpec& episode_object);

  // Observation of the current state (e.g. after set_target).
  Observation observe() const { return make_observation(); }

  bool done() const { return done_; }
  int steps() const { return steps_; }
  const EpisodeResult& result() const { return result_; }
  const sim::BodyState& body() const { return body_; }
  const sim::RobotState& robot_state() const { return robot_; }
  const sim::ObjectSpec& episode_object() const { return ep_object_; }
  const sim::SceneSpec& scene() const { return ep_scene_; }
  const EnvSetup& setup() const { return setup_; }
  const Vec2& target() const { return target_; }
  const Vec2& anchor() const { return anchor_; }
  reward::StageState stage() const { return stage_; }
  void set_curriculum_stage(int stage);

 private:
  Observation make_observation() const;
  void spawn_episode(uint64_t seed, const sim::BodyState* forced_body,
                     const sim::ObjectSpec* forced_object);
  Vec2 current_cp() const;

  EnvSetup setup_;
  sim::SceneSpec ep_scene_;    // per-episode randomized copies
  sim::ObjectSpec ep_object_;
  sim::BodyState body_;
  sim::RobotState robot_;
  sim::BodyState prev_body_;   // for finite-difference velocities
  reward::StageState stage_;
  SuccessTracker success_;
  Rng rng_;
  bool spawn_pregrasp_done_ = false;
  Vec2 target_;
  Vec2 anchor_;
  double cp_sign_ = -1.0;
  int steps_ = 0;
  bool done_ = true;
  bool started_ = false;
  EpisodeResult result_;
  std::vector<sim::ContactRecord> last_contacts_;
};

// Task factories with the desk-scale scene geometry.
EnvSetup make_task_setup(TaskType task);

}  // namespace pushgrasp::tasks

#endif  // PUSHGRASP_TASKS_ENV_HPP_
