#include "pushgrasp/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace pushgrasp::sim {

void SceneSpec::validate() const {
  if (!(table_x_min < table_x_max)) throw std::invalid_argument("scene: table_x_min must be < table_x_max");
  if (friction_table < 0 || friction_wall < 0 || friction_finger < 0)
    throw std::invalid_argument("scene: friction coefficients must be >= 0");
  if (restitution < 0.0 || restitution >= 1.0) throw std::invalid_argument("scene: restitution must be in [0,1)");
  if (wall_x && (*wall_x < table_x_min || *wall_x > table_x_max))
    throw std::invalid_argument("scene: wall_x must lie within the table extent");
  if (contact_stiffness <= 0 || contact_damping < 0) throw std::invalid_argument("scene: bad contact parameters");
}

void ObjectSpec::validate() const {
  if (width <= 0 || height <= 0 || mass <= 0) throw std::invalid_argument("object: width, height, mass must be > 0");
  if (effective_inertia() <= 0) throw std::invalid_argument("object: inertia must be > 0");
}

void RobotSpec::validate() const {
  for (double l : link_lengths)
    if (l <= 0) throw std::invalid_argument("robot: link lengths must be > 0");
  if (thumb_length <= 0 || finger_length <= 0) throw std::invalid_argument("robot: digit lengths must be > 0");
  if (fingertip_radius <= 0) throw std::invalid_argument("robot: fingertip_radius must be > 0");
  for (const auto& jl : joint_limits)
    if (!(jl.lo < jl.hi)) throw std::invalid_argument("robot: joint limit lo must be < hi");
  for (const auto& g : pd_gains)
    if (g.kp <= 0 || g.kd <= 0) throw std::invalid_argument("robot: pd gains must be > 0");
  if (max_joint_speed <= 0) throw std::invalid_argument("robot: max_joint_speed must be > 0");
}

bool RobotState::finite() const {
  return all_finite(std::vector<double>(q.begin(), q.end())) &&
         all_finite(std::vector<double>(qd.begin(), qd.end())) && fingertips[0].finite() &&
         fingertips[1].finite();
}

const char* contact_pair_name(ContactPair p) {
  switch (p) {
    case ContactPair::object_table: return "object-table";
    case ContactPair::object_wall: return "object-wall";
    case ContactPair::thumb_object: return "thumb-object";
    case ContactPair::fingers_object: return "fingers-object";
  }
  return "?";
}

const char* support_kind_name(SupportKind k) {
  switch (k) {
    case SupportKind::on_table: return "on_table";
    case SupportKind::overhanging: return "overhanging";
    case SupportKind::against_wall: return "against_wall";
    case SupportKind::airborne: return "airborne";
    case SupportKind::fallen: return "fallen";
  }
  return "?";
}

Vec2 wrist_position(const RobotSpec& spec, const std::array<double, kNumJoints>& q) {
  double a = 0.0;
  Vec2 p = spec.base_position;
  for (int i = 0; i < kNumArmJoints; ++i) {
    a += q[i];
    p += Rot2(a).rotate({spec.link_lengths[i], 0.0});
  }
  return p;
}

std::array<Vec2, 2> forward_kinematics(const RobotSpec& spec, const std::array<double, kNumJoints>& q) {
  for (double v : q)
    if (!std::isfinite(v)) throw std::invalid_argument("forward_kinematics: non-finite joint position");
  double arm_angle = q[0] + q[1] + q[2];
  Vec2 wrist = wrist_position(spec, q);
  Vec2 thumb = wrist + Rot2(arm_angle + q[3]).rotate({spec.thumb_length, 0.0});
  Vec2 finger = wrist + Rot2(arm_angle + q[4]).rotate({spec.finger_length, 0.0});
  return {thumb, finger};
}

std::optional<std::array<double, kNumArmJoints>> arm_ik(const RobotSpec& spec, const Vec2& wrist,
                                                        double link3_angle, bool elbow_up) {
  Vec2 p2 = wrist - Rot2(link3_angle).rotate({spec.link_lengths[2], 0.0});
  Vec2 rel = p2 - spec.base_position;
  double l0 = spec.link_lengths[0], l1 = spec.link_lengths[1];
  double d2 = rel.squared_norm();
  double c = (d2 - l0 * l0 - l1 * l1) / (2.0 * l0 * l1);
  if (c < -1.0 || c > 1.0) return std::nullopt;
  double elbow = std::acos(c);
  if (elbow_up) elbow = -elbow;
  double q0 = std::atan2(rel.y, rel.x) - std::atan2(l1 * std::sin(elbow), l0 + l1 * std::cos(elbow));
  double q1 = elbow;
  double q2 = link3_angle - q0 - q1;
  // Wrap q2 into (-pi, pi] so joint limits see the canonical angle.
  while (q2 > M_PI) q2 -= 2.0 * M_PI;
  while (q2 <= -M_PI) q2 += 2.0 * M_PI;
  return std::array<double, kNumArmJoints>{q0, q1, q2};
}

RobotState make_robot_state(const RobotSpec& spec, const std::array<double, kNumJoints>& q) {
  RobotState st;
  st.q = q;
  st.qd = {};
  st.fingertips = forward_kinematics(spec, q);
  return st;
}

std::array<Vec2, 4> object_corners(const ObjectSpec& obj, const BodyState& body) {
  Rot2 r(body.angle);
  double hw = obj.width / 2.0, hh = obj.height / 2.0;
  return {body.position + r.rotate({-hw, -hh}), body.position + r.rotate({hw, -hh}),
          body.position + r.rotate({hw, hh}), body.position + r.rotate({-hw, hh})};
}

namespace {

Vec2 point_velocity(const BodyState& body, const Vec2& point) {
  Vec2 r = point - body.position;
  return body.linear_velocity + body.angular_velocity * r.perp();
}

struct ForceAccum {
  Vec2 force;
  double torque = 0.0;

  void apply(const BodyState& body, const Vec2& point, const Vec2& f) {
    force += f;
    torque += (point - body.position).cross(f);
  }
};

// Effective mass of the object at a contact point along a direction; bounds
// the damping/friction force so one substep cannot reverse the relative
// velocity (keeps the explicit penalty integration stable).
double effective_mass(const ObjectSpec& obj, const BodyState& body, const Vec2& point, const Vec2& dir) {
  double lever = (point - body.position).cross(dir);
  return 1.0 / (1.0 / obj.mass + lever * lever / obj.effective_inertia());
}

// Normal force of a damped penalty spring: stiffness drives the depth to
// zero, damping resists approach but is capped at the impulse that would
// cancel the approach velocity within one substep.
double penalty_normal_force(double stiffness, double damping, double depth, double v_separation,
                            double m_eff, double h) {
  double fd = 0.0;
  if (v_separation < 0.0) fd = std::min(damping * (-v_separation), m_eff * (-v_separation) / h);
  return std::max(0.0, stiffness * depth + fd);
}

// Regularized Coulomb friction opposing the sliding velocity, capped both by
// the cone and by the impulse that would stop the slide within one substep.
double friction_force(double mu, double fn, double v_slide, double reg_vel, double m_eff, double h) {
  double mag = std::min(mu * fn * std::abs(std::tanh(v_slide / reg_vel)), m_eff * std::abs(v_slide) / h);
  return v_slide >= 0.0 ? -mag : mag;
}

void check_tunneling(double penetration, const ObjectSpec& obj) {
  if (penetration > 0.5 * std::min(obj.width, obj.height)) {
    throw std::runtime_error("tunneling: contact penetration exceeds half the object thickness; reduce dt");
  }
}

// Half-plane penalty contact against all four box corners. The normal points
// out of the surface; plane_offset is the signed distance of a corner along
// the normal from the surface (negative = penetrating).
void plane_contacts(const SceneSpec& scene, const ObjectSpec& obj, const BodyState& body,
                    ContactPair pair, const Vec2& normal, double surface_coord, double mu, double h,
                    bool corner_active(const Vec2&, const SceneSpec&), ForceAccum& acc,
                    std::vector<ContactRecord>& out) {
  double damping = scene.contact_damping * (1.0 - scene.restitution);
  for (const Vec2& c : object_corners(obj, body)) {
    if (!corner_active(c, scene)) continue;
    double depth = surface_coord - normal.dot(c);  // > 0 when past the surface
    if (depth <= 0.0) continue;
    check_tunneling(depth, obj);
    Vec2 v = point_velocity(body, c);
    double v_n = normal.dot(v);  // > 0 separating
    double fn = penalty_normal_force(scene.contact_stiffness, damping, depth, v_n,
                                     effective_mass(obj, body, c, normal), h);
    if (fn <= 0.0) continue;
    Vec2 tangent = normal.perp();
    double v_t = tangent.dot(v);
    double ft = friction_force(mu, fn, v_t, scene.friction_reg_vel,
                               effective_mass(obj, body, c, tangent), h);
    acc.apply(body, c, normal * fn + tangent * ft);
    out.push_back({pair, c, normal, fn, ft, depth});
  }
}

struct TipContactGeom {
  bool hit = false;
  Vec2 surface_point;  // on the box, world frame
  Vec2 normal;         // box surface -> tip center
  double penetration = 0.0;
};

TipContactGeom tip_box_geometry(const ObjectSpec& obj, const BodyState& body, const Vec2& tip,
                                double radius) {
  TipContactGeom g;
  Rot2 r(body.angle);
  Vec2 local = r.inverse_rotate(tip - body.position);
  double hw = obj.width / 2.0, hh = obj.height / 2.0;
  Vec2 clamped{clamp(local.x, -hw, hw), clamp(local.y, -hh, hh)};
  double separation;
  Vec2 n_local;
  if (std::abs(local.x) < hw && std::abs(local.y) < hh) {
    // Center inside the box: push out through the nearest face.
    double dx = hw - std::abs(local.x);
    double dy = hh - std::abs(local.y);
    if (dx < dy) {
      n_local = {local.x >= 0 ? 1.0 : -1.0, 0.0};
      clamped = {n_local.x * hw, local.y};
      separation = -dx;
    } else {
      n_local = {0.0, local.y >= 0 ? 1.0 : -1.0};
      clamped = {local.x, n_local.y * hh};
      separation = -dy;
    }
  } else {
    Vec2 d = local - clamped;
    separation = d.norm();
    if (separation < 1e-12) return g;
    n_local = d * (1.0 / separation);
  }
  if (separation >= radius) return g;
  g.hit = true;
  g.penetration = radius - separation;
  g.surface_point = body.position + r.rotate(clamped);
  g.normal = r.rotate(n_local);
  return g;
}

void tip_contacts(const SceneSpec& scene, const ObjectSpec& obj, const BodyState& body,
                  const std::array<Vec2, 2>& tips, const std::array<Vec2, 2>& tip_vels,
                  double radius, double h, ForceAccum& acc, std::vector<ContactRecord>& out) {
  double damping = scene.contact_damping * (1.0 - scene.restitution);
  for (int i = 0; i < 2; ++i) {
    TipContactGeom g = tip_box_geometry(obj, body, tips[i], radius);
    if (!g.hit) continue;
    check_tunneling(g.penetration, obj);
    Vec2 v_point = point_velocity(body, g.surface_point);
    // Separation rate of the tip relative to the object surface.
    double v_n = g.normal.dot(tip_vels[i] - v_point);
    double fn = penalty_normal_force(scene.contact_stiffness, damping, g.penetration, v_n,
                                     effective_mass(obj, body, g.surface_point, g.normal), h);
    if (fn <= 0.0) continue;
    Vec2 tangent = g.normal.perp();
    double v_t = tangent.dot(v_point - tip_vels[i]);
    double ft = friction_force(scene.friction_finger, fn, v_t, scene.friction_reg_vel,
                               effective_mass(obj, body, g.surface_point, tangent), h);
    // Reaction on the object: pushed away from the tip, dragged by friction.
    acc.apply(body, g.surface_point, g.normal * (-fn) + tangent * ft);
    out.push_back({i == 0 ? ContactPair::thumb_object : ContactPair::fingers_object, g.surface_point,
                   g.normal, fn, ft, g.penetration});
  }
}

bool table_corner_active(const Vec2& c, const SceneSpec& s) {
  return c.x >= s.table_x_min && c.x <= s.table_x_max;
}

// The table's edge corner acting as a point support against the box faces;
// this is what an overhanging object pivots on.
void edge_point_contact(const SceneSpec& scene, const ObjectSpec& obj, const BodyState& body,
                        const Vec2& edge_point, double h, ForceAccum& acc,
                        std::vector<ContactRecord>& out) {
  TipContactGeom g = tip_box_geometry(obj, body, edge_point, 0.0);
  if (!g.hit || g.penetration <= 0.0) return;
  check_tunneling(g.penetration, obj);
  double damping = scene.contact_damping * (1.0 - scene.restitution);
  Vec2 v_point = point_velocity(body, g.surface_point);
  double v_n = g.normal.dot(-v_point);  // edge point is static
  double fn = penalty_normal_force(scene.contact_stiffness, damping, g.penetration, v_n,
                                   effective_mass(obj, body, g.surface_point, g.normal), h);
  if (fn <= 0.0) return;
  Vec2 tangent = g.normal.perp();
  double v_t = tangent.dot(v_point);
  double ft = friction_force(scene.friction_table, fn, v_t, scene.friction_reg_vel,
                             effective_mass(obj, body, g.surface_point, tangent), h);
  acc.apply(body, g.surface_point, g.normal * (-fn) + tangent * ft);
  out.push_back({ContactPair::object_table, g.surface_point, g.normal, fn, ft, g.penetration});
}

bool wall_corner_active(const Vec2& c, const SceneSpec& s) {
  // The wall stands on the table.
  return c.y >= s.table_top_z - 1e-6;
}

// Kinematic blocking of fingertips against table and wall in the side-view
// plane; the arm is position-controlled, so a blocked substep simply holds.
bool tips_blocked(const SceneSpec& scene, const RobotSpec& spec, const std::array<Vec2, 2>& tips) {
  if (scene.plane != Plane::side_view) return false;
  for (const Vec2& t : tips) {
    if (t.x >= scene.table_x_min - spec.fingertip_radius && t.x <= scene.table_x_max &&
        t.y - spec.fingertip_radius < scene.table_top_z)
      return true;
    if (scene.wall_x && t.x + spec.fingertip_radius > *scene.wall_x &&
        t.y + spec.fingertip_radius > scene.table_top_z)
      return true;
  }
  return false;
}

void check_finite(const BodyState& body, const RobotState& robot,
                  const std::array<double, kNumJoints>& targets) {
  auto fail = [](const char* field) {
    throw std::runtime_error(std::string("numerical divergence: non-finite ") + field);
  };
  if (!body.position.finite()) fail("object position");
  if (!std::isfinite(body.angle)) fail("object angle");
  if (!body.linear_velocity.finite()) fail("object linear velocity");
  if (!std::isfinite(body.angular_velocity)) fail("object angular velocity");
  for (double v : robot.q)
    if (!std::isfinite(v)) fail("joint position");
  for (double v : robot.qd)
    if (!std::isfinite(v)) fail("joint velocity");
  for (double v : targets)
    if (!std::isfinite(v)) fail("joint target");
}

}  // namespace

StepResult step(const SceneSpec& scene, const ObjectSpec& obj, const RobotSpec& robot_spec,
                const BodyState& body_in, const RobotState& robot_in,
                const std::array<double, kNumJoints>& joint_targets, double dt, int substeps) {
  scene.validate();
  obj.validate();
  robot_spec.validate();
  if (dt <= 0.0) throw std::invalid_argument("step: dt must be > 0");
  if (substeps < 1) throw std::invalid_argument("step: substeps must be >= 1");
  check_finite(body_in, robot_in, joint_targets);

  double h = dt / substeps;
  BodyState body = body_in;
  RobotState robot = robot_in;
  double mass = obj.mass;
  double inertia = obj.effective_inertia();
  std::vector<ContactRecord> contacts;

  std::array<double, kNumJoints> targets = joint_targets;
  for (int j = 0; j < kNumJoints; ++j)
    targets[j] = clamp(targets[j], robot_spec.joint_limits[j].lo, robot_spec.joint_limits[j].hi);

  for (int s = 0; s < substeps; ++s) {
    // Robot PD tracking in joint space.
    std::array<double, kNumJoints> q_new = robot.q;
    std::array<double, kNumJoints> qd_new = robot.qd;
    for (int j = 0; j < kNumJoints; ++j) {
      const PdGain& g = robot_spec.pd_gains[j];
      double qdd = g.kp * (targets[j] - robot.q[j]) - g.kd * robot.qd[j];
      qd_new[j] = clamp(robot.qd[j] + qdd * h, -robot_spec.max_joint_speed, robot_spec.max_joint_speed);
      q_new[j] = robot.q[j] + qd_new[j] * h;
      const JointLimit& jl = robot_spec.joint_limits[j];
      if (q_new[j] < jl.lo) {
        q_new[j] = jl.lo;
        qd_new[j] = 0.0;
      } else if (q_new[j] > jl.hi) {
        q_new[j] = jl.hi;
        qd_new[j] = 0.0;
      }
    }
    std::array<Vec2, 2> tips_new = forward_kinematics(robot_spec, q_new);
    std::array<Vec2, 2> tip_vels;
    if (tips_blocked(scene, robot_spec, tips_new)) {
      q_new = robot.q;
      qd_new = {};
      tips_new = robot.fingertips;
      tip_vels = {};
    } else {
      tip_vels = {(tips_new[0] - robot.fingertips[0]) * (1.0 / h),
                  (tips_new[1] - robot.fingertips[1]) * (1.0 / h)};
    }
    robot.q = q_new;
    robot.qd = qd_new;
    robot.fingertips = tips_new;

    // Object forces.
    ForceAccum acc;
    contacts.clear();
    if (scene.plane == Plane::side_view) {
      acc.force += Vec2{0.0, -scene.gravity * mass};
      plane_contacts(scene, obj, body, ContactPair::object_table, {0.0, 1.0}, scene.table_top_z,
                     scene.friction_table, h, table_corner_active, acc, contacts);
      edge_point_contact(scene, obj, body, {scene.table_x_max, scene.table_top_z}, h, acc, contacts);
      edge_point_contact(scene, obj, body, {scene.table_x_min, scene.table_top_z}, h, acc, contacts);
      if (scene.wall_x) {
        plane_contacts(scene, obj, body, ContactPair::object_wall, {-1.0, 0.0}, -*scene.wall_x,
                       scene.friction_wall, h, wall_corner_active, acc, contacts);
      }
    } else {
      // Top-down: the table supports the object out of plane; Coulomb sliding
      // friction acts as a body force plus a spin-resisting torque.
      double fn_support = mass * scene.gravity;
      double speed = body.linear_velocity.norm();
      if (speed > 1e-12) {
        double mag = std::min(scene.friction_table * fn_support * std::tanh(speed / scene.friction_reg_vel),
                              mass * speed / h);
        acc.force += body.linear_velocity * (-mag / speed);
      }
      double r_spin = (obj.width + obj.height) / 8.0;
      double w = body.angular_velocity;
      double tq = std::min(scene.friction_table * fn_support * r_spin * std::abs(std::tanh(w * r_spin / scene.friction_reg_vel)),
                           inertia * std::abs(w) / h);
      acc.torque += w >= 0.0 ? -tq : tq;
      if (scene.wall_x) {
        plane_contacts(scene, obj, body, ContactPair::object_wall, {-1.0, 0.0}, -*scene.wall_x,
                       scene.friction_wall, h, [](const Vec2&, const SceneSpec&) { return true; }, acc,
                       contacts);
      }
    }
    tip_contacts(scene, obj, body, robot.fingertips, tip_vels, robot_spec.fingertip_radius, h, acc, contacts);

    // Semi-implicit Euler.
    body.linear_velocity += acc.force * (h / mass);
    body.angular_velocity += acc.torque * h / inertia;
    body.position += body.linear_velocity * h;
    body.angle += body.angular_velocity * h;
  }

  if (!body.finite() || !robot.finite())
    throw std::runtime_error("numerical divergence: non-finite state after step");
  return {body, robot, std::move(contacts)};
}

SupportState object_support_state(const SceneSpec& scene, const ObjectSpec& obj, const BodyState& body) {
  auto corners = object_corners(obj, body);
  double x_lo = corners[0].x, x_hi = corners[0].x, z_lo = corners[0].y;
  for (const Vec2& c : corners) {
    x_lo = std::min(x_lo, c.x);
    x_hi = std::max(x_hi, c.x);
    z_lo = std::min(z_lo, c.y);
  }
  double overhang = clamp((x_hi - scene.table_x_max) / std::max(x_hi - x_lo, 1e-12), 0.0, 1.0);
  double wall_gap = scene.wall_x ? std::max(*scene.wall_x - x_hi, 0.0) : 0.0;
  constexpr double kWallNearby = 0.05;

  SupportState st;
  if (scene.plane == Plane::side_view) {
    if (body.position.y < scene.table_top_z - obj.height) {
      st.kind = SupportKind::fallen;
    } else if (z_lo > scene.table_top_z + 2e-3) {
      st.kind = SupportKind::airborne;
    } else if (overhang > 1e-9) {
      st.kind = SupportKind::overhanging;
      st.overhang_fraction = overhang;
    } else if (scene.wall_x && wall_gap <= kWallNearby) {
      st.kind = SupportKind::against_wall;
      st.wall_gap = wall_gap;
    } else {
      st.kind = SupportKind::on_table;
    }
  } else {
    if (overhang > 0.5) {
      // Center of mass past the edge: the object would tip off the table.
      st.kind = SupportKind::fallen;
    } else if (overhang > 1e-9) {
      st.kind = SupportKind::overhanging;
      st.overhang_fraction = overhang;
    } else if (scene.wall_x && wall_gap <= kWallNearby) {
      st.kind = SupportKind::against_wall;
      st.wall_gap = wall_gap;
    } else {
      st.kind = SupportKind::on_table;
    }
  }
  return st;
}

double tip_penetration(const ObjectSpec& obj, const BodyState& body, const Vec2& tip, double radius) {
  TipContactGeom g = tip_box_geometry(obj, body, tip, radius);
  return g.hit ? g.penetration : 0.0;
}

BodyState resting_state(const SceneSpec& scene, const ObjectSpec& obj, double x, double second_coord) {
  BodyState b;
  if (scene.plane == Plane::side_view) {
    double pen = obj.mass * scene.gravity / (2.0 * scene.contact_stiffness);
    b.position = {x, scene.table_top_z + obj.height / 2.0 - pen};
  } else {
    b.position = {x, second_coord};
  }
  return b;
}

double mechanical_energy(const SceneSpec& scene, const ObjectSpec& obj, const BodyState& body,
                         const std::vector<ContactRecord>& contacts) {
  double e = 0.5 * obj.mass * body.linear_velocity.squared_norm() +
             0.5 * obj.effective_inertia() * body.angular_velocity * body.angular_velocity;
  if (scene.plane == Plane::side_view) e += obj.mass * scene.gravity * body.position.y;
  for (const ContactRecord& c : contacts)
    e += 0.5 * scene.contact_stiffness * c.penetration * c.penetration;
  return e;
}

}  // namespace pushgrasp::sim
