#include "pushgrasp/io/trajectory.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pushgrasp::io {

using nlohmann::json;

namespace {

json contact_to_json(const sim::ContactRecord& c) {
  return json{{"pair", sim::contact_pair_name(c.pair)},
              {"point", {c.point.x, c.point.y}},
              {"normal", {c.normal.x, c.normal.y}},
              {"fn", c.normal_force},
              {"ft", c.tangent_force},
              {"depth", c.penetration}};
}

sim::ContactRecord contact_from_json(const json& j) {
  sim::ContactRecord c;
  std::string pair = j.at("pair");
  if (pair == "object-table") c.pair = sim::ContactPair::object_table;
  else if (pair == "object-wall") c.pair = sim::ContactPair::object_wall;
  else if (pair == "thumb-object") c.pair = sim::ContactPair::thumb_object;
  else if (pair == "fingers-object") c.pair = sim::ContactPair::fingers_object;
  else throw std::runtime_error("trajectory: unknown contact pair " + pair);
  c.point = {j.at("point")[0], j.at("point")[1]};
  c.normal = {j.at("normal")[0], j.at("normal")[1]};
  c.normal_force = j.at("fn");
  c.tangent_force = j.at("ft");
  c.penetration = j.at("depth");
  return c;
}

}  // namespace

std::string trajectory_to_jsonl(const Trajectory& traj) {
  std::ostringstream out;
  json header{{"format", "pushgrasp-trajectory"},
              {"version", 1},
              {"task", traj.task},
              {"seed", traj.seed},
              {"success", traj.success},
              {"steps", traj.steps.size()}};
  out << header.dump() << "\n";
  for (const TrajStep& s : traj.steps) {
    json j{{"t", s.time},
           {"q", s.q},
           {"qd", s.qd},
           {"obj", {s.body.position.x, s.body.position.y, s.body.angle}},
           {"obj_vel", {s.body.linear_velocity.x, s.body.linear_velocity.y, s.body.angular_velocity}},
           {"reward", s.reward},
           {"p_a", s.p_a},
           {"p_b", s.p_b}};
    json contacts = json::array();
    for (const auto& c : s.contacts) contacts.push_back(contact_to_json(c));
    j["contacts"] = contacts;
    if (!s.extras.empty()) j["extras"] = s.extras;
    out << j.dump() << "\n";
  }
  return out.str();
}

Trajectory trajectory_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory: empty input");
  json header = json::parse(line);
  if (header.value("format", "") != "pushgrasp-trajectory")
    throw std::runtime_error("trajectory: bad header");
  Trajectory traj;
  traj.task = header.value("task", "");
  traj.seed = header.value("seed", 0ull);
  traj.success = header.value("success", false);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TrajStep s;
    s.time = j.at("t");
    for (int i = 0; i < sim::kNumJoints; ++i) {
      s.q[i] = j.at("q")[i];
      s.qd[i] = j.at("qd")[i];
    }
    s.body.position = {j.at("obj")[0], j.at("obj")[1]};
    s.body.angle = j.at("obj")[2];
    s.body.linear_velocity = {j.at("obj_vel")[0], j.at("obj_vel")[1]};
    s.body.angular_velocity = j.at("obj_vel")[2];
    s.reward = j.value("reward", 0.0);
    s.p_a = j.value("p_a", 0);
    s.p_b = j.value("p_b", 0);
    for (const auto& c : j.at("contacts")) s.contacts.push_back(contact_from_json(c));
    if (j.contains("extras"))
      for (auto& [k, v] : j.at("extras").items()) s.extras[k] = v;
    traj.steps.push_back(std::move(s));
  }
  size_t declared = header.value("steps", size_t{0});
  if (declared != traj.steps.size())
    throw std::runtime_error("trajectory: step count mismatch with header");
  return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("trajectory: cannot write " + path);
  f << trajectory_to_jsonl(traj);
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("trajectory: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return trajectory_from_jsonl(ss.str());
}

}  // namespace pushgrasp::io
