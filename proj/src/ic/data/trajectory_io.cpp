#include "ic/data/trajectory_io.hpp"

#include <fstream>

#include <json.hpp>

#include "ic/error.hpp"

namespace ic::data {

using nlohmann::json;

std::string trajectory_to_json_line(const world::Trajectory& traj) {
  json j;
  j["seed"] = traj.seed;
  j["difficulty"] = traj.difficulty;
  j["grid_size"] = traj.grid_size;
  j["goal_item"] = traj.goal_item;
  j["goal_text"] = traj.goal_text;
  j["success"] = traj.success;
  j["actions"] = traj.actions;
  json obs = json::array();
  for (const auto& o : traj.observations) {
    json inv = json::object();
    for (const auto& [item, k] : o.inventory) inv[item] = k;
    obs.push_back(json{{"g", o.grid}, {"n", o.n}, {"r", o.agent_r}, {"c", o.agent_c}, {"inv", inv}});
  }
  j["obs"] = std::move(obs);
  json segs = json::array();
  for (const auto& s : traj.segments)
    segs.push_back(json{{"text", s.text}, {"begin", s.t_begin}, {"end", s.t_end}});
  j["segments"] = std::move(segs);
  return j.dump();
}

world::Trajectory trajectory_from_json_line(const std::string& line) {
  json j = json::parse(line);
  world::Trajectory t;
  t.seed = j.at("seed").get<uint64_t>();
  t.difficulty = j.at("difficulty").get<int32_t>();
  t.grid_size = j.at("grid_size").get<int32_t>();
  t.goal_item = j.at("goal_item").get<std::string>();
  t.goal_text = j.at("goal_text").get<std::string>();
  t.success = j.at("success").get<bool>();
  t.actions = j.at("actions").get<std::vector<int32_t>>();
  for (const auto& o : j.at("obs")) {
    world::ObsRecord rec;
    rec.grid = o.at("g").get<std::string>();
    rec.n = o.at("n").get<int32_t>();
    rec.agent_r = o.at("r").get<int32_t>();
    rec.agent_c = o.at("c").get<int32_t>();
    for (const auto& [item, k] : o.at("inv").items())
      rec.inventory[item] = k.get<int32_t>();
    t.observations.push_back(std::move(rec));
  }
  for (const auto& s : j.at("segments")) {
    world::Segment seg;
    seg.text = s.at("text").get<std::string>();
    seg.t_begin = s.at("begin").get<int64_t>();
    seg.t_end = s.at("end").get<int64_t>();
    t.segments.push_back(std::move(seg));
  }
  return t;
}

void write_trajectories(const std::string& path, const Dataset& dataset) {
  std::ofstream os(path, std::ios::trunc);
  check(static_cast<bool>(os), "I/O error: cannot write dataset to ", path);
  for (const auto& t : dataset) os << trajectory_to_json_line(t) << "\n";
  check(static_cast<bool>(os), "I/O error: failed writing dataset to ", path);
}

Dataset read_trajectories(const std::string& path) {
  std::ifstream is(path);
  check(static_cast<bool>(is), "I/O error: cannot open dataset ", path);
  Dataset out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(trajectory_from_json_line(line));
    } catch (const json::exception& e) {
      fail("format error: dataset line ", line_no, ": ", e.what());
    }
  }
  return out;
}

}  // namespace ic::data
