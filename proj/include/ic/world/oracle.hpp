#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "ic/world/task.hpp"
#include "ic/world/world.hpp"

namespace ic::world {

// One instruction with its 1-based half-open execution interval.
struct Segment {
  std::string text;
  int64_t t_begin = 0, t_end = 0;
  bool operator==(const Segment&) const = default;
};

struct Trajectory {
  uint64_t seed = 0;
  int32_t difficulty = 1;
  int32_t grid_size = 7;
  std::string goal_item;
  std::string goal_text;
  std::vector<ObsRecord> observations;  // o_t observed before a_t
  std::vector<int32_t> actions;
  std::vector<Segment> segments;
  bool success = false;
  bool operator==(const Trajectory&) const = default;

  int64_t length() const { return static_cast<int64_t>(actions.size()); }
  bool annotated() const { return !segments.empty(); }
};

// Scripted BFS planner. Crafts the goal bottom-up, gathering the inputs of
// each craft nearest-first (so sibling order depends on the layout), walking
// shortest paths, and emitting one templated instruction per subgoal whose
// interval starts with the subgoal's first action. Fails loudly on
// unreachable targets or an exhausted budget; never truncates silently.
Trajectory oracle_rollout(const Env& env, const WorldState& start, const TaskSpec& task,
                          int32_t max_steps);

// True when text belongs to the closed instruction template grammar.
bool matches_instruction_grammar(const RecipeGraph& recipes, const std::string& text);

// Template words used by the grammar (tokenizer/vocabulary support).
std::vector<std::string> grammar_words();

// Re-run recorded actions through step(); returns the reproduced observation
// stream and final success flag.
struct ReplayResult {
  std::vector<ObsRecord> observations;
  bool success = false;
};
ReplayResult replay_actions(const Env& env, const WorldState& start,
                            const std::string& goal_item, const std::vector<int32_t>& actions);

}  // namespace ic::world
