#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ic/world/world.hpp"

namespace ic::world {

struct TaskSpec {
  std::string goal_item;
  std::string goal_text;  // "make a <item>"
  int32_t difficulty_steps = 1;
  uint64_t seed = 0;  // layout seed; regenerating with it reproduces the world
  int32_t grid_size = 7;
  bool operator==(const TaskSpec&) const = default;
};

inline constexpr int32_t kDefaultGridSize = 7;
inline constexpr int32_t kDefaultStepBudget = 120;
inline constexpr int32_t kDefaultWindow = 5;

// Deterministic in seed. The world holds every resource and station the goal
// needs (at least two instances per resource type), all three stations, a few
// walls, and stays fully connected. For difficulty >= 2 at least one required
// resource lies outside the agent's initial 5x5 window.
std::pair<WorldState, TaskSpec> generate_task(const RecipeGraph& recipes, uint64_t seed,
                                              int32_t difficulty_steps, int32_t grid_size);

// Same generator with the goal item pinned; used to build balanced pools.
std::pair<WorldState, TaskSpec> generate_task_for_item(const RecipeGraph& recipes,
                                                       uint64_t seed,
                                                       const std::string& goal_item,
                                                       int32_t grid_size);

// Rebuild the world for an existing spec.
WorldState build_world(const RecipeGraph& recipes, const TaskSpec& spec);

// Balanced pool: for every item of every listed difficulty, `instances` tasks.
std::vector<TaskSpec> build_task_pool(const RecipeGraph& recipes, uint64_t pool_seed,
                                      const std::vector<int32_t>& difficulties,
                                      int32_t instances, int32_t grid_size);

inline constexpr int32_t kSplitBuckets = 8;

// Split key: (goal_item, layout-seed bucket).
std::pair<std::string, uint64_t> task_key(const TaskSpec& spec);

// Disjoint deterministic split on task keys; the unseen side gets
// round(holdout_fraction * #keys) keys.
std::pair<std::vector<TaskSpec>, std::vector<TaskSpec>> split_tasks(
    const std::vector<TaskSpec>& specs, double holdout_fraction, uint64_t seed);

}  // namespace ic::world
