#include "ic/world/task.hpp"

#include <algorithm>
#include <set>

#include "ic/error.hpp"
#include "ic/num/random.hpp"

namespace ic::world {

using ic::num::derive_seed;
using ic::num::RandomStream;

namespace {

struct Placement {
  WorldState state;
  bool ok = false;
};

// One placement attempt; deterministic in rng state.
Placement try_build(const RecipeGraph& recipes, const TaskSpec& spec, RandomStream& rng) {
  Placement out;
  WorldState& s = out.state;
  s.n = spec.grid_size;
  s.grid.assign(static_cast<size_t>(s.n * s.n), Cell::Empty);
  s.rng_seed = spec.seed;

  const int32_t cells = s.n * s.n;
  auto free_cell = [&](int32_t tries) {
    for (int32_t i = 0; i < tries; ++i) {
      const int32_t idx = static_cast<int32_t>(rng.uniform_int(cells));
      if (s.grid[static_cast<size_t>(idx)] == Cell::Empty) return idx;
    }
    return -1;
  };

  // sparse walls
  const int32_t wall_count = cells / 12;
  for (int32_t i = 0; i < wall_count; ++i) {
    const int32_t idx = free_cell(16);
    if (idx >= 0) s.grid[static_cast<size_t>(idx)] = Cell::Wall;
  }

  // all stations, always present as potential distractors
  for (const char* st : {"workbench", "furnace", "anvil"}) {
    const int32_t idx = free_cell(64);
    if (idx < 0) return out;
    s.grid[static_cast<size_t>(idx)] = cell_from_name(st);
  }

  // required resource counts, at least two instances per type
  auto leaves = recipes.leaf_counts(spec.goal_item);
  std::vector<std::pair<Cell, int32_t>> resource_plan;
  for (const auto& [res, item] : recipes.gatherables()) {
    int32_t needed = 0;
    auto it = leaves.find(item);
    if (it != leaves.end()) needed = it->second;
    resource_plan.push_back({cell_from_name(res), std::max(needed, 2)});
  }
  for (const auto& [cell, count] : resource_plan)
    for (int32_t i = 0; i < count; ++i) {
      const int32_t idx = free_cell(64);
      if (idx < 0) return out;
      s.grid[static_cast<size_t>(idx)] = cell;
    }

  const int32_t agent_idx = free_cell(64);
  if (agent_idx < 0) return out;
  s.agent_r = agent_idx / s.n;
  s.agent_c = agent_idx % s.n;

  // connectivity: every resource and station reachable from the agent
  const auto dist = bfs_distances(s, s.agent_r, s.agent_c);
  for (int32_t idx = 0; idx < cells; ++idx) {
    const Cell c = s.grid[static_cast<size_t>(idx)];
    if ((is_resource(c) || is_station(c)) && dist[static_cast<size_t>(idx)] < 0) return out;
  }

  // partial-observability pressure: for difficulty >= 2 some required
  // resource must start outside the agent's initial window
  if (spec.difficulty_steps >= 2) {
    const int32_t half = kDefaultWindow / 2;
    bool outside = false;
    for (int32_t idx = 0; idx < cells && !outside; ++idx) {
      const Cell c = s.grid[static_cast<size_t>(idx)];
      if (!is_resource(c)) continue;
      const std::string item = recipes.gatherables().at(cell_name(c));
      if (!leaves.count(item)) continue;
      const int32_t r = idx / s.n, cc = idx % s.n;
      if (std::abs(r - s.agent_r) > half || std::abs(cc - s.agent_c) > half) outside = true;
    }
    if (!outside) return out;
  }

  out.ok = true;
  return out;
}

}  // namespace

WorldState build_world(const RecipeGraph& recipes, const TaskSpec& spec) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    RandomStream rng(derive_seed(spec.seed, "layout", static_cast<uint64_t>(attempt)));
    Placement p = try_build(recipes, spec, rng);
    if (p.ok) return p.state;
  }
  fail("generation error: unsatisfiable placement for goal ", spec.goal_item, " on a ",
       spec.grid_size, "x", spec.grid_size, " grid after bounded retries");
}

std::pair<WorldState, TaskSpec> generate_task_for_item(const RecipeGraph& recipes,
                                                       uint64_t seed,
                                                       const std::string& goal_item,
                                                       int32_t grid_size) {
  check(grid_size >= 5, "configuration error: grid_size must be >= 5, got ", grid_size);
  TaskSpec spec;
  spec.goal_item = goal_item;
  spec.goal_text = "make a " + goal_item;
  spec.difficulty_steps = recipes.depth(goal_item);
  spec.seed = seed;
  spec.grid_size = grid_size;
  return {build_world(recipes, spec), spec};
}

std::pair<WorldState, TaskSpec> generate_task(const RecipeGraph& recipes, uint64_t seed,
                                              int32_t difficulty_steps, int32_t grid_size) {
  check(difficulty_steps >= 1 && difficulty_steps <= 5,
        "configuration error: difficulty_steps must be in 1..5, got ", difficulty_steps);
  auto items = recipes.items_at_depth(difficulty_steps);
  check(!items.empty(), "configuration error: no items at depth ", difficulty_steps);
  RandomStream rng(derive_seed(seed, "goal"));
  const auto& item = items[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(items.size())))];
  return generate_task_for_item(recipes, seed, item, grid_size);
}

std::vector<TaskSpec> build_task_pool(const RecipeGraph& recipes, uint64_t pool_seed,
                                      const std::vector<int32_t>& difficulties,
                                      int32_t instances, int32_t grid_size) {
  std::vector<TaskSpec> out;
  uint64_t counter = 0;
  for (int32_t d : difficulties) {
    for (const auto& item : recipes.items_at_depth(d)) {
      for (int32_t i = 0; i < instances; ++i) {
        const uint64_t seed = derive_seed(pool_seed, "pool-task", counter++);
        out.push_back(generate_task_for_item(recipes, seed, item, grid_size).second);
      }
    }
  }
  return out;
}

std::pair<std::string, uint64_t> task_key(const TaskSpec& spec) {
  return {spec.goal_item, spec.seed % static_cast<uint64_t>(kSplitBuckets)};
}

std::pair<std::vector<TaskSpec>, std::vector<TaskSpec>> split_tasks(
    const std::vector<TaskSpec>& specs, double holdout_fraction, uint64_t seed) {
  check(holdout_fraction > 0.0 && holdout_fraction < 1.0,
        "split error: holdout_fraction must be in (0, 1), got ", holdout_fraction);
  std::set<std::pair<std::string, uint64_t>> key_set;
  for (const auto& s : specs) key_set.insert(task_key(s));
  check(key_set.size() >= 2, "split error: need at least 2 distinct task keys, got ",
        key_set.size());
  std::vector<std::pair<std::string, uint64_t>> keys(key_set.begin(), key_set.end());
  RandomStream rng(derive_seed(seed, "task-split"));
  rng.shuffle(keys);
  const auto n_unseen = static_cast<size_t>(
      std::llround(holdout_fraction * static_cast<double>(keys.size())));
  std::set<std::pair<std::string, uint64_t>> unseen_keys(keys.begin(),
                                                         keys.begin() + static_cast<long>(n_unseen));
  std::vector<TaskSpec> train, unseen;
  for (const auto& s : specs) {
    if (unseen_keys.count(task_key(s)))
      unseen.push_back(s);
    else
      train.push_back(s);
  }
  return {train, unseen};
}

}  // namespace ic::world
