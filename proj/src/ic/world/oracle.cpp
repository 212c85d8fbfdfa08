#include "ic/world/oracle.hpp"

#include <algorithm>
#include <limits>

#include "ic/error.hpp"
#include "ic/num/random.hpp"

namespace ic::world {

using ic::num::derive_seed;
using ic::num::RandomStream;

namespace {

constexpr int32_t kFarDistance = 4;  // "go to ..." phrasing beyond this

struct Planner {
  const Env& env;
  const TaskSpec& task;
  WorldState state;
  Trajectory traj;
  RandomStream templates;
  int32_t budget;
  bool finished = false;

  Planner(const Env& e, const WorldState& start, const TaskSpec& t, int32_t max_steps)
      : env(e),
        task(t),
        state(start),
        templates(derive_seed(t.seed, "instructions")),
        budget(std::min(e.step_budget, max_steps)) {}

  void act(Action a) {
    check(!finished, "planning error: acting after the episode finished");
    check(static_cast<int32_t>(traj.actions.size()) < budget,
          "planning error: step budget exhausted while planning goal ", task.goal_item);
    traj.observations.push_back(observe_record(state));
    traj.actions.push_back(static_cast<int32_t>(a));
    Env local = env;
    local.step_budget = budget;
    StepResult res = step(local, state, task.goal_item, a);
    state = res.state;
    if (res.done) {
      check(res.success, "planning error: episode ended without success");
      finished = true;
    }
  }

  // nearest cell of this type by walk distance, ties to the smallest index
  int32_t nearest_cell(Cell cell) const {
    const auto dist = bfs_distances(state, state.agent_r, state.agent_c);
    int32_t best = -1, best_d = std::numeric_limits<int32_t>::max();
    for (int32_t idx = 0; idx < state.n * state.n; ++idx) {
      if (state.grid[static_cast<size_t>(idx)] != cell) continue;
      const int32_t d = dist[static_cast<size_t>(idx)];
      if (d < 0) continue;
      if (d < best_d) {
        best_d = d;
        best = idx;
      }
    }
    return best;
  }

  int32_t distance_to(Cell cell) const {
    const int32_t idx = nearest_cell(cell);
    if (idx < 0) return std::numeric_limits<int32_t>::max();
    const auto dist = bfs_distances(state, state.agent_r, state.agent_c);
    return dist[static_cast<size_t>(idx)];
  }

  // proximity of the closest gatherable leaf feeding this item
  int32_t proximity(const std::string& item) const {
    if (env.recipes.gatherable(item))
      return distance_to(cell_from_name(env.recipes.resource_of(item)));
    int32_t best = std::numeric_limits<int32_t>::max();
    for (const auto& [leaf, k] : env.recipes.leaf_counts(item))
      best = std::min(best, distance_to(cell_from_name(env.recipes.resource_of(leaf))));
    return best;
  }

  void begin_segment(const std::string& text) {
    Segment seg;
    seg.text = text;
    seg.t_begin = static_cast<int64_t>(traj.actions.size()) + 1;
    traj.segments.push_back(seg);
  }

  void end_segment() { traj.segments.back().t_end = static_cast<int64_t>(traj.actions.size()) + 1; }

  void walk_to(int32_t idx) {
    for (Action a : bfs_path(state, idx / state.n, idx % state.n)) act(a);
  }

  void gather(const std::string& item) {
    const std::string& resource = env.recipes.resource_of(item);
    const Cell cell = cell_from_name(resource);
    const int32_t idx = nearest_cell(cell);
    check(idx >= 0, "planning error: no reachable ", resource, " while gathering ", item);
    const auto dist = bfs_distances(state, state.agent_r, state.agent_c);
    const int32_t d = dist[static_cast<size_t>(idx)];

    std::string text;
    if (d >= kFarDistance) {
      text = "go to the " + resource + " and mine it";
    } else if (templates.uniform_int(2) == 0) {
      text = "mine the " + resource;
    } else {
      text = "grab the " + item;
    }
    begin_segment(text);
    const int32_t before = state.inventory.count(item) ? state.inventory.at(item) : 0;
    walk_to(idx);
    act(Action::Interact);
    end_segment();
    if (!finished) {
      const int32_t after = state.inventory.count(item) ? state.inventory.at(item) : 0;
      check(after == before + 1, "planning error: gathering ", item, " had no effect");
    }
  }

  void craft(const std::string& item) {
    const Recipe& r = env.recipes.recipe_for(item);
    const Cell cell = cell_from_name(r.station);
    const int32_t idx = nearest_cell(cell);
    check(idx >= 0, "planning error: no reachable ", r.station, " to craft ", item);

    std::string text;
    switch (templates.uniform_int(3)) {
      case 0: text = "craft a " + item + " at the " + r.station; break;
      case 1: text = "make a " + item + " at the " + r.station; break;
      default: text = "use the " + r.station + " to make a " + item; break;
    }
    begin_segment(text);
    const int32_t before = state.inventory.count(item) ? state.inventory.at(item) : 0;
    walk_to(idx);
    act(Action::Interact);
    end_segment();
    if (!finished) {
      const int32_t after = state.inventory.count(item) ? state.inventory.at(item) : 0;
      check(after == before + 1, "planning error: crafting ", item,
            " selected a different recipe");
    }
  }

  void build(const std::string& item) {
    if (env.recipes.gatherable(item)) {
      gather(item);
      return;
    }
    std::vector<std::string> pending = env.recipes.recipe_for(item).inputs;
    while (!pending.empty()) {
      size_t pick = 0;
      int32_t best = std::numeric_limits<int32_t>::max();
      for (size_t i = 0; i < pending.size(); ++i) {
        const int32_t p = proximity(pending[i]);
        if (p < best || (p == best && pending[i] < pending[pick])) {
          best = p;
          pick = i;
        }
      }
      build(pending[pick]);
      pending.erase(pending.begin() + static_cast<long>(pick));
    }
    craft(item);
  }
};

}  // namespace

Trajectory oracle_rollout(const Env& env, const WorldState& start, const TaskSpec& task,
                          int32_t max_steps) {
  Planner p(env, start, task, max_steps);
  p.traj.seed = task.seed;
  p.traj.difficulty = task.difficulty_steps;
  p.traj.grid_size = task.grid_size;
  p.traj.goal_item = task.goal_item;
  p.traj.goal_text = task.goal_text;
  p.build(task.goal_item);
  check(p.finished, "planning error: plan completed without reaching the goal");
  p.traj.success = true;
  check(!p.traj.segments.empty() && p.traj.segments.front().t_begin == 1,
        "planning error: segment intervals do not start at 1");
  return p.traj;
}

bool matches_instruction_grammar(const RecipeGraph& recipes, const std::string& text) {
  auto is_resource_word = [&](const std::string& w) {
    return recipes.gatherables().count(w) == 1;
  };
  auto is_item_word = [&](const std::string& w) {
    const auto items = recipes.all_items();
    return std::binary_search(items.begin(), items.end(), w);
  };
  auto is_station_word = [&](const std::string& w) {
    const auto st = recipes.stations();
    return std::find(st.begin(), st.end(), w) != st.end();
  };

  std::vector<std::string> tok;
  {
    std::string cur;
    for (char ch : text + " ") {
      if (ch == ' ') {
        if (!cur.empty()) tok.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
  }
  auto tmatch = [&](std::initializer_list<const char*> shape) {
    if (tok.size() != shape.size()) return false;
    size_t i = 0;
    for (const char* s : shape) {
      const std::string want(s);
      const std::string& got = tok[i++];
      if (want == "<resource>") {
        if (!is_resource_word(got)) return false;
      } else if (want == "<item>") {
        if (!is_item_word(got)) return false;
      } else if (want == "<station>") {
        if (!is_station_word(got)) return false;
      } else if (want != got) {
        return false;
      }
    }
    return true;
  };

  return tmatch({"mine", "the", "<resource>"}) || tmatch({"grab", "the", "<item>"}) ||
         tmatch({"go", "to", "the", "<resource>", "and", "mine", "it"}) ||
         tmatch({"craft", "a", "<item>", "at", "the", "<station>"}) ||
         tmatch({"make", "a", "<item>", "at", "the", "<station>"}) ||
         tmatch({"use", "the", "<station>", "to", "make", "a", "<item>"});
}

std::vector<std::string> grammar_words() {
  return {"mine", "the", "grab", "go", "to", "and", "it", "craft", "a", "at", "make", "use"};
}

ReplayResult replay_actions(const Env& env, const WorldState& start,
                            const std::string& goal_item, const std::vector<int32_t>& actions) {
  ReplayResult out;
  WorldState s = start;
  for (int32_t a : actions) {
    out.observations.push_back(observe_record(s));
    StepResult res = step(env, s, goal_item, action_from_int(a));
    s = res.state;
    if (res.done) {
      out.success = res.success;
      break;
    }
  }
  return out;
}

}  // namespace ic::world
