#include "ic/world/world.hpp"

#include <algorithm>
#include <deque>

#include "ic/error.hpp"

namespace ic::world {

namespace {
constexpr char kCellChars[kCellKinds + 1] = ".#TRBVWFA";

const std::map<std::string, Cell>& name_to_cell() {
  static const std::map<std::string, Cell> m{
      {"empty", Cell::Empty},   {"wall", Cell::Wall},       {"tree", Cell::Tree},
      {"rock", Cell::Rock},     {"bush", Cell::Bush},       {"vein", Cell::Vein},
      {"workbench", Cell::Workbench}, {"furnace", Cell::Furnace}, {"anvil", Cell::Anvil},
  };
  return m;
}
}  // namespace

char cell_char(Cell c) { return kCellChars[static_cast<size_t>(c)]; }

Cell cell_from_char(char ch) {
  for (int32_t i = 0; i < kCellKinds; ++i)
    if (kCellChars[i] == ch) return static_cast<Cell>(i);
  fail("format error: unknown grid character '", ch, "'");
}

Cell cell_from_name(const std::string& name) {
  auto it = name_to_cell().find(name);
  check(it != name_to_cell().end(), "format error: unknown cell name ", name);
  return it->second;
}

std::string cell_name(Cell c) {
  for (const auto& [name, cell] : name_to_cell())
    if (cell == c) return name;
  return "?";
}

bool is_resource(Cell c) {
  return c == Cell::Tree || c == Cell::Rock || c == Cell::Bush || c == Cell::Vein;
}

bool is_station(Cell c) {
  return c == Cell::Workbench || c == Cell::Furnace || c == Cell::Anvil;
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
    default: return "interact";
  }
}

Action action_from_int(int32_t v) {
  check(v >= 0 && v < kActionCount, "action error: ", v, " is not a valid action");
  return static_cast<Action>(v);
}

std::string WorldState::grid_string() const {
  std::string s(grid.size(), '.');
  for (size_t i = 0; i < grid.size(); ++i) s[i] = cell_char(grid[i]);
  return s;
}

namespace {

// Crafting choice at a station: among satisfiable recipes prefer outputs the
// goal's requirement closure still misses, then the lexicographically
// smallest output. Deterministic and goal-directed without a planner.
const Recipe* pick_recipe(const Env& env, const WorldState& s, const std::string& goal_item,
                          Cell station) {
  const std::string station_name = cell_name(station);
  const Recipe* best = nullptr;
  int best_priority = 2;
  std::map<std::string, int32_t> closure;
  bool closure_ready = false;
  for (const auto& [out, r] : env.recipes.recipes()) {
    if (r.station != station_name) continue;
    bool ok = true;
    std::map<std::string, int32_t> need;
    for (const auto& in : r.inputs) need[in] += 1;
    for (const auto& [in, k] : need) {
      auto it = s.inventory.find(in);
      if (it == s.inventory.end() || it->second < k) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if (!closure_ready) {
      if (env.recipes.craftable(goal_item)) closure = env.recipes.needed_closure(goal_item);
      closure[goal_item] += 1;
      closure_ready = true;
    }
    int priority = 1;
    auto needed = closure.find(out);
    if (needed != closure.end()) {
      auto held = s.inventory.find(out);
      const int32_t have = held == s.inventory.end() ? 0 : held->second;
      if (have < needed->second) priority = 0;
    }
    if (!best || priority < best_priority ||
        (priority == best_priority && out < best->output)) {
      best = &r;
      best_priority = priority;
    }
  }
  return best;
}

}  // namespace

StepResult step(const Env& env, const WorldState& state, const std::string& goal_item,
                Action action) {
  StepResult res;
  res.state = state;
  WorldState& s = res.state;
  s.steps_taken += 1;

  switch (action) {
    case Action::Up:
    case Action::Down:
    case Action::Left:
    case Action::Right: {
      const int32_t dr = action == Action::Up ? -1 : action == Action::Down ? 1 : 0;
      const int32_t dc = action == Action::Left ? -1 : action == Action::Right ? 1 : 0;
      const int32_t nr = s.agent_r + dr, nc = s.agent_c + dc;
      if (s.walkable(nr, nc)) {
        s.agent_r = nr;
        s.agent_c = nc;
      }
      break;
    }
    case Action::Interact: {
      // current cell first, then neighbours in reading order
      const int32_t r = s.agent_r, c = s.agent_c;
      const int32_t targets[5][2] = {{r, c}, {r - 1, c}, {r, c - 1}, {r, c + 1}, {r + 1, c}};
      for (const auto& t : targets) {
        if (!s.in_bounds(t[0], t[1])) continue;
        const Cell cell = s.at(t[0], t[1]);
        if (is_resource(cell)) {
          const std::string item = env.recipes.gatherables().at(cell_name(cell));
          s.inventory[item] += 1;
          s.set(t[0], t[1], Cell::Empty);
          break;
        }
        if (is_station(cell)) {
          const Recipe* r2 = pick_recipe(env, s, goal_item, cell);
          if (!r2) continue;  // nothing craftable here, keep scanning
          for (const auto& in : r2->inputs) {
            auto it = s.inventory.find(in);
            it->second -= 1;
            if (it->second == 0) s.inventory.erase(it);
          }
          s.inventory[r2->output] += 1;
          break;
        }
      }
      break;
    }
  }

  auto held = s.inventory.find(goal_item);
  if (held != s.inventory.end() && held->second > 0) {
    res.done = true;
    res.success = true;
  } else if (s.steps_taken >= env.step_budget) {
    res.done = true;
    res.success = false;
  }
  return res;
}

ObsRecord observe_record(const WorldState& s) {
  ObsRecord o;
  o.grid = s.grid_string();
  o.n = s.n;
  o.agent_r = s.agent_r;
  o.agent_c = s.agent_c;
  o.inventory = s.inventory;
  return o;
}

ObsEncoder::ObsEncoder(const RecipeGraph& recipes, int32_t grid_size, bool full,
                       int32_t window)
    : items_(recipes.all_items()), grid_size_(grid_size), window_(window), full_(full) {
  check(window_ % 2 == 1, "configuration error: observation window must be odd, got ",
        window_);
  const int32_t n_items = static_cast<int32_t>(items_.size());
  grid_tokens_ = full_ ? grid_size_ * grid_size_ : window_ * window_;
  token_count_ = grid_tokens_ + (full_ ? 1 : 0) + n_items;
  agent_base_ = kCellKinds;
  inv_base_ = kCellKinds + (full_ ? grid_size_ * grid_size_ : 0);
  vocab_size_ = inv_base_ + 3 * n_items + 1;  // +1 for CLS
}

std::vector<int32_t> ObsEncoder::tokens(const ObsRecord& o) const {
  check(o.n == grid_size_, "shape error: observation for a ", o.n, "x", o.n,
        " grid fed to a ", grid_size_, "x", grid_size_, " encoder");
  std::vector<int32_t> out;
  out.reserve(static_cast<size_t>(token_count_));
  if (full_) {
    for (char ch : o.grid) out.push_back(static_cast<int32_t>(cell_from_char(ch)));
    out.push_back(agent_base_ + o.agent_r * grid_size_ + o.agent_c);
  } else {
    const int32_t half = window_ / 2;
    for (int32_t dr = -half; dr <= half; ++dr)
      for (int32_t dc = -half; dc <= half; ++dc) {
        const int32_t r = o.agent_r + dr, c = o.agent_c + dc;
        if (r < 0 || r >= o.n || c < 0 || c >= o.n)
          out.push_back(static_cast<int32_t>(Cell::Wall));
        else
          out.push_back(
              static_cast<int32_t>(cell_from_char(o.grid[static_cast<size_t>(r * o.n + c)])));
      }
  }
  for (size_t i = 0; i < items_.size(); ++i) {
    auto it = o.inventory.find(items_[i]);
    const int32_t count = it == o.inventory.end() ? 0 : std::min(it->second, 2);
    out.push_back(inv_base_ + static_cast<int32_t>(i) * 3 + count);
  }
  return out;
}

std::vector<int32_t> bfs_distances(const WorldState& s, int32_t r, int32_t c) {
  std::vector<int32_t> dist(s.grid.size(), -1);
  std::deque<int32_t> q;
  dist[static_cast<size_t>(r * s.n + c)] = 0;
  q.push_back(r * s.n + c);
  while (!q.empty()) {
    const int32_t cur = q.front();
    q.pop_front();
    const int32_t cr = cur / s.n, cc = cur % s.n;
    const int32_t nexts[4][2] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
    for (const auto& nx : nexts) {
      if (!s.walkable(nx[0], nx[1])) continue;
      const int32_t idx = nx[0] * s.n + nx[1];
      if (dist[static_cast<size_t>(idx)] >= 0) continue;
      dist[static_cast<size_t>(idx)] = dist[static_cast<size_t>(cur)] + 1;
      q.push_back(idx);
    }
  }
  return dist;
}

std::vector<Action> bfs_path(const WorldState& s, int32_t tr, int32_t tc) {
  check(s.walkable(tr, tc), "planning error: target (", tr, ",", tc, ") is not walkable");
  if (tr == s.agent_r && tc == s.agent_c) return {};
  std::vector<int32_t> parent(s.grid.size(), -1);
  std::vector<Action> via(s.grid.size(), Action::Up);
  std::deque<int32_t> q;
  const int32_t start = s.agent_r * s.n + s.agent_c;
  parent[static_cast<size_t>(start)] = start;
  q.push_back(start);
  const Action acts[4] = {Action::Up, Action::Down, Action::Left, Action::Right};
  while (!q.empty()) {
    const int32_t cur = q.front();
    q.pop_front();
    if (cur == tr * s.n + tc) break;
    const int32_t cr = cur / s.n, cc = cur % s.n;
    const int32_t nexts[4][2] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
    for (int k = 0; k < 4; ++k) {
      if (!s.walkable(nexts[k][0], nexts[k][1])) continue;
      const int32_t idx = nexts[k][0] * s.n + nexts[k][1];
      if (parent[static_cast<size_t>(idx)] >= 0) continue;
      parent[static_cast<size_t>(idx)] = cur;
      via[static_cast<size_t>(idx)] = acts[k];
      q.push_back(idx);
    }
  }
  const int32_t target = tr * s.n + tc;
  check(parent[static_cast<size_t>(target)] >= 0, "planning error: target (", tr, ",", tc,
        ") unreachable from (", s.agent_r, ",", s.agent_c, ")");
  std::vector<Action> path;
  for (int32_t cur = target; cur != start; cur = parent[static_cast<size_t>(cur)])
    path.push_back(via[static_cast<size_t>(cur)]);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace ic::world
