#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ic/world/recipes.hpp"

namespace ic::world {

enum class Cell : uint8_t {
  Empty = 0,
  Wall,
  Tree,
  Rock,
  Bush,
  Vein,
  Workbench,
  Furnace,
  Anvil,
};
inline constexpr int32_t kCellKinds = 9;

char cell_char(Cell c);
Cell cell_from_char(char ch);
// resource/station cells by name ("tree" -> Cell::Tree, "anvil" -> Cell::Anvil)
Cell cell_from_name(const std::string& name);
std::string cell_name(Cell c);
bool is_resource(Cell c);
bool is_station(Cell c);

enum class Action : int32_t { Up = 0, Down = 1, Left = 2, Right = 3, Interact = 4 };
inline constexpr int32_t kActionCount = 5;
const char* action_name(Action a);
Action action_from_int(int32_t v);  // malformed -> action error

struct WorldState {
  int32_t n = 7;
  std::vector<Cell> grid;  // n*n, row-major
  int32_t agent_r = 0, agent_c = 0;
  std::map<std::string, int32_t> inventory;
  uint64_t rng_seed = 0;  // layout seed, for provenance
  int32_t steps_taken = 0;

  Cell at(int32_t r, int32_t c) const { return grid[static_cast<size_t>(r * n + c)]; }
  void set(int32_t r, int32_t c, Cell v) { grid[static_cast<size_t>(r * n + c)] = v; }
  bool in_bounds(int32_t r, int32_t c) const { return r >= 0 && r < n && c >= 0 && c < n; }
  bool walkable(int32_t r, int32_t c) const { return in_bounds(r, c) && at(r, c) != Cell::Wall; }
  std::string grid_string() const;
  bool operator==(const WorldState&) const = default;
};

struct Env {
  RecipeGraph recipes;
  int32_t step_budget = 120;
};

struct StepResult {
  WorldState state;
  bool done = false;
  bool success = false;
};

// Pure transition. Moves blocked by bounds and walls leave the position
// unchanged. Interact scans the agent's cell first, then the four neighbours
// in reading order, and acts on the first interactable target: a resource is
// gathered (cell cleared); a station crafts the best satisfiable recipe,
// preferring outputs still missing from the goal's requirement closure, ties
// broken by name. Done with success once goal_item is in the inventory, done
// without success at the step budget.
StepResult step(const Env& env, const WorldState& state, const std::string& goal_item,
                Action action);

// Raw observation snapshot; enough to rebuild both observation modes.
struct ObsRecord {
  std::string grid;  // n*n cell characters
  int32_t n = 0;
  int32_t agent_r = 0, agent_c = 0;
  std::map<std::string, int32_t> inventory;
  bool operator==(const ObsRecord&) const = default;
};
ObsRecord observe_record(const WorldState& s);

// Tokenizer for observations. Full mode emits the whole grid, one agent
// position token and one token per item kind (count clamped to 2); partial
// mode emits an egocentric window (out-of-bounds cells read as walls) plus the
// same inventory tokens. The CLS id is the last slot of the vocabulary.
class ObsEncoder {
 public:
  ObsEncoder(const RecipeGraph& recipes, int32_t grid_size, bool full, int32_t window);

  int32_t vocab_size() const { return vocab_size_; }
  int32_t token_count() const { return token_count_; }
  int32_t grid_token_count() const { return grid_tokens_; }

  std::vector<int32_t> tokens(const ObsRecord& o) const;
  std::vector<int32_t> observe(const WorldState& s) const { return tokens(observe_record(s)); }

 private:
  std::vector<std::string> items_;
  int32_t grid_size_, window_;
  bool full_;
  int32_t grid_tokens_, token_count_, vocab_size_;
  int32_t agent_base_, inv_base_;
};

// 4-neighbour grid distances from one source; walls block. -1 = unreachable.
std::vector<int32_t> bfs_distances(const WorldState& s, int32_t r, int32_t c);
// Shortest action path onto (tr, tc); empty when already there.
// Deterministic tie-breaking follows the Up, Down, Left, Right expansion order.
std::vector<Action> bfs_path(const WorldState& s, int32_t tr, int32_t tc);

}  // namespace ic::world
