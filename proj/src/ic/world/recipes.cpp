#include "ic/world/recipes.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ic/error.hpp"

namespace ic::world {

namespace {

const char* kDefaultRecipes = R"(# default craftworld recipe set
# chain depth 1 items are gathered directly from the map
resource tree yields log
resource rock yields stone
resource bush yields fiber
resource vein yields ore

recipe plank = log @ workbench depth 2
recipe brick = stone + stone @ furnace depth 2
recipe rope = fiber + fiber @ workbench depth 2
recipe ingot = ore @ furnace depth 2

recipe stick = plank @ workbench depth 3
recipe ladder = plank + rope @ workbench depth 3
recipe gear = ingot + stone @ anvil depth 3

recipe hammer = stick + ingot @ anvil depth 4
recipe fence = stick + rope @ workbench depth 4
recipe axe = stick + stone @ anvil depth 4

recipe machine = gear + hammer @ anvil depth 5
recipe cart = hammer + plank @ anvil depth 5
recipe bridge = ladder + axe @ workbench depth 5
)";

const std::set<std::string> kStations{"workbench", "furnace", "anvil"};

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

RecipeGraph RecipeGraph::load_default() { return from_text(kDefaultRecipes); }

RecipeGraph RecipeGraph::from_file(const std::string& path) {
  std::ifstream is(path);
  check(static_cast<bool>(is), "I/O error: cannot open recipe file ", path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

RecipeGraph RecipeGraph::from_text(const std::string& text) {
  RecipeGraph g;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "resource") {
      check(toks.size() == 4 && toks[2] == "yields", "recipe error: line ", line_no,
            ": expected 'resource <name> yields <item>'");
      g.gatherables_[toks[1]] = toks[3];
      g.resource_of_item_[toks[3]] = toks[1];
    } else if (toks[0] == "recipe") {
      // recipe <item> = <in> [+ <in>]... @ <station> depth <n>
      check(toks.size() >= 8 && toks[2] == "=", "recipe error: line ", line_no,
            ": expected 'recipe <item> = <inputs> @ <station> depth <n>'");
      Recipe r;
      r.output = toks[1];
      size_t i = 3;
      while (i < toks.size() && toks[i] != "@") {
        if (toks[i] != "+") r.inputs.push_back(toks[i]);
        ++i;
      }
      check(i + 4 == toks.size() && toks[i] == "@" && toks[i + 2] == "depth",
            "recipe error: line ", line_no, ": malformed recipe tail");
      r.station = toks[i + 1];
      check(kStations.count(r.station) == 1, "recipe error: line ", line_no,
            ": unknown station ", r.station);
      check(!r.inputs.empty(), "recipe error: line ", line_no, ": recipe needs inputs");
      std::sort(r.inputs.begin(), r.inputs.end());
      g.stated_depth_[r.output] = std::stoi(toks[i + 3]);
      g.recipes_[r.output] = std::move(r);
    } else {
      fail("recipe error: line ", line_no, ": unknown directive '", toks[0], "'");
    }
  }
  g.validate();
  return g;
}

std::string RecipeGraph::to_text() const {
  std::ostringstream os;
  for (const auto& [res, item] : gatherables_)
    os << "resource " << res << " yields " << item << "\n";
  for (const auto& [out, r] : recipes_) {
    os << "recipe " << out << " = ";
    for (size_t i = 0; i < r.inputs.size(); ++i) {
      if (i) os << " + ";
      os << r.inputs[i];
    }
    os << " @ " << r.station << " depth " << depth(out) << "\n";
  }
  return os.str();
}

void RecipeGraph::validate() const {
  check(!gatherables_.empty(), "recipe error: no gatherable resources");
  for (const auto& [out, r] : recipes_) {
    check(gatherables_.count(out) == 0 || resource_of_item_.count(out) == 0,
          "recipe error: ", out, " is both gathered and crafted");
    for (const auto& in : r.inputs)
      check(recipes_.count(in) == 1 || resource_of_item_.count(in) == 1,
            "recipe error: input ", in, " of ", out, " is neither craftable nor gatherable");
  }
  // depth() throws on cycles via recursion guard; verify stated depths and range
  for (const auto& [out, d] : stated_depth_) {
    const int32_t computed = depth(out);
    check(computed == d, "recipe error: stated depth ", d, " of ", out,
          " does not match computed depth ", computed);
    check(computed >= 1 && computed <= 5, "recipe error: depth of ", out, " out of range 1..5");
  }
}

bool RecipeGraph::gatherable(const std::string& item) const {
  return resource_of_item_.count(item) == 1;
}

bool RecipeGraph::craftable(const std::string& item) const { return recipes_.count(item) == 1; }

const Recipe& RecipeGraph::recipe_for(const std::string& item) const {
  auto it = recipes_.find(item);
  check(it != recipes_.end(), "recipe error: no recipe for ", item);
  return it->second;
}

const std::string& RecipeGraph::resource_of(const std::string& item) const {
  auto it = resource_of_item_.find(item);
  check(it != resource_of_item_.end(), "recipe error: ", item, " is not gathered");
  return it->second;
}

int32_t RecipeGraph::depth(const std::string& item) const {
  std::function<int32_t(const std::string&, int)> go = [&](const std::string& it,
                                                           int guard) -> int32_t {
    check(guard < 32, "recipe error: cycle involving ", it);
    if (gatherable(it)) return 1;
    const Recipe& r = recipe_for(it);
    int32_t mx = 0;
    for (const auto& in : r.inputs) mx = std::max(mx, go(in, guard + 1));
    return mx + 1;
  };
  return go(item, 0);
}

std::vector<std::string> RecipeGraph::items_at_depth(int32_t d) const {
  std::vector<std::string> out;
  for (const auto& item : all_items())
    if (depth(item) == d) out.push_back(item);
  return out;
}

std::vector<std::string> RecipeGraph::all_items() const {
  std::vector<std::string> out;
  for (const auto& [item, res] : resource_of_item_) out.push_back(item);
  for (const auto& [item, r] : recipes_) out.push_back(item);
  std::sort(out.begin(), out.end());
  return out;
}

int32_t RecipeGraph::item_index(const std::string& item) const {
  auto items = all_items();
  auto it = std::lower_bound(items.begin(), items.end(), item);
  check(it != items.end() && *it == item, "recipe error: unknown item ", item);
  return static_cast<int32_t>(it - items.begin());
}

std::map<std::string, int32_t> RecipeGraph::needed_closure(const std::string& goal) const {
  std::map<std::string, int32_t> counts;
  std::function<void(const std::string&, int32_t)> go = [&](const std::string& item,
                                                            int32_t k) {
    if (gatherable(item)) return;
    for (const auto& in : recipe_for(item).inputs) {
      counts[in] += k;
      go(in, k);
    }
  };
  go(goal, 1);
  return counts;
}

std::map<std::string, int32_t> RecipeGraph::leaf_counts(const std::string& goal) const {
  std::map<std::string, int32_t> out;
  if (gatherable(goal)) {
    out[goal] = 1;
    return out;
  }
  for (const auto& [item, k] : needed_closure(goal))
    if (gatherable(item)) out[item] = k;
  return out;
}

std::vector<std::string> RecipeGraph::stations() const {
  std::set<std::string> s;
  for (const auto& [out, r] : recipes_) s.insert(r.station);
  return std::vector<std::string>(s.begin(), s.end());
}

}  // namespace ic::world
