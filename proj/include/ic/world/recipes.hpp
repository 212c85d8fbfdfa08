#pragma once
#include <map>
#include <string>
#include <vector>

namespace ic::world {

struct Recipe {
  std::string output;
  std::vector<std::string> inputs;  // multiset, sorted
  std::string station;              // workbench | furnace | anvil
};

// Crafting recipe DAG plus the gatherable leaves. Loaded from a text file so
// the difficulty structure stays user-editable:
//   resource <resource-name> yields <item>
//   recipe <item> = <input> [+ <input>]... @ <station> depth <n>
// The stated depth must match the computed chain depth.
class RecipeGraph {
 public:
  static RecipeGraph load_default();
  static RecipeGraph from_text(const std::string& text);
  static RecipeGraph from_file(const std::string& path);
  std::string to_text() const;

  bool gatherable(const std::string& item) const;
  bool craftable(const std::string& item) const;
  const Recipe& recipe_for(const std::string& item) const;
  // resource name ("tree") -> yielded item ("log")
  const std::map<std::string, std::string>& gatherables() const { return gatherables_; }
  const std::map<std::string, Recipe>& recipes() const { return recipes_; }
  // resource whose gather yields this item
  const std::string& resource_of(const std::string& item) const;

  // chain depth: 1 for gathered items, 1 + max(input depth) for crafted
  int32_t depth(const std::string& item) const;
  std::vector<std::string> items_at_depth(int32_t d) const;
  std::vector<std::string> all_items() const;  // sorted
  int32_t item_index(const std::string& item) const;

  // transitive input requirement counts for crafting one goal item,
  // including intermediates and gathered leaves (goal itself excluded)
  std::map<std::string, int32_t> needed_closure(const std::string& goal) const;
  // gathered leaves only
  std::map<std::string, int32_t> leaf_counts(const std::string& goal) const;

  std::vector<std::string> stations() const;  // sorted station names in use

 private:
  void validate() const;
  std::map<std::string, std::string> gatherables_;       // resource -> item
  std::map<std::string, std::string> resource_of_item_;  // item -> resource
  std::map<std::string, Recipe> recipes_;                // by output
  std::map<std::string, int32_t> stated_depth_;
};

}  // namespace ic::world
