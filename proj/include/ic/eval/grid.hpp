#pragma once
#include <set>

#include "ic/eval/report.hpp"
#include "ic/eval/rollout.hpp"
#include "ic/train/hierarchy.hpp"

namespace ic::eval {

struct GridSpec {
  std::vector<int64_t> demo_counts;
  std::vector<double> annotation_fractions{1.0};
  std::vector<ic::train::Objective> objectives;
  std::vector<ic::model::MaskMode> mask_modes{ic::model::MaskMode::Execution};
  std::vector<uint64_t> seeds{0};
};

struct GridBase {
  ic::train::TrainConfig train_template;
  ic::model::ModelConfig model_template;
  world::Env env;
  uint64_t data_seed = 0;
  std::vector<int32_t> difficulties{1, 2, 3};
  int32_t grid_size = world::kDefaultGridSize;
  int32_t pool_instances = 24;  // tasks per goal item in the shared pool
  double holdout_fraction = 0.25;
  int32_t eval_episodes = 200;
  int32_t heldout_language_trajectories = 40;
  int32_t workers = 1;
  std::string code_version = "grid-v1";
};

// Shared task pool, train/unseen split, oracle demo set and held-out
// language-metric trajectories; identical across every cell of a grid.
struct GridContext {
  std::vector<world::TaskSpec> train_specs, unseen_specs;
  ic::data::Dataset demos;    // oracle demos for the train side
  ic::data::Dataset heldout;  // oracle demos of unseen tasks (language metrics)
  std::set<std::string> unseen_keys;
};
GridContext prepare_grid_context(const GridBase& base, int64_t max_demos);

struct CellSpec {
  ic::train::Objective objective;
  int64_t demos = 0;
  double annotation_fraction = 1.0;
  ic::model::MaskMode mask_mode = ic::model::MaskMode::Execution;
  uint64_t seed = 0;
  std::string name() const;
};

uint64_t cell_config_hash(const GridBase& base, const CellSpec& cell,
                          const ic::data::Dataset& cell_dataset);

// Trains and evaluates one cell; every evaluated task key is asserted to be
// in the unseen split. model_dir (optional) keeps the cell's checkpoint.
ReportRow run_cell(const GridBase& base, const GridContext& ctx, const CellSpec& cell,
                   const std::string& model_dir = "");

// Full sweep with per-cell resumable caching under run_dir/cells; a cached
// cell whose stored hash disagrees with the requested configuration is a
// cache error. Rows come out in deterministic cell order.
EvalReport run_experiment_grid(const GridSpec& spec, const GridBase& base,
                               const std::string& run_dir);

}  // namespace ic::eval
