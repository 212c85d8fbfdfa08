#include "ic/train/hierarchy.hpp"

#include "ic/error.hpp"

namespace ic::train {

HierarchyResult hierarchy_train(const TrainConfig& tc, const ic::data::Dataset& dataset,
                                const ic::model::ModelConfig& mc, const world::Env& env,
                                const std::string& run_dir) {
  check(tc.objective == Objective::Hierarchy,
        "configuration error: hierarchy_train needs the hierarchy objective");
  for (const auto& traj : dataset)
    check(traj.annotated(),
          "configuration error: hierarchy training needs a fully annotated dataset");

  HierarchyResult out;
  TrainConfig high_tc = tc;
  high_tc.objective = Objective::HierarchyHigh;
  high_tc.lambda_lang = 1.0;
  high_tc.seed = ic::num::derive_seed(tc.seed, "hierarchy-high");
  out.high = train_model(high_tc, dataset, mc, env, run_dir.empty() ? "" : run_dir + "/high");

  TrainConfig low_tc = tc;
  low_tc.objective = Objective::HierarchyLow;
  low_tc.lambda_lang = 0.0;
  low_tc.seed = ic::num::derive_seed(tc.seed, "hierarchy-low");
  out.low = train_model(low_tc, dataset, mc, env, run_dir.empty() ? "" : run_dir + "/low");
  return out;
}

}  // namespace ic::train
