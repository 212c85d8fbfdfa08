#pragma once
#include "ic/train/trainer.hpp"

namespace ic::train {

// Two-model baseline ("all instructions" style): the high level learns to
// emit every instruction for the episode as one EOS-separated stream; the low
// level is a plain BC policy that additionally conditions on that stream.
// At evaluation the high level's greedy decode from the first observation is
// fed to the low level for the whole episode.
struct HierarchyResult {
  TrainResult high;
  TrainResult low;
};

// Requires a fully annotated dataset.
HierarchyResult hierarchy_train(const TrainConfig& tc, const ic::data::Dataset& dataset,
                                const ic::model::ModelConfig& mc, const world::Env& env,
                                const std::string& run_dir = "");

}  // namespace ic::train
