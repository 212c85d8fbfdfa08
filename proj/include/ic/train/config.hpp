#pragma once
#include <string>

#include "ic/model/config.hpp"
#include "ic/num/adam.hpp"
#include "ic/world/task.hpp"

namespace ic::train {

enum class Objective {
  Lang,           // behavior cloning + instruction prediction (Eq. 1 style)
  Bc,             // plain behavior cloning; identical code path with lambda = 0
  Forward,        // decoder predicts remaining future actions instead
  GoalPred,       // decoder reconstructs the goal text
  Hierarchy,      // two-model pipeline; train via hierarchy_train
  HierarchyHigh,  // internal: instruction-concatenation predictor
  HierarchyLow,   // internal: instruction-conditioned executor
  ProbeGoalOnly,  // predictability probe, goal conditioning
  ProbeGoalObs,   // predictability probe, goal + observations
};

const char* objective_name(Objective o);
Objective parse_objective(const std::string& s);

enum class LossNorm { Mean, Sum };

struct TrainConfig {
  Objective objective = Objective::Lang;
  double lambda_lang = 0.25;
  int64_t steps = 20000;  // desk-scale default
  int32_t batch_size = 16;
  ic::num::AdamConfig adam;
  uint64_t seed = 0;
  ic::model::MaskMode mask_mode = ic::model::MaskMode::Execution;
  ic::model::Observability observability = ic::model::Observability::Partial;
  int32_t window = ic::world::kDefaultWindow;
  LossNorm loss_norm = LossNorm::Mean;  // per-position means; Sum = raw Eq.-style sums
  int64_t checkpoint_every = 0;         // extra periodic checkpoints; final always written
  std::string preset;                   // provenance only

  bool uses_decoder() const {
    return objective != Objective::Bc && lambda_lang > 0.0;
  }
};

// Named hyperparameter presets. "babyai-like": lambda 0.7, dropout 0, plain
// Adam, no clipping, batch 32. "crafting-like": lambda 0.25, dropout 0.1,
// decoupled weight decay 0.05, grad-norm clip 1, batch 64. Both: lr 1e-4,
// epsilon 1e-8.
void apply_preset(const std::string& name, TrainConfig& tc, ic::model::ModelConfig& mc);

}  // namespace ic::train
