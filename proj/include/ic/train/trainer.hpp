#pragma once
#include <string>
#include <vector>

#include "ic/data/batch.hpp"
#include "ic/train/loss.hpp"

namespace ic::train {

struct MetricsRow {
  int64_t step = 0;
  double total = 0, action_nll = 0, lang_nll = 0, grad_norm = 0;
};

struct TrainResult {
  ic::model::ModelConfig model_config;
  ic::model::ModelParams params;
  ic::data::Vocabulary vocab;
  std::vector<MetricsRow> history;
};

// Separator word joining instructions in the hierarchy's concatenated stream.
inline constexpr const char* kInstructionSeparator = "then";

// Instruction words of a sample joined by the separator (no terminator).
std::vector<int32_t> instruction_stream(const ic::data::Batch& batch, int32_t b,
                                        const ic::data::Vocabulary& vocab);

// Vocabulary for a run; the forward objective needs the action words and the
// hierarchy objectives the separator word.
ic::data::Vocabulary build_training_vocab(const TrainConfig& tc, const ic::data::Dataset& dataset);

// Fills the vocabulary/extent fields of a model config from the data.
ic::model::ModelConfig finalize_model_config(ic::model::ModelConfig mc, const TrainConfig& tc,
                                             const ic::data::Dataset& dataset,
                                             const world::Env& env,
                                             const ic::data::Vocabulary& vocab);

// Per-sample decoder workload for one objective. `intervals` drive the cross
// mask; `unmasked` overrides the mode (goal reconstruction is global).
struct LangBlock {
  ic::model::InstructionTokens tokens;
  std::vector<int32_t> targets;
  std::vector<ic::model::Interval> intervals;
  bool unmasked = false;
  bool empty() const { return tokens.ids.empty(); }
};
LangBlock lang_block_for_objective(Objective objective, const ic::data::Batch& batch, int32_t b,
                                   const ic::data::Vocabulary& vocab);

ic::model::AttentionMask cross_mask_for(const LangBlock& block, int64_t T,
                                        ic::model::MaskMode mode);

// Deterministic joint training. Writes metrics.csv, checkpoint.bin,
// model_config.txt and vocab.txt under run_dir when given. A non-finite loss
// aborts with the last good checkpoint left in place.
TrainResult train_model(const TrainConfig& tc, const ic::data::Dataset& dataset,
                  ic::model::ModelConfig mc, const world::Env& env,
                  const std::string& run_dir = "");

// Trained artifacts on disk.
struct ModelBundle {
  ic::model::ModelConfig config;
  ic::model::ModelParams params;
  ic::data::Vocabulary vocab;
};
void save_bundle(const std::string& run_dir, const TrainResult& result);
ModelBundle load_bundle(const std::string& run_dir);

}  // namespace ic::train
