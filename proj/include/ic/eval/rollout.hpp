#pragma once
#include "ic/eval/metrics.hpp"

namespace ic::eval {

// Window size the model was trained with, recovered from its token budget.
int32_t window_from_config(const ic::model::ModelConfig& mc, const world::RecipeGraph& recipes);

// Closed-loop greedy rollout on one task. Instruction decoding (at the first
// step and after every interact) is inspection-only: the decoded text never
// feeds back into the policy.
EpisodeResult rollout_policy(const ic::model::Model& m, const ic::data::Vocabulary& vocab,
                             const world::Env& env, const world::TaskSpec& task,
                             int32_t max_steps, bool decode_instructions);

// Hierarchy evaluation: the high level greedily decodes the full instruction
// stream from the first observation; the executor conditions on it for the
// whole episode. A non-null override replaces the generated stream (used for
// the oracle-instruction comparison).
EpisodeResult hierarchy_rollout(const ic::model::Model& high, const ic::model::Model& low,
                                const ic::data::Vocabulary& vocab, const world::Env& env,
                                const world::TaskSpec& task, int32_t max_steps,
                                const std::vector<int32_t>* instruction_override = nullptr);

}  // namespace ic::eval
