#pragma once
#include <vector>

#include "ic/model/config.hpp"
#include "ic/model/masks.hpp"
#include "ic/model/params.hpp"
#include "ic/num/ops.hpp"

namespace ic::model {

struct ForwardCtx {
  bool training = false;
  ic::num::RandomStream* rng = nullptr;  // dropout stream, only touched in training mode
};

struct EncoderOutput {
  ic::num::Tensor latents;  // [L, D] in input order
  int64_t goal_begin = 0, goal_end = 0;
  int64_t step_begin = 0, step_end = 0;  // sequence: step latents; state: CLS + obs tokens
  int64_t cls_index = -1;                // state mode only
  int64_t step_count() const { return step_end - step_begin; }
};

// Concatenated instruction prefixes for one trajectory. Token j of instruction
// i self-attends only to tokens of instruction i at positions <= j.
struct InstructionTokens {
  std::vector<int32_t> ids;       // BOS-led decoder inputs
  std::vector<int32_t> instr_of;  // instruction index per token
  std::vector<int32_t> pos_of;    // position within the instruction
  int64_t n_instr = 0;
  int32_t bos_id = -1;
};

struct DecoderKeys {
  ic::num::Tensor keys;     // [S, D]
  int64_t prefix_cols = 0;  // leading always-attendable columns (goal latents)
};

class Model {
 public:
  Model(ModelConfig config, ModelParams params);
  static Model init(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  // Non-Markovian encoder: goal tokens prepended, causal over steps. T = 0 is
  // allowed (goal-only conditioning for the predictability probe).
  // context_ids, when the config enables instruction_context, is the
  // instruction block the hierarchy executor conditions on.
  EncoderOutput encode_sequence(const std::vector<std::vector<int32_t>>& obs_steps,
                                const std::vector<int32_t>& goal_ids, const ForwardCtx& ctx,
                                const std::vector<int32_t>* context_ids = nullptr) const;

  // Markovian encoder: CLS + observation tokens + goal tokens, full attention.
  EncoderOutput encode_state(const std::vector<int32_t>& obs_ids,
                             const std::vector<int32_t>& goal_ids,
                             const ForwardCtx& ctx) const;

  // Dense head applied position-wise; in state mode applied to z_CLS only.
  ic::num::Tensor policy_logits(const EncoderOutput& enc) const;

  // Next-token logits [tokens x text_vocab] under a per-instruction key mask.
  // cross_mask must have one row per instruction and one column per key row.
  ic::num::Tensor decode_instruction_logits(const InstructionTokens& tokens,
                                            const ic::num::Tensor& keys,
                                            const AttentionMask& cross_mask,
                                            const ForwardCtx& ctx) const;

  // Key rows the decoder may attend for this encoder output, per config.
  DecoderKeys decoder_keys(const EncoderOutput& enc) const;

  std::vector<int32_t> greedy_decode(const ic::num::Tensor& keys,
                                     const AttentionMask& single_row_mask, int32_t bos,
                                     int32_t eos, int64_t max_len) const;

 private:
  ModelConfig cfg_;
  ModelParams params_;
};

// Prepends `prefix_cols` always-allowed columns (goal latents) to a step mask.
AttentionMask widen_mask(const AttentionMask& step_mask, int64_t prefix_cols);

}  // namespace ic::model
