#pragma once
#include <cstdint>
#include <string>

#include "ic/num/tensor.hpp"

namespace ic::model {

enum class Observability { Full, Partial };
enum class MaskMode { Onset, Execution, Unmasked };

const char* observability_name(Observability o);
const char* mask_mode_name(MaskMode m);
Observability parse_observability(const std::string& s);
MaskMode parse_mask_mode(const std::string& s);

// Architecture description. Parameter shapes and count are a pure function of
// this struct. Vocabulary-dependent fields are filled in from the environment
// encoding and the dataset vocabulary before a model is materialized.
struct ModelConfig {
  int64_t encoder_blocks = 4;
  int64_t decoder_blocks = 1;
  int64_t embed_dim = 128;
  int64_t mlp_dim = 256;
  int64_t heads = 4;
  double dropout = 0.0;
  int64_t max_seq_len = 128;
  int64_t max_goal_len = 8;
  int64_t max_instr_len = 24;
  int64_t max_ctx_len = 80;  // instruction block fed to the hierarchy executor
  int64_t obs_vocab_size = 0;
  int64_t text_vocab_size = 0;
  int64_t action_count = 5;
  int64_t obs_tokens = 0;  // tokens per observation
  Observability observability = Observability::Partial;
  MaskMode mask_mode = MaskMode::Execution;
  bool decoder_attends_goal = false;
  bool instruction_context = false;  // hierarchy executor conditions on instructions
  ic::num::DType dtype = ic::num::DType::f32;

  // CLS lives in the observation vocabulary's last slot.
  int64_t cls_token_id() const { return obs_vocab_size - 1; }

  void validate() const;
  std::string to_text() const;             // key = value lines
  static ModelConfig from_text(const std::string& text);
};

}  // namespace ic::model
