#pragma once
#include <optional>
#include <vector>

#include "ic/num/ops.hpp"
#include "ic/train/config.hpp"

namespace ic::train {

struct LossBreakdown {
  double action_nll = 0.0;  // mean NLL over contributing action positions
  double lang_nll = 0.0;    // mean NLL over contributing instruction tokens
  double total = 0.0;       // action + lambda * lang under the active norm
  int64_t action_positions = 0;
  int64_t lang_positions = 0;
  ic::num::Tensor total_tensor;  // tape-connected scalar
};

// Single-trajectory joint objective. decoder_logits/instruction_targets may be
// null for unannotated data or lambda = 0; the language term then contributes
// exactly nothing.
LossBreakdown joint_loss(const ic::num::Tensor& action_logits,
                         const std::vector<int32_t>& action_targets,
                         const ic::num::Tensor* decoder_logits,
                         const std::vector<int32_t>* instruction_targets, double lambda,
                         LossNorm norm = LossNorm::Mean);

// Batch variant: terms average over contributing positions pooled across the
// whole batch (or raw per-trajectory sums scaled by 1/B under Sum norm).
struct BatchLossInputs {
  std::vector<ic::num::Tensor> action_logits;
  std::vector<std::vector<int32_t>> action_targets;
  std::vector<ic::num::Tensor> decoder_logits;  // undefined entries are skipped
  std::vector<std::vector<int32_t>> decoder_targets;
};
LossBreakdown batch_joint_loss(const BatchLossInputs& in, double lambda, LossNorm norm);

inline constexpr int32_t kIgnoreAction = -1;

}  // namespace ic::train
