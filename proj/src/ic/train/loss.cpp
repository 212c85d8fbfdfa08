#include "ic/train/loss.hpp"

#include "ic/data/vocab.hpp"
#include "ic/error.hpp"

namespace ic::train {

using namespace ic::num;

namespace {

int64_t live_targets(const std::vector<int32_t>& targets, int32_t ignore) {
  int64_t n = 0;
  for (int32_t t : targets) n += t == ignore ? 0 : 1;
  return n;
}

}  // namespace

LossBreakdown batch_joint_loss(const BatchLossInputs& in, double lambda, LossNorm norm) {
  check(lambda >= 0.0, "configuration error: lambda must be nonnegative, got ", lambda);
  check(!in.action_logits.empty() || !in.decoder_logits.empty(),
        "configuration error: empty batch");
  check(in.action_logits.size() == in.action_targets.size(),
        "shape mismatch: action logits vs targets");
  check(in.decoder_logits.size() == in.decoder_targets.size(),
        "shape mismatch: decoder logits vs targets");

  LossBreakdown out;
  Tensor action_sum, lang_sum;
  for (size_t s = 0; s < in.action_logits.size(); ++s) {
    const int64_t live = live_targets(in.action_targets[s], kIgnoreAction);
    if (live == 0) continue;
    Tensor term = cross_entropy_logits(in.action_logits[s], in.action_targets[s],
                                       kIgnoreAction, Reduction::Sum);
    action_sum = action_sum.defined() ? add(action_sum, term) : term;
    out.action_positions += live;
  }
  check(out.action_positions > 0 || in.action_logits.empty(),
        "empty-reduction error: no live action targets in batch");

  for (size_t s = 0; s < in.decoder_logits.size(); ++s) {
    if (!in.decoder_logits[s].defined()) continue;
    const int64_t live = live_targets(in.decoder_targets[s], data::Vocabulary::kPad);
    if (live == 0) continue;
    Tensor term = cross_entropy_logits(in.decoder_logits[s], in.decoder_targets[s],
                                       data::Vocabulary::kPad, Reduction::Sum);
    lang_sum = lang_sum.defined() ? add(lang_sum, term) : term;
    out.lang_positions += live;
  }

  check(out.action_positions > 0 || out.lang_positions > 0,
        "empty-reduction error: batch contributes no loss terms");
  out.action_nll = out.action_positions > 0
                       ? action_sum.item() / static_cast<double>(out.action_positions)
                       : 0.0;
  out.lang_nll = out.lang_positions > 0
                     ? lang_sum.item() / static_cast<double>(out.lang_positions)
                     : 0.0;

  Tensor total;
  if (norm == LossNorm::Mean) {
    if (out.action_positions > 0)
      total = scale(action_sum, 1.0 / static_cast<double>(out.action_positions));
    if (out.lang_positions > 0 && lambda > 0.0) {
      Tensor lang = scale(lang_sum, lambda / static_cast<double>(out.lang_positions));
      total = total.defined() ? add(total, lang) : lang;
    }
  } else {
    const size_t denom = std::max(in.action_logits.size(), in.decoder_logits.size());
    const double inv_b = 1.0 / static_cast<double>(denom);
    if (out.action_positions > 0) total = scale(action_sum, inv_b);
    if (out.lang_positions > 0 && lambda > 0.0) {
      Tensor lang = scale(lang_sum, lambda * inv_b);
      total = total.defined() ? add(total, lang) : lang;
    }
  }
  check(total.defined(), "empty-reduction error: loss has no contributing terms");
  out.total_tensor = total;
  // reported total recomposes from the per-position means in double precision,
  // independent of the tensor dtype driving the backward pass
  if (norm == LossNorm::Mean)
    out.total = out.action_nll + lambda * out.lang_nll;
  else
    out.total = out.total_tensor.item();
  return out;
}

LossBreakdown joint_loss(const Tensor& action_logits, const std::vector<int32_t>& action_targets,
                         const Tensor* decoder_logits,
                         const std::vector<int32_t>* instruction_targets, double lambda,
                         LossNorm norm) {
  BatchLossInputs in;
  in.action_logits.push_back(action_logits);
  in.action_targets.push_back(action_targets);
  if (decoder_logits && instruction_targets) {
    in.decoder_logits.push_back(*decoder_logits);
    in.decoder_targets.push_back(*instruction_targets);
  }
  return batch_joint_loss(in, lambda, norm);
}

}  // namespace ic::train
