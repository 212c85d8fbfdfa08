#include "ic/train/probe.hpp"

#include <cmath>

#include "ic/error.hpp"

namespace ic::train {

using namespace ic::num;
using namespace ic::model;
using ic::data::Batch;
using ic::data::Dataset;
using ic::data::Vocabulary;

namespace {

struct Conditioning {
  Tensor keys;
  AttentionMask mask;
};

// Encoder runs off-tape in eval mode: a frozen feature extractor.
Conditioning condition_sample(const Model& m, const Batch& batch, int32_t b,
                              const LangBlock& lb, bool with_observations, MaskMode mode) {
  ForwardCtx eval;
  const int64_t T = batch.lengths[static_cast<size_t>(b)];
  Conditioning out;
  if (with_observations) {
    EncoderOutput enc = m.encode_sequence(batch.obs_steps(b), batch.goal_ids(b), eval);
    out.keys = slice_rows(enc.latents, enc.step_begin, enc.step_end);
    out.mask = cross_mask_for(lb, T, mode);
  } else {
    EncoderOutput enc = m.encode_sequence({}, batch.goal_ids(b), eval);
    out.keys = slice_rows(enc.latents, enc.goal_begin, enc.goal_end);
    out.mask = AttentionMask::none(lb.tokens.n_instr, out.keys.extent(0));
  }
  return out;
}

}  // namespace

ProbeResult probe_train(const ProbeConfig& pc, const Dataset& dataset, bool with_observations,
                        const ModelConfig& mc, const Vocabulary& vocab, const world::Env& env,
                        const std::optional<ModelParams>& encoder_params) {
  check(!dataset.empty(), "configuration error: empty dataset");
  check(mc.observability == Observability::Partial,
        "configuration error: the probe uses the sequence encoder");
  for (const auto& traj : dataset)
    check(traj.annotated(), "configuration error: the probe needs annotated trajectories");

  const size_t n_val = std::max<size_t>(
      1, static_cast<size_t>(std::llround(pc.val_fraction * static_cast<double>(dataset.size()))));
  check(n_val < dataset.size(), "configuration error: validation split swallows the dataset");
  const Dataset train_set(dataset.begin(), dataset.end() - static_cast<long>(n_val));
  const Dataset val_set(dataset.end() - static_cast<long>(n_val), dataset.end());

  ModelParams params = init_params(mc, derive_seed(pc.seed, "probe-init"));
  if (encoder_params) {
    for (auto& e : params.entries()) {
      if (e.name.rfind("dec.", 0) == 0) continue;  // decoder stays fresh
      const Tensor& src = encoder_params->at(e.name);
      check(src.shape() == e.tensor.shape(),
            "configuration error: encoder checkpoint shape mismatch for ", e.name);
      e.tensor = clone(src);
    }
    params = ModelParams(params.entries());
  }
  Model m(mc, std::move(params));

  std::vector<NamedTensor> dec_params;
  for (auto& e : m.params().entries())
    if (e.name.rfind("dec.", 0) == 0) {
      e.tensor.set_requires_grad(true);
      dec_params.push_back(e);  // shares storage with the model
    }
  AdamConfig opt_cfg;
  opt_cfg.learning_rate = pc.learning_rate;
  AdamState opt = make_adam_state(dec_params, opt_cfg);

  const int32_t grid = dataset.front().grid_size;
  world::ObsEncoder enc(env.recipes, grid, false, pc.window);

  std::vector<Batch> batches;
  int64_t epoch = 0;
  size_t batch_idx = 0;
  auto next_batch = [&]() -> const Batch& {
    if (batch_idx >= batches.size()) {
      batches = ic::data::make_batches(train_set, pc.batch_size,
                                       derive_seed(pc.seed, "probe-batches"), epoch, enc, vocab);
      batch_idx = 0;
      ++epoch;
    }
    return batches[batch_idx++];
  };

  for (int64_t step = 1; step <= pc.steps; ++step) {
    const Batch& batch = next_batch();
    GradientTape tape;
    BatchLossInputs inputs;
    {
      TapeScope scope(tape);
      ForwardCtx eval;  // no dropout: feature-extraction regime
      for (int32_t b = 0; b < batch.size; ++b) {
        LangBlock lb = lang_block_for_objective(Objective::Lang, batch, b, vocab);
        if (lb.empty()) continue;
        Conditioning cond = condition_sample(m, batch, b, lb, with_observations, pc.mask_mode);
        inputs.decoder_logits.push_back(
            m.decode_instruction_logits(lb.tokens, cond.keys, cond.mask, eval));
        inputs.decoder_targets.push_back(lb.targets);
      }
      LossBreakdown loss = batch_joint_loss(inputs, 1.0, LossNorm::Mean);
      check(std::isfinite(loss.total), "non-finite error: probe loss at step ", step);
      backward(loss.total_tensor, tape);
    }
    std::vector<Tensor> grads;
    for (auto& e : dec_params) grads.push_back(grad_of(e.tensor));
    adam_step(dec_params, grads, opt);
    for (auto& e : dec_params) e.tensor.clear_grad();
  }

  // teacher-forced next-token accuracy on the held-out slice
  int64_t correct = 0, total = 0;
  auto val_batches =
      ic::data::make_batches(val_set, pc.batch_size, derive_seed(pc.seed, "probe-val"), 0, enc,
                             vocab);
  ForwardCtx eval;
  for (const auto& batch : val_batches) {
    for (int32_t b = 0; b < batch.size; ++b) {
      LangBlock lb = lang_block_for_objective(Objective::Lang, batch, b, vocab);
      if (lb.empty()) continue;
      Conditioning cond = condition_sample(m, batch, b, lb, with_observations, pc.mask_mode);
      Tensor logits = m.decode_instruction_logits(lb.tokens, cond.keys, cond.mask, eval);
      const int64_t V = logits.extent(1);
      for (size_t j = 0; j < lb.targets.size(); ++j) {
        if (lb.targets[j] == Vocabulary::kPad) continue;
        int32_t best = 0;
        double best_v = logits.at_flat(static_cast<int64_t>(j) * V);
        for (int64_t v = 1; v < V; ++v) {
          const double x = logits.at_flat(static_cast<int64_t>(j) * V + v);
          if (x > best_v) {
            best_v = x;
            best = static_cast<int32_t>(v);
          }
        }
        correct += best == lb.targets[j] ? 1 : 0;
        total += 1;
      }
    }
  }

  ProbeResult out;
  out.val_tokens = total;
  out.token_accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  for (auto& e : m.params().entries()) e.tensor.set_requires_grad(false);
  out.params = m.params().clone();
  return out;
}

}  // namespace ic::train
