#include "ic/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ic/error.hpp"
#include "ic/num/checkpoint.hpp"

namespace ic::train {

using namespace ic::num;
using namespace ic::model;
using ic::data::Batch;
using ic::data::Dataset;
using ic::data::Vocabulary;

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::Lang: return "lang";
    case Objective::Bc: return "bc";
    case Objective::Forward: return "forward";
    case Objective::GoalPred: return "goal_pred";
    case Objective::Hierarchy: return "hierarchy";
    case Objective::HierarchyHigh: return "hierarchy_high";
    case Objective::HierarchyLow: return "hierarchy_low";
    case Objective::ProbeGoalOnly: return "probe_goal_only";
    default: return "probe_goal_obs";
  }
}

Objective parse_objective(const std::string& s) {
  for (Objective o : {Objective::Lang, Objective::Bc, Objective::Forward, Objective::GoalPred,
                      Objective::Hierarchy, Objective::HierarchyHigh, Objective::HierarchyLow,
                      Objective::ProbeGoalOnly, Objective::ProbeGoalObs})
    if (s == objective_name(o)) return o;
  fail("configuration error: unknown objective '", s, "'");
}

void apply_preset(const std::string& name, TrainConfig& tc, ModelConfig& mc) {
  tc.preset = name;
  tc.adam.learning_rate = 1e-4;
  tc.adam.epsilon = 1e-8;
  if (name == "babyai-like") {
    tc.lambda_lang = 0.7;
    tc.batch_size = 32;
    tc.adam.weight_decay = 0.0;
    tc.adam.grad_clip_norm.reset();
    mc.dropout = 0.0;
  } else if (name == "crafting-like") {
    tc.lambda_lang = 0.25;
    tc.batch_size = 64;
    tc.adam.weight_decay = 0.05;
    tc.adam.grad_clip_norm = 1.0;
    mc.dropout = 0.1;
  } else {
    fail("configuration error: unknown preset '", name,
         "' (babyai-like|crafting-like)");
  }
}

Vocabulary build_training_vocab(const TrainConfig& tc, const Dataset& dataset) {
  Vocabulary v = Vocabulary::build(dataset);
  if (tc.objective == Objective::Forward) {
    std::vector<std::string> action_words;
    for (int32_t a = 0; a < world::kActionCount; ++a)
      action_words.push_back(world::action_name(world::action_from_int(a)));
    v = v.with_extra_words(action_words);
  }
  if (tc.objective == Objective::Hierarchy || tc.objective == Objective::HierarchyHigh ||
      tc.objective == Objective::HierarchyLow)
    v = v.with_extra_words({kInstructionSeparator});
  return v;
}

ModelConfig finalize_model_config(ModelConfig mc, const TrainConfig& tc, const Dataset& dataset,
                                  const world::Env& env, const Vocabulary& vocab) {
  check(!dataset.empty(), "configuration error: empty dataset");
  mc.observability = tc.observability;
  const int32_t grid = dataset.front().grid_size;
  world::ObsEncoder enc(env.recipes, grid, tc.observability == Observability::Full, tc.window);
  mc.obs_vocab_size = enc.vocab_size();
  mc.obs_tokens = enc.token_count();
  mc.text_vocab_size = vocab.size();
  mc.action_count = world::kActionCount;
  mc.mask_mode = tc.mask_mode;

  int64_t max_t = 0, max_goal = 0, max_instr = 0, max_concat = 0;
  for (const auto& traj : dataset) {
    max_t = std::max(max_t, traj.length());
    max_goal = std::max(max_goal,
                        static_cast<int64_t>(ic::data::tokenize(traj.goal_text, vocab).size()));
    int64_t concat = 0;
    for (const auto& seg : traj.segments) {
      const auto words =
          static_cast<int64_t>(ic::data::tokenize(seg.text, vocab).size());
      max_instr = std::max(max_instr, words + 2);
      concat += words + 1;
    }
    max_concat = std::max(max_concat, concat + 1);
  }
  mc.max_seq_len = std::max<int64_t>(env.step_budget, max_t) + 1;
  mc.max_goal_len = max_goal + 1;
  if (tc.objective == Objective::Forward)
    mc.max_instr_len = std::max<int64_t>(env.step_budget, max_t) + 2;
  else if (tc.objective == Objective::HierarchyHigh)
    mc.max_instr_len = max_concat + 2;
  else
    mc.max_instr_len = std::max<int64_t>(mc.max_instr_len, max_instr);
  if (tc.objective == Objective::HierarchyLow) {
    mc.instruction_context = true;
    mc.max_ctx_len = max_concat + 2;
  }
  return mc;
}

std::vector<int32_t> instruction_stream(const Batch& batch, int32_t b,
                                        const Vocabulary& vocab) {
  std::vector<int32_t> out;
  const int32_t sep = vocab.id(kInstructionSeparator);
  for (int32_t i = 0; i < batch.instr_count[static_cast<size_t>(b)]; ++i) {
    const int32_t len = batch.instr_len[static_cast<size_t>(b * batch.instr_rows_max + i)];
    const auto* row =
        batch.instr_tokens.data() + (b * batch.instr_rows_max + i) * batch.instr_len_max;
    if (!out.empty()) out.push_back(sep);
    for (int32_t j = 1; j + 1 < len; ++j) out.push_back(row[j]);  // strip BOS and EOS
  }
  return out;
}

namespace {

LangBlock single_stream_block(const std::vector<int32_t>& target_ids, int64_t T) {
  LangBlock lb;
  lb.tokens.bos_id = Vocabulary::kBos;
  lb.tokens.n_instr = 1;
  lb.tokens.ids.push_back(Vocabulary::kBos);
  lb.tokens.instr_of.push_back(0);
  lb.tokens.pos_of.push_back(0);
  for (size_t j = 0; j + 1 < target_ids.size(); ++j) {
    lb.tokens.ids.push_back(target_ids[j]);
    lb.tokens.instr_of.push_back(0);
    lb.tokens.pos_of.push_back(static_cast<int32_t>(j + 1));
  }
  lb.targets = target_ids;
  lb.intervals = {{1, T + 1}};
  lb.unmasked = true;
  return lb;
}

}  // namespace

LangBlock lang_block_for_objective(Objective objective, const Batch& batch, int32_t b,
                                   const Vocabulary& vocab) {
  const int64_t T = batch.lengths[static_cast<size_t>(b)];
  switch (objective) {
    case Objective::Lang:
    case Objective::ProbeGoalOnly:
    case Objective::ProbeGoalObs: {
      LangBlock lb;
      if (!batch.annotated[static_cast<size_t>(b)]) return lb;
      auto block = batch.decoder_block(b);
      lb.tokens = std::move(block.tokens);
      lb.targets = std::move(block.targets);
      lb.intervals = batch.sample_intervals(b);
      return lb;
    }
    case Objective::Forward: {
      // remaining demonstrated actions from each segment onset, as words
      LangBlock lb;
      lb.tokens.bos_id = Vocabulary::kBos;
      std::vector<Interval> intervals = batch.sample_intervals(b);
      if (intervals.empty()) intervals = {{1, T + 1}};
      const auto actions = batch.action_targets(b);
      lb.intervals = intervals;
      lb.tokens.n_instr = static_cast<int64_t>(intervals.size());
      for (size_t i = 0; i < intervals.size(); ++i) {
        std::vector<int32_t> ids;
        for (int64_t t = intervals[i].begin - 1; t < T; ++t)
          ids.push_back(vocab.id(world::action_name(
              world::action_from_int(actions[static_cast<size_t>(t)]))));
        ids.push_back(Vocabulary::kEos);
        lb.tokens.ids.push_back(Vocabulary::kBos);
        lb.tokens.instr_of.push_back(static_cast<int32_t>(i));
        lb.tokens.pos_of.push_back(0);
        for (size_t j = 0; j + 1 < ids.size(); ++j) {
          lb.tokens.ids.push_back(ids[j]);
          lb.tokens.instr_of.push_back(static_cast<int32_t>(i));
          lb.tokens.pos_of.push_back(static_cast<int32_t>(j + 1));
        }
        lb.targets.insert(lb.targets.end(), ids.begin(), ids.end());
      }
      return lb;
    }
    case Objective::GoalPred: {
      std::vector<int32_t> ids = batch.goal_ids(b);
      ids.push_back(Vocabulary::kEos);
      return single_stream_block(ids, T);
    }
    case Objective::HierarchyHigh: {
      LangBlock lb;
      if (!batch.annotated[static_cast<size_t>(b)]) return lb;
      std::vector<int32_t> ids = instruction_stream(batch, b, vocab);
      ids.push_back(Vocabulary::kEos);
      lb = single_stream_block(ids, T);
      return lb;
    }
    default:
      return LangBlock{};
  }
}

AttentionMask cross_mask_for(const LangBlock& block, int64_t T, MaskMode mode) {
  return build_instruction_cross_mask(block.intervals, T,
                                      block.unmasked ? MaskMode::Unmasked : mode);
}

namespace {

struct SampleWork {
  Tensor action_logits;
  std::vector<int32_t> action_targets;
  std::vector<Tensor> decoder_logits;
  std::vector<std::vector<int32_t>> decoder_targets;
};

// forward pass for one trajectory under the configured objective
SampleWork run_sample(const Model& m, const TrainConfig& tc, const Batch& batch, int32_t b,
                      const Vocabulary& vocab, const ForwardCtx& ctx) {
  SampleWork work;
  const int64_t T = batch.lengths[static_cast<size_t>(b)];
  const auto goal = batch.goal_ids(b);
  const bool lang_on = tc.uses_decoder();
  LangBlock lb;
  if (lang_on) lb = lang_block_for_objective(tc.objective, batch, b, vocab);
  const bool hierarchy_high = tc.objective == Objective::HierarchyHigh;

  if (tc.observability == Observability::Partial) {
    const std::vector<int32_t>* context = nullptr;
    std::vector<int32_t> ctx_ids;
    if (m.config().instruction_context) {
      ctx_ids = instruction_stream(batch, b, vocab);
      context = &ctx_ids;
    }
    EncoderOutput enc = m.encode_sequence(batch.obs_steps(b), goal, ctx, context);
    if (!hierarchy_high) {
      work.action_logits = m.policy_logits(enc);
      work.action_targets = batch.action_targets(b);
    }
    if (lang_on && !lb.empty()) {
      DecoderKeys keys = m.decoder_keys(enc);
      AttentionMask mask =
          widen_mask(cross_mask_for(lb, T, tc.mask_mode), keys.prefix_cols);
      work.decoder_logits.push_back(m.decode_instruction_logits(lb.tokens, keys.keys, mask, ctx));
      work.decoder_targets.push_back(lb.targets);
    }
    return work;
  }

  // Markovian: one encoder pass per timestep; the active instruction is
  // supervised at every step inside its interval
  const auto obs_steps = batch.obs_steps(b);
  const auto actions = batch.action_targets(b);
  std::vector<Tensor> step_logits;
  for (int64_t t = 0; t < T; ++t) {
    EncoderOutput enc = m.encode_state(obs_steps[static_cast<size_t>(t)], goal, ctx);
    if (!hierarchy_high) {
      work.action_logits = work.action_logits.defined()
                               ? concat_rows(work.action_logits, m.policy_logits(enc))
                               : m.policy_logits(enc);
    }
    if (lang_on && !lb.empty()) {
      // locate the instruction active at step t+1 (1-based)
      int64_t active = -1;
      for (size_t i = 0; i < lb.intervals.size(); ++i)
        if (lb.intervals[i].begin <= t + 1 && t + 1 < lb.intervals[i].end)
          active = static_cast<int64_t>(i);
      if (active < 0) continue;
      InstructionTokens solo;
      solo.bos_id = lb.tokens.bos_id;
      solo.n_instr = 1;
      std::vector<int32_t> solo_targets;
      for (size_t j = 0; j < lb.tokens.ids.size(); ++j) {
        if (lb.tokens.instr_of[j] != active) continue;
        solo.ids.push_back(lb.tokens.ids[j]);
        solo.instr_of.push_back(0);
        solo.pos_of.push_back(lb.tokens.pos_of[j]);
        solo_targets.push_back(lb.targets[j]);
      }
      DecoderKeys keys = m.decoder_keys(enc);
      AttentionMask allow = AttentionMask::none(1, keys.keys.extent(0));
      work.decoder_logits.push_back(m.decode_instruction_logits(solo, keys.keys, allow, ctx));
      work.decoder_targets.push_back(std::move(solo_targets));
    }
  }
  if (!hierarchy_high) work.action_targets = actions;
  return work;
}

void append_metrics_csv(const std::string& path, const MetricsRow& row, bool header) {
  std::ofstream os(path, header ? std::ios::trunc : std::ios::app);
  check(static_cast<bool>(os), "I/O error: cannot write metrics to ", path);
  if (header) os << "step,total,action_nll,lang_nll,grad_norm\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g\n",
                static_cast<long long>(row.step), row.total, row.action_nll, row.lang_nll,
                row.grad_norm);
  os << buf;
}

}  // namespace

TrainResult train_model(const TrainConfig& tc_in, const Dataset& dataset, ModelConfig mc,
                  const world::Env& env, const std::string& run_dir) {
  TrainConfig tc = tc_in;
  check(tc.lambda_lang >= 0.0, "configuration error: lambda must be nonnegative, got ",
        tc.lambda_lang);
  check(!dataset.empty(), "configuration error: dataset is empty");
  check(tc.objective != Objective::Hierarchy,
        "configuration error: use hierarchy_train for the hierarchy objective");
  if (tc.objective == Objective::Bc) {
    tc.objective = Objective::Lang;  // identical code path with lambda forced to zero
    tc.lambda_lang = 0.0;
  }
  if (tc.objective == Objective::HierarchyLow) tc.lambda_lang = 0.0;
  if (tc.objective == Objective::HierarchyHigh)
    check(tc.lambda_lang > 0.0, "configuration error: hierarchy high level needs lambda > 0");

  Vocabulary vocab = build_training_vocab(tc, dataset);
  mc = finalize_model_config(mc, tc, dataset, env, vocab);
  const int32_t grid = dataset.front().grid_size;
  world::ObsEncoder enc(env.recipes, grid, tc.observability == Observability::Full, tc.window);

  Model m = Model::init(mc, derive_seed(tc.seed, "model-init"));
  m.params().set_requires_grad(true);
  AdamState opt = make_adam_state(m.params().entries(), tc.adam);
  RandomStream dropout_rng(derive_seed(tc.seed, "dropout"));

  const bool files = !run_dir.empty();
  std::string ckpt_path, metrics_path;
  if (files) {
    std::filesystem::create_directories(run_dir);
    ckpt_path = run_dir + "/checkpoint.bin";
    metrics_path = run_dir + "/metrics.csv";
    save_checkpoint(ckpt_path, m.params().entries());
    std::ofstream(run_dir + "/model_config.txt") << mc.to_text();
    vocab.save(run_dir + "/vocab.txt");
  }

  TrainResult result;
  result.vocab = vocab;
  result.model_config = mc;

  std::vector<Batch> batches;
  int64_t epoch = 0;
  size_t batch_idx = 0;
  auto next_batch = [&]() -> const Batch& {
    if (batch_idx >= batches.size()) {
      batches = ic::data::make_batches(dataset, tc.batch_size, derive_seed(tc.seed, "batches"),
                                       epoch, enc, vocab);
      batch_idx = 0;
      ++epoch;
    }
    return batches[batch_idx++];
  };

  for (int64_t step = 1; step <= tc.steps; ++step) {
    const Batch& batch = next_batch();
    GradientTape tape;
    LossBreakdown loss;
    {
      TapeScope scope(tape);
      ForwardCtx ctx{true, &dropout_rng};
      BatchLossInputs inputs;
      for (int32_t b = 0; b < batch.size; ++b) {
        SampleWork w = run_sample(m, tc, batch, b, vocab, ctx);
        if (w.action_logits.defined()) {
          inputs.action_logits.push_back(w.action_logits);
          inputs.action_targets.push_back(w.action_targets);
        }
        for (size_t i = 0; i < w.decoder_logits.size(); ++i) {
          inputs.decoder_logits.push_back(w.decoder_logits[i]);
          inputs.decoder_targets.push_back(w.decoder_targets[i]);
        }
      }
      loss = batch_joint_loss(inputs, tc.lambda_lang, tc.loss_norm);
      if (!std::isfinite(loss.total))
        fail("non-finite error: loss became non-finite at step ", step,
             files ? "; last good checkpoint retained at " + ckpt_path : "");
      backward(loss.total_tensor, tape);
    }
    std::vector<Tensor> grads;
    grads.reserve(m.params().entries().size());
    for (auto& e : m.params().entries()) grads.push_back(grad_of(e.tensor));
    const double grad_norm = adam_step(m.params().entries(), grads, opt);
    m.params().clear_grads();

    MetricsRow row{step, loss.total, loss.action_nll, loss.lang_nll, grad_norm};
    result.history.push_back(row);
    if (files) append_metrics_csv(metrics_path, row, step == 1);
    if (files && tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0)
      save_checkpoint(ckpt_path, m.params().entries());
  }

  m.params().set_requires_grad(false);
  result.params = m.params().clone();
  if (files) {
    save_checkpoint(ckpt_path, result.params.entries());
  }
  return result;
}

void save_bundle(const std::string& run_dir, const TrainResult& result) {
  std::filesystem::create_directories(run_dir);
  save_checkpoint(run_dir + "/checkpoint.bin", result.params.entries());
  std::ofstream(run_dir + "/model_config.txt") << result.model_config.to_text();
  result.vocab.save(run_dir + "/vocab.txt");
}

ModelBundle load_bundle(const std::string& run_dir) {
  ModelBundle b;
  {
    std::ifstream is(run_dir + "/model_config.txt");
    check(static_cast<bool>(is), "I/O error: missing model_config.txt under ", run_dir);
    std::stringstream ss;
    ss << is.rdbuf();
    b.config = ModelConfig::from_text(ss.str());
  }
  b.params = ModelParams(load_checkpoint(run_dir + "/checkpoint.bin"));
  b.vocab = Vocabulary::load(run_dir + "/vocab.txt");
  return b;
}

}  // namespace ic::train
