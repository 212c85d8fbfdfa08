#include <doctest.h>

#include <cmath>

#include "ic/error.hpp"
#include "ic/train/hierarchy.hpp"
#include "ic/train/probe.hpp"
#include "support/tinymodel.hpp"

using namespace ic;
using namespace ic::num;
using namespace ic::model;
using namespace ic::train;
using ic::data::Dataset;
using ic::data::Vocabulary;

namespace {

world::Env default_env() {
  return world::Env{world::RecipeGraph::load_default(), world::kDefaultStepBudget};
}

Dataset oracle_dataset(int count, uint64_t seed, int difficulty_lo = 1, int difficulty_hi = 3) {
  world::Env env = default_env();
  Dataset out;
  for (int i = 0; i < count; ++i) {
    const int32_t d = difficulty_lo + i % (difficulty_hi - difficulty_lo + 1);
    auto [w, t] = world::generate_task(env.recipes, seed + static_cast<uint64_t>(i), d, 7);
    out.push_back(world::oracle_rollout(env, w, t, world::kDefaultStepBudget));
  }
  return out;
}

ModelConfig small_model() {
  ModelConfig mc;
  mc.encoder_blocks = 2;
  mc.decoder_blocks = 1;
  mc.embed_dim = 32;
  mc.mlp_dim = 64;
  mc.heads = 2;
  mc.dropout = 0.0;
  return mc;
}

TrainConfig small_train(Objective obj, int64_t steps, uint64_t seed) {
  TrainConfig tc;
  tc.objective = obj;
  tc.lambda_lang = 0.5;
  tc.steps = steps;
  tc.batch_size = 4;
  tc.adam.learning_rate = 3e-4;
  tc.seed = seed;
  return tc;
}

bool params_identical(const ModelParams& a, const ModelParams& b) {
  if (a.entries().size() != b.entries().size()) return false;
  for (size_t i = 0; i < a.entries().size(); ++i) {
    if (a.entries()[i].name != b.entries()[i].name) return false;
    if (!same_values(a.entries()[i].tensor, b.entries()[i].tensor)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("joint loss: analytic uniform case and lambda scaling") {
  // 1 step, 2 actions, uniform logits; one 2-token instruction over vocab 4
  Tensor action_logits = zeros({1, 2}, DType::f64);
  Tensor decoder_logits = zeros({2, 4}, DType::f64);
  std::vector<int32_t> action_targets{0};
  std::vector<int32_t> instr_targets{1, 2};
  LossBreakdown lb =
      joint_loss(action_logits, action_targets, &decoder_logits, &instr_targets, 0.5);
  CHECK(lb.action_nll == doctest::Approx(std::log(2.0)));
  CHECK(lb.lang_nll == doctest::Approx(std::log(4.0)));
  CHECK(lb.total == doctest::Approx(std::log(2.0) + 0.5 * std::log(4.0)));
  CHECK(lb.action_positions == 1);
  CHECK(lb.lang_positions == 2);

  LossBreakdown bc = joint_loss(action_logits, action_targets, nullptr, nullptr, 0.0);
  CHECK(bc.total == doctest::Approx(bc.action_nll));

  // lambda = 0 with a decoder attached still reduces to the action term
  LossBreakdown zero =
      joint_loss(action_logits, action_targets, &decoder_logits, &instr_targets, 0.0);
  CHECK(zero.total == doctest::Approx(zero.action_nll));

  CHECK_THROWS_WITH_AS(
      joint_loss(action_logits, action_targets, nullptr, nullptr, -0.1),
      doctest::Contains("configuration error"), Error);
}

TEST_CASE("presets carry the published hyperparameters") {
  TrainConfig tc;
  ModelConfig mc;
  apply_preset("babyai-like", tc, mc);
  CHECK(tc.lambda_lang == doctest::Approx(0.7));
  CHECK(mc.dropout == doctest::Approx(0.0));
  CHECK(tc.adam.weight_decay == doctest::Approx(0.0));
  CHECK_FALSE(tc.adam.grad_clip_norm.has_value());
  CHECK(tc.batch_size == 32);
  CHECK(tc.adam.learning_rate == doctest::Approx(1e-4));
  CHECK(tc.adam.epsilon == doctest::Approx(1e-8));

  apply_preset("crafting-like", tc, mc);
  CHECK(tc.lambda_lang == doctest::Approx(0.25));
  CHECK(mc.dropout == doctest::Approx(0.1));
  CHECK(tc.adam.weight_decay == doctest::Approx(0.05));
  CHECK(tc.adam.grad_clip_norm.value() == doctest::Approx(1.0));
  CHECK(tc.batch_size == 64);

  CHECK_THROWS_WITH_AS(apply_preset("no-such-preset", tc, mc),
                       doctest::Contains("configuration error"), Error);
}

TEST_CASE("forward objective: target construction and uniform analytic case") {
  // uniform logits over 5 "action word" classes, 3 targets -> ln 5 per token
  Tensor dec = zeros({3, 5}, DType::f64);
  std::vector<int32_t> targets{1, 2, 4};
  Tensor act = zeros({1, 2}, DType::f64);
  LossBreakdown lb = joint_loss(act, {0}, &dec, &targets, 1.0);
  CHECK(lb.lang_nll == doctest::Approx(std::log(5.0)));

  // construction rule: actions [a,b,c], one segment from t=1 -> [a,b,c,EOS]
  world::Env env = default_env();
  Dataset data = oracle_dataset(1, 400, 1, 1);
  data[0].actions = {0, 1, 4};
  data[0].observations.resize(3, data[0].observations.front());
  data[0].segments = {{"mine the tree", 1, 4}};
  TrainConfig tc = small_train(Objective::Forward, 1, 0);
  Vocabulary vocab = build_training_vocab(tc, data);
  world::ObsEncoder enc(env.recipes, 7, false, 5);
  auto batches = ic::data::make_batches(data, 1, 1, 0, enc, vocab);
  LangBlock lb2 = lang_block_for_objective(Objective::Forward, batches[0], 0, vocab);
  REQUIRE(lb2.targets.size() == 4);
  CHECK(vocab.token(lb2.targets[0]) == "up");
  CHECK(vocab.token(lb2.targets[1]) == "down");
  CHECK(vocab.token(lb2.targets[2]) == "interact");
  CHECK(lb2.targets[3] == Vocabulary::kEos);
  CHECK(lb2.tokens.ids[0] == Vocabulary::kBos);
}

TEST_CASE("goal prediction block reconstructs the goal with an unmasked context") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(1, 410, 2, 2);
  TrainConfig tc = small_train(Objective::GoalPred, 1, 0);
  Vocabulary vocab = build_training_vocab(tc, data);
  world::ObsEncoder enc(env.recipes, 7, false, 5);
  auto batches = ic::data::make_batches(data, 1, 1, 0, enc, vocab);
  LangBlock lb = lang_block_for_objective(Objective::GoalPred, batches[0], 0, vocab);
  CHECK(lb.unmasked);
  REQUIRE(lb.intervals.size() == 1);
  CHECK(lb.intervals[0].begin == 1);
  CHECK(lb.intervals[0].end == data[0].length() + 1);
  const auto goal_ids = ic::data::tokenize(data[0].goal_text, vocab);
  REQUIRE(lb.targets.size() == goal_ids.size() + 1);
  for (size_t i = 0; i < goal_ids.size(); ++i) CHECK(lb.targets[i] == goal_ids[i]);
  CHECK(lb.targets.back() == Vocabulary::kEos);
}

TEST_CASE("bc and lang with lambda zero produce identical parameter trajectories") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(6, 420);
  TrainConfig bc = small_train(Objective::Bc, 12, 7);
  TrainConfig lang0 = small_train(Objective::Lang, 12, 7);
  lang0.lambda_lang = 0.0;
  TrainResult r1 = train_model(bc, data, small_model(), env);
  TrainResult r2 = train_model(lang0, data, small_model(), env);
  CHECK(params_identical(r1.params, r2.params));
  CHECK(r1.history.size() == 12);
  for (size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].total == r2.history[i].total);
    CHECK(r2.history[i].lang_nll == 0.0);
  }
}

TEST_CASE("seed determinism: identical configs give bit-identical parameters") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(5, 430);
  ModelConfig mc = small_model();
  mc.dropout = 0.1;  // exercise the dropout stream too
  TrainConfig tc = small_train(Objective::Lang, 10, 21);
  TrainResult r1 = train_model(tc, data, mc, env);
  TrainResult r2 = train_model(tc, data, mc, env);
  CHECK(params_identical(r1.params, r2.params));

  TrainConfig other = tc;
  other.seed = 22;
  TrainResult r3 = train_model(other, data, mc, env);
  CHECK_FALSE(params_identical(r1.params, r3.params));
}

TEST_CASE("loss decomposition holds on every logged step") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(6, 440);
  TrainConfig tc = small_train(Objective::Lang, 8, 3);
  tc.lambda_lang = 0.7;
  TrainResult r = train_model(tc, data, small_model(), env);
  REQUIRE(r.history.size() == 8);
  for (const auto& row : r.history)
    CHECK(std::fabs(row.total - (row.action_nll + 0.7 * row.lang_nll)) < 1e-9);
}

TEST_CASE("a fully unannotated batch contributes no language term and matches bc") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(6, 450);
  Dataset stripped = ic::data::drop_annotations(data, 0.0, 1);
  TrainConfig lang = small_train(Objective::Lang, 10, 9);
  lang.lambda_lang = 0.7;
  TrainConfig bc = small_train(Objective::Bc, 10, 9);
  TrainResult r_lang = train_model(lang, stripped, small_model(), env);
  TrainResult r_bc = train_model(bc, stripped, small_model(), env);
  CHECK(params_identical(r_lang.params, r_bc.params));
  for (const auto& row : r_lang.history) CHECK(row.lang_nll == 0.0);
}

TEST_CASE("language gradients flow into the encoder when lambda > 0") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(2, 460);
  TrainConfig tc = small_train(Objective::Lang, 1, 5);
  Vocabulary vocab = build_training_vocab(tc, data);
  ModelConfig mc = finalize_model_config(small_model(), tc, data, env, vocab);
  Model m = Model::init(mc, 3);
  m.params().set_requires_grad(true);
  world::ObsEncoder enc(env.recipes, 7, false, 5);
  auto batches = ic::data::make_batches(data, 2, 1, 0, enc, vocab);

  GradientTape tape;
  {
    TapeScope scope(tape);
    ForwardCtx ctx;  // eval-mode forward still records on the active tape
    BatchLossInputs inputs;
    for (int32_t b = 0; b < batches[0].size; ++b) {
      LangBlock lb = lang_block_for_objective(Objective::Lang, batches[0], b, vocab);
      if (lb.empty()) continue;
      EncoderOutput eo = m.encode_sequence(batches[0].obs_steps(b), batches[0].goal_ids(b), ctx);
      DecoderKeys keys = m.decoder_keys(eo);
      AttentionMask mask = cross_mask_for(lb, batches[0].lengths[static_cast<size_t>(b)],
                                          MaskMode::Execution);
      // language term only: the action head is left out entirely
      inputs.decoder_logits.push_back(m.decode_instruction_logits(lb.tokens, keys.keys, mask, ctx));
      inputs.decoder_targets.push_back(lb.targets);
    }
    LossBreakdown loss = batch_joint_loss(inputs, 1.0, LossNorm::Mean);
    backward(loss.total_tensor, tape);
  }
  double enc_grad_norm = 0.0;
  for (auto& e : m.params().entries()) {
    if (e.name.rfind("enc.", 0) != 0) continue;
    Tensor g = grad_of(e.tensor);
    for (int64_t i = 0; i < g.numel(); ++i) enc_grad_norm += g.at_flat(i) * g.at_flat(i);
  }
  CHECK(std::sqrt(enc_grad_norm) > 0.0);
}

TEST_CASE("single-trajectory overfit reaches tiny loss and reproduces its supervision") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(1, 470, 2, 2);
  TrainConfig tc = small_train(Objective::Lang, 1200, 11);
  tc.batch_size = 1;
  tc.lambda_lang = 0.5;
  tc.adam.learning_rate = 1e-3;
  TrainResult r = train_model(tc, data, small_model(), env);
  CHECK(r.history.back().total < 0.01);

  Model m(r.model_config, r.params.clone());
  world::ObsEncoder enc(env.recipes, 7, false, 5);
  auto batches = ic::data::make_batches(data, 1, 1, 0, enc, r.vocab);
  ForwardCtx eval;
  EncoderOutput eo = m.encode_sequence(batches[0].obs_steps(0), batches[0].goal_ids(0), eval);
  Tensor logits = m.policy_logits(eo);
  const auto actions = batches[0].action_targets(0);
  for (int64_t t = 0; t < static_cast<int64_t>(actions.size()); ++t) {
    int32_t best = 0;
    for (int64_t a = 1; a < m.config().action_count; ++a)
      if (logits.at_flat(t * m.config().action_count + a) >
          logits.at_flat(t * m.config().action_count + best))
        best = static_cast<int32_t>(a);
    CHECK(best == actions[static_cast<size_t>(t)]);
  }

  // greedy decode reproduces each instruction's token sequence
  DecoderKeys keys = m.decoder_keys(eo);
  const auto intervals = batches[0].sample_intervals(0);
  AttentionMask mask = build_instruction_cross_mask(intervals, batches[0].lengths[0],
                                                    MaskMode::Execution);
  for (size_t i = 0; i < data[0].segments.size(); ++i) {
    AttentionMask row;
    row.rows = 1;
    row.cols = mask.cols;
    row.allow.assign(static_cast<size_t>(mask.cols), 0);
    for (int64_t c = 0; c < mask.cols; ++c) row.set(0, c, mask.at(static_cast<int64_t>(i), c));
    auto decoded = m.greedy_decode(keys.keys, row, Vocabulary::kBos, Vocabulary::kEos, 16);
    CHECK(ic::data::detokenize(decoded, r.vocab) ==
          ic::data::normalize_text(data[0].segments[i].text));
  }
}

TEST_CASE("hierarchy: rejects unannotated data and demands the instruction block") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(4, 480);
  Dataset stripped = ic::data::drop_annotations(data, 0.5, 2);
  TrainConfig tc = small_train(Objective::Hierarchy, 4, 1);
  CHECK_THROWS_WITH_AS(hierarchy_train(tc, stripped, small_model(), env),
                       doctest::Contains("configuration error"), Error);

  HierarchyResult hr = hierarchy_train(tc, data, small_model(), env);
  CHECK(hr.low.model_config.instruction_context);
  // the executor refuses to run without its instruction block
  Model low(hr.low.model_config, hr.low.params.clone());
  world::ObsEncoder enc(env.recipes, 7, false, 5);
  auto batches = ic::data::make_batches(data, 1, 1, 0, enc, hr.low.vocab);
  ForwardCtx eval;
  CHECK_THROWS_WITH_AS(
      low.encode_sequence(batches[0].obs_steps(0), batches[0].goal_ids(0), eval, nullptr),
      doctest::Contains("shape error"), Error);
}

TEST_CASE("hierarchy high level overfits to the concatenated instruction stream") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(1, 490, 2, 2);
  TrainConfig tc = small_train(Objective::Hierarchy, 900, 13);
  tc.batch_size = 1;
  tc.adam.learning_rate = 1e-3;
  HierarchyResult hr = hierarchy_train(tc, data, small_model(), env);

  Model high(hr.high.model_config, hr.high.params.clone());
  world::ObsEncoder enc(env.recipes, 7, false, 5);
  auto batches = ic::data::make_batches(data, 1, 1, 0, enc, hr.high.vocab);
  ForwardCtx eval;
  EncoderOutput eo = high.encode_sequence(batches[0].obs_steps(0), batches[0].goal_ids(0), eval);
  DecoderKeys keys = high.decoder_keys(eo);
  AttentionMask allow = AttentionMask::none(1, keys.keys.extent(0));
  auto decoded = high.greedy_decode(keys.keys, allow, Vocabulary::kBos, Vocabulary::kEos,
                                    high.config().max_instr_len - 1);
  // expected stream: instruction words joined by the separator word
  std::vector<int32_t> want;
  for (const auto& seg : data[0].segments) {
    if (!want.empty()) want.push_back(hr.high.vocab.id(kInstructionSeparator));
    for (int32_t id : ic::data::tokenize(seg.text, hr.high.vocab)) want.push_back(id);
  }
  CHECK(decoded == want);
}

TEST_CASE("probe: frozen encoder is bit-identical and accuracy is seeded-deterministic") {
  world::Env env = default_env();
  Dataset data = oracle_dataset(10, 500, 2, 3);
  TrainConfig tc = small_train(Objective::Lang, 1, 1);
  Vocabulary vocab = build_training_vocab(tc, data);
  ModelConfig mc = finalize_model_config(small_model(), tc, data, env, vocab);
  ModelParams frozen = init_params(mc, 77);

  ProbeConfig pc;
  pc.steps = 30;
  pc.seed = 5;
  ProbeResult with_obs = probe_train(pc, data, true, mc, vocab, env, frozen.clone());
  for (const auto& e : frozen.entries()) {
    if (e.name.rfind("dec.", 0) == 0) continue;
    CHECK(same_values(e.tensor, with_obs.params.at(e.name)));
  }
  ProbeResult goal_only = probe_train(pc, data, false, mc, vocab, env, frozen.clone());
  CHECK(goal_only.val_tokens == with_obs.val_tokens);

  ProbeResult again = probe_train(pc, data, true, mc, vocab, env, frozen.clone());
  CHECK(again.token_accuracy == with_obs.token_accuracy);
}

}  // TEST_SUITE
