#include <doctest.h>

#include <cmath>
#include <vector>

#include "ic/error.hpp"
#include "support/gradcheck.hpp"
#include "support/tinymodel.hpp"

using namespace ic;
using namespace ic::num;
using namespace ic::model;
using ic::testsupport::make_tokens;
using ic::testsupport::random_goal;
using ic::testsupport::random_intervals;
using ic::testsupport::random_obs_steps;
using ic::testsupport::tiny_config;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::fabs(a.at_flat(i) - b.at_flat(i)));
  return m;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("causal mask definition") {
  AttentionMask m = build_causal_mask(3);
  CHECK(m.at(0, 0));
  CHECK_FALSE(m.at(0, 1));
  CHECK_FALSE(m.at(0, 2));
  CHECK(m.at(1, 0));
  CHECK(m.at(1, 1));
  CHECK_FALSE(m.at(1, 2));
  CHECK(m.at(2, 0));
  CHECK(m.at(2, 1));
  CHECK(m.at(2, 2));

  AttentionMask one = build_causal_mask(1);
  CHECK(one.rows == 1);
  CHECK(one.at(0, 0));

  CHECK_THROWS_WITH_AS(build_causal_mask(0), doctest::Contains("empty-sequence"), Error);
}

TEST_CASE("causal mask predicate holds exhaustively for random sizes") {
  RandomStream rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int64_t T = 1 + rng.uniform_int(64);
    AttentionMask m = build_causal_mask(T);
    for (int64_t q = 0; q < T; ++q)
      for (int64_t k = 0; k < T; ++k) CHECK(m.at(q, k) == (k <= q));
  }
}

TEST_CASE("instruction cross mask: execution and onset caps") {
  const std::vector<Interval> iv{{1, 3}, {3, 6}};
  AttentionMask ex = build_instruction_cross_mask(iv, 5, MaskMode::Execution);
  CHECK(ex.rows == 2);
  CHECK(ex.cols == 5);
  // instruction 1 attends z_1..z_2
  CHECK(ex.at(0, 0));
  CHECK(ex.at(0, 1));
  CHECK_FALSE(ex.at(0, 2));
  // instruction 2 attends z_1..z_5
  for (int64_t t = 0; t < 5; ++t) CHECK(ex.at(1, t));

  AttentionMask on = build_instruction_cross_mask(iv, 5, MaskMode::Onset);
  // clamped to z_1 for the first instruction
  CHECK(on.at(0, 0));
  CHECK_FALSE(on.at(0, 1));
  // instruction 2 attends z_1..z_2
  CHECK(on.at(1, 0));
  CHECK(on.at(1, 1));
  CHECK_FALSE(on.at(1, 2));

  AttentionMask single = build_instruction_cross_mask({{1, 8}}, 7, MaskMode::Execution);
  for (int64_t t = 0; t < 7; ++t) CHECK(single.at(0, t));

  AttentionMask um = build_instruction_cross_mask(iv, 5, MaskMode::Unmasked);
  for (int64_t t = 0; t < 5; ++t) CHECK(um.at(0, t));
}

TEST_CASE("instruction cross mask rejects bad intervals") {
  CHECK_THROWS_WITH_AS(build_instruction_cross_mask({{2, 4}}, 3, MaskMode::Execution),
                       doctest::Contains("interval error"), Error);
  CHECK_THROWS_WITH_AS(build_instruction_cross_mask({{1, 3}, {4, 6}}, 5, MaskMode::Execution),
                       doctest::Contains("interval error"), Error);
  CHECK_THROWS_WITH_AS(build_instruction_cross_mask({{1, 3}}, 5, MaskMode::Execution),
                       doctest::Contains("interval error"), Error);
  CHECK_THROWS_WITH_AS(build_instruction_cross_mask({{1, 1}, {1, 6}}, 5, MaskMode::Execution),
                       doctest::Contains("interval error"), Error);
}

TEST_CASE("every cross-mask row keeps at least one key") {
  RandomStream rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const int64_t T = 1 + rng.uniform_int(24);
    const int64_t n = 1 + rng.uniform_int(std::min<int64_t>(5, T));
    auto iv = random_intervals(rng, T, n);
    for (MaskMode mode : {MaskMode::Onset, MaskMode::Execution, MaskMode::Unmasked}) {
      AttentionMask m = build_instruction_cross_mask(iv, T, mode);
      for (int64_t r = 0; r < m.rows; ++r) {
        bool any = false;
        for (int64_t c = 0; c < m.cols; ++c) any = any || m.at(r, c);
        CHECK(any);
      }
    }
  }
}

TEST_CASE("parameter count formula matches materialized parameters") {
  for (bool ctx : {false, true}) {
    for (auto obs : {Observability::Partial, Observability::Full}) {
      ModelConfig cfg = tiny_config();
      cfg.observability = obs;
      cfg.instruction_context = ctx;
      ModelParams p = init_params(cfg, 7);
      CHECK(p.total_count() == param_count(cfg));
    }
  }
  ModelConfig paper = tiny_config();
  paper.encoder_blocks = 4;
  paper.decoder_blocks = 1;
  paper.embed_dim = 128;
  paper.mlp_dim = 256;
  paper.heads = 4;
  ModelParams p = init_params(paper, 7);
  CHECK(p.total_count() == param_count(paper));
}

TEST_CASE("encode_sequence: causal independence and determinism") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 11);
  RandomStream rng(33);
  ForwardCtx eval;

  for (int trial = 0; trial < 10; ++trial) {
    const int64_t T = 3 + rng.uniform_int(8);
    auto obs = random_obs_steps(rng, T, cfg.obs_tokens, cfg.obs_vocab_size);
    auto goal = random_goal(rng, 3, cfg.text_vocab_size);

    EncoderOutput a = m.encode_sequence(obs, goal, eval);
    EncoderOutput b = m.encode_sequence(obs, goal, eval);
    CHECK(same_values(a.latents, b.latents));
    CHECK(a.step_count() == T);

    // perturb a strictly later observation; z_t for t before it must not move
    const int64_t t_perturb = 1 + rng.uniform_int(T - 1);
    auto obs2 = obs;
    for (auto& v : obs2[static_cast<size_t>(t_perturb)])
      v = static_cast<int32_t>(rng.uniform_int(cfg.obs_vocab_size - 1));
    EncoderOutput c = m.encode_sequence(obs2, goal, eval);
    const int64_t D = cfg.embed_dim;
    for (int64_t t = 0; t < t_perturb; ++t) {
      const int64_t row = a.step_begin + t;
      double diff = 0;
      for (int64_t j = 0; j < D; ++j)
        diff = std::max(diff, std::fabs(a.latents.at_flat(row * D + j) -
                                        c.latents.at_flat(row * D + j)));
      CHECK(diff < 1e-6);
    }
  }
}

TEST_CASE("encode_sequence: z_1 invariant to rewriting the whole future") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 12);
  RandomStream rng(34);
  ForwardCtx eval;
  const int64_t T = 8;
  auto obs = random_obs_steps(rng, T, cfg.obs_tokens, cfg.obs_vocab_size);
  auto goal = random_goal(rng, 2, cfg.text_vocab_size);
  EncoderOutput a = m.encode_sequence(obs, goal, eval);
  auto obs2 = obs;
  for (int64_t t = 1; t < T; ++t)
    for (auto& v : obs2[static_cast<size_t>(t)])
      v = static_cast<int32_t>(rng.uniform_int(cfg.obs_vocab_size - 1));
  EncoderOutput b = m.encode_sequence(obs2, goal, eval);
  const int64_t D = cfg.embed_dim;
  double diff = 0;
  for (int64_t j = 0; j < D; ++j)
    diff = std::max(diff, std::fabs(a.latents.at_flat(a.step_begin * D + j) -
                                    b.latents.at_flat(b.step_begin * D + j)));
  CHECK(diff < 1e-6);
}

TEST_CASE("encode_sequence rejects overlong input") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 13);
  RandomStream rng(35);
  auto obs = random_obs_steps(rng, cfg.max_seq_len + 1, cfg.obs_tokens, cfg.obs_vocab_size);
  ForwardCtx eval;
  CHECK_THROWS_WITH_AS(m.encode_sequence(obs, {}, eval), doctest::Contains("length error"),
                       Error);
}

TEST_CASE("encode_state: latent count, determinism, CLS sensitivity") {
  ModelConfig cfg = tiny_config();
  cfg.observability = Observability::Full;
  Model m = Model::init(cfg, 14);
  RandomStream rng(36);
  ForwardCtx eval;
  std::vector<int32_t> obs(static_cast<size_t>(cfg.obs_tokens));
  for (auto& v : obs) v = static_cast<int32_t>(rng.uniform_int(cfg.obs_vocab_size - 1));
  auto goal = random_goal(rng, 3, cfg.text_vocab_size);

  EncoderOutput a = m.encode_state(obs, goal, eval);
  CHECK(a.latents.extent(0) == 1 + cfg.obs_tokens + 3);  // CLS + K + goal latents
  CHECK(a.step_end - a.step_begin == 1 + cfg.obs_tokens);
  CHECK(a.cls_index == 0);

  EncoderOutput b = m.encode_state(obs, goal, eval);
  CHECK(same_values(a.latents, b.latents));

  // flipping any single grid token must move z_CLS
  for (int64_t k = 0; k < cfg.obs_tokens; ++k) {
    auto obs2 = obs;
    obs2[static_cast<size_t>(k)] =
        static_cast<int32_t>((obs2[static_cast<size_t>(k)] + 1) % (cfg.obs_vocab_size - 1));
    EncoderOutput c = m.encode_state(obs2, goal, eval);
    double diff = 0;
    for (int64_t j = 0; j < cfg.embed_dim; ++j)
      diff = std::max(diff, std::fabs(a.latents.at_flat(j) - c.latents.at_flat(j)));
    CHECK(diff > 0.0);
  }
}

TEST_CASE("policy_logits shape and argmax shift invariance") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 15);
  RandomStream rng(37);
  ForwardCtx eval;
  const int64_t T = 5;
  auto obs = random_obs_steps(rng, T, cfg.obs_tokens, cfg.obs_vocab_size);
  auto goal = random_goal(rng, 2, cfg.text_vocab_size);
  EncoderOutput enc = m.encode_sequence(obs, goal, eval);
  Tensor logits = m.policy_logits(enc);
  CHECK(logits.shape() == Shape{T, cfg.action_count});

  Tensor shifted = add(logits, full({cfg.action_count}, 3.25, cfg.dtype));
  for (int64_t t = 0; t < T; ++t) {
    auto argmax_row = [&](const Tensor& x) {
      int64_t best = 0;
      for (int64_t j = 1; j < cfg.action_count; ++j)
        if (x.at_flat(t * cfg.action_count + j) > x.at_flat(t * cfg.action_count + best))
          best = j;
      return best;
    };
    CHECK(argmax_row(logits) == argmax_row(shifted));
    Tensor p1 = softmax(slice_rows(logits, t, t + 1), 1);
    Tensor p2 = softmax(slice_rows(shifted, t, t + 1), 1);
    CHECK(max_abs_diff(p1, p2) < 1e-6);
  }
}

TEST_CASE("decoder: masked full pass equals the explicit-slicing oracle") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 16);
  RandomStream rng(38);
  ForwardCtx eval;

  for (int trial = 0; trial < 25; ++trial) {
    const int64_t T = 2 + rng.uniform_int(10);
    const int64_t n = 1 + rng.uniform_int(std::min<int64_t>(4, T));
    auto obs = random_obs_steps(rng, T, cfg.obs_tokens, cfg.obs_vocab_size);
    auto goal = random_goal(rng, 2, cfg.text_vocab_size);
    auto intervals = random_intervals(rng, T, n);

    std::vector<std::vector<int32_t>> bodies(intervals.size());
    for (auto& b : bodies) {
      b.resize(static_cast<size_t>(1 + rng.uniform_int(4)));
      for (auto& v : b) v = static_cast<int32_t>(4 + rng.uniform_int(cfg.text_vocab_size - 4));
    }
    InstructionTokens toks = make_tokens(bodies, 1);

    EncoderOutput enc = m.encode_sequence(obs, goal, eval);
    DecoderKeys keys = m.decoder_keys(enc);
    CHECK(keys.prefix_cols == 0);

    for (MaskMode mode : {MaskMode::Execution, MaskMode::Onset}) {
      AttentionMask mask = build_instruction_cross_mask(intervals, T, mode);
      Tensor full_logits = m.decode_instruction_logits(toks, keys.keys, mask, eval);

      const int64_t V = cfg.text_vocab_size;
      int64_t row = 0;
      for (size_t i = 0; i < intervals.size(); ++i) {
        int64_t cap = 0;
        for (int64_t c = 0; c < mask.cols; ++c)
          if (mask.at(static_cast<int64_t>(i), c)) cap = c + 1;
        Tensor sliced = slice_rows(keys.keys, 0, cap);
        InstructionTokens solo = make_tokens({bodies[i]}, 1);
        Tensor oracle =
            m.decode_instruction_logits(solo, sliced, AttentionMask::none(1, cap), eval);
        const int64_t len = static_cast<int64_t>(bodies[i].size()) + 1;
        for (int64_t q = 0; q < len; ++q)
          for (int64_t v = 0; v < V; ++v)
            CHECK(std::fabs(full_logits.at_flat((row + q) * V + v) -
                            oracle.at_flat(q * V + v)) < 1e-6);
        row += len;
      }
    }
  }
}

TEST_CASE("decoder: BOS-only prefixes give one distribution per instruction") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 17);
  RandomStream rng(39);
  ForwardCtx eval;
  const int64_t T = 6;
  auto obs = random_obs_steps(rng, T, cfg.obs_tokens, cfg.obs_vocab_size);
  EncoderOutput enc = m.encode_sequence(obs, {}, eval);
  DecoderKeys keys = m.decoder_keys(enc);
  InstructionTokens toks = make_tokens({{}, {}, {}}, 1);
  AttentionMask mask =
      build_instruction_cross_mask({{1, 3}, {3, 5}, {5, 7}}, T, MaskMode::Execution);
  Tensor logits = m.decode_instruction_logits(toks, keys.keys, mask, eval);
  CHECK(logits.shape() == Shape{3, cfg.text_vocab_size});
}

TEST_CASE("decoder: instruction token rows ignore other instructions and later tokens") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 18);
  RandomStream rng(40);
  ForwardCtx eval;
  const int64_t T = 6;
  auto obs = random_obs_steps(rng, T, cfg.obs_tokens, cfg.obs_vocab_size);
  EncoderOutput enc = m.encode_sequence(obs, {}, eval);
  DecoderKeys keys = m.decoder_keys(enc);
  auto intervals = std::vector<Interval>{{1, 4}, {4, 7}};
  AttentionMask mask = build_instruction_cross_mask(intervals, T, MaskMode::Execution);

  std::vector<std::vector<int32_t>> bodies{{4, 5, 6}, {7, 8}};
  InstructionTokens toks = make_tokens(bodies, 1);
  Tensor base = m.decode_instruction_logits(toks, keys.keys, mask, eval);

  // rewrite instruction 2 entirely and the tail of instruction 1
  std::vector<std::vector<int32_t>> bodies2{{4, 5, 9}, {10, 11}};
  InstructionTokens toks2 = make_tokens(bodies2, 1);
  Tensor changed = m.decode_instruction_logits(toks2, keys.keys, mask, eval);

  // rows of instruction 1 at positions 0..2 (BOS,4,5) depend only on the prefix
  const int64_t V = cfg.text_vocab_size;
  for (int64_t q = 0; q < 3; ++q)
    for (int64_t v = 0; v < V; ++v)
      CHECK(std::fabs(base.at_flat(q * V + v) - changed.at_flat(q * V + v)) < 1e-6);
}

TEST_CASE("decoder validates mask/latent extent") {
  ModelConfig cfg = tiny_config();
  Model m = Model::init(cfg, 19);
  RandomStream rng(41);
  ForwardCtx eval;
  auto obs = random_obs_steps(rng, 5, cfg.obs_tokens, cfg.obs_vocab_size);
  EncoderOutput enc = m.encode_sequence(obs, {}, eval);
  DecoderKeys keys = m.decoder_keys(enc);
  InstructionTokens toks = make_tokens({{4}}, 1);
  AttentionMask wrong = AttentionMask::none(1, 3);  // keys have 5 rows
  CHECK_THROWS_WITH_AS(m.decode_instruction_logits(toks, keys.keys, wrong, eval),
                       doctest::Contains("shape error"), Error);
}

TEST_CASE("goal latents join the decoder key set only when configured") {
  ModelConfig cfg = tiny_config();
  cfg.decoder_attends_goal = true;
  Model m = Model::init(cfg, 20);
  RandomStream rng(42);
  ForwardCtx eval;
  auto obs = random_obs_steps(rng, 4, cfg.obs_tokens, cfg.obs_vocab_size);
  auto goal = random_goal(rng, 3, cfg.text_vocab_size);
  EncoderOutput enc = m.encode_sequence(obs, goal, eval);
  DecoderKeys keys = m.decoder_keys(enc);
  CHECK(keys.prefix_cols == 3);
  CHECK(keys.keys.extent(0) == 3 + 4);
  AttentionMask step_mask = build_instruction_cross_mask({{1, 5}}, 4, MaskMode::Execution);
  AttentionMask widened = widen_mask(step_mask, keys.prefix_cols);
  CHECK(widened.cols == 7);
  InstructionTokens toks = make_tokens({{5}}, 1);
  Tensor logits = m.decode_instruction_logits(toks, keys.keys, widened, eval);
  CHECK(logits.extent(0) == 2);
}

TEST_CASE("tiny end-to-end gradient spot check") {
  ModelConfig cfg = tiny_config(DType::f64);
  Model m = Model::init(cfg, 21);
  RandomStream rng(43);
  const int64_t T = 4;
  auto obs = random_obs_steps(rng, T, cfg.obs_tokens, cfg.obs_vocab_size);
  auto goal = random_goal(rng, 2, cfg.text_vocab_size);
  auto intervals = std::vector<Interval>{{1, 3}, {3, 5}};
  AttentionMask mask = build_instruction_cross_mask(intervals, T, MaskMode::Execution);
  InstructionTokens toks = make_tokens({{4, 5}, {6}}, 1);
  const std::vector<int32_t> action_targets{0, 1, 2, 1};
  const std::vector<int32_t> instr_targets{4, 5, 2, 6, 2};  // bodies shifted, EOS=2

  auto loss_value = [&]() {
    ForwardCtx eval;
    EncoderOutput enc = m.encode_sequence(obs, goal, eval);
    Tensor act = cross_entropy_logits(m.policy_logits(enc), action_targets, -1);
    DecoderKeys keys = m.decoder_keys(enc);
    Tensor lang = cross_entropy_logits(
        m.decode_instruction_logits(toks, keys.keys, mask, eval), instr_targets, 0);
    return add(act, scale(lang, 0.5));
  };

  m.params().set_requires_grad(true);
  GradientTape tape;
  std::vector<Tensor> analytic;
  {
    TapeScope scope(tape);
    Tensor loss = loss_value();
    backward(loss, tape);
  }
  std::vector<Tensor> tensors;
  std::vector<std::string> names;
  for (auto& e : m.params().entries()) {
    tensors.push_back(e.tensor);
    analytic.push_back(grad_of(e.tensor));
    names.push_back(e.name);
  }
  m.params().clear_grads();
  m.params().set_requires_grad(false);

  auto res = ic::testsupport::finite_difference_check_sampled(
      tensors, analytic, [&]() { return loss_value().item(); }, 3, 99, 1e-5, 1e-8, &names);
  INFO("worst coordinate: ", res.worst);
  CHECK(res.max_rel_err < 1e-4);
}

}  // TEST_SUITE
