#include "ic/model/net.hpp"

#include <cmath>
#include <numeric>

#include "ic/error.hpp"

namespace ic::model {

using namespace ic::num;

namespace {

struct Mha {
  const ModelParams& p;
  std::string prefix;
  Tensor operator()(const Tensor& q_src, const Tensor& kv_src, int64_t heads,
                    const Tensor* additive_mask, double pdrop, const ForwardCtx& ctx) const {
    const int64_t L = q_src.extent(0);
    const int64_t S = kv_src.extent(0);
    const int64_t d = q_src.extent(1);
    const int64_t dh = d / heads;
    Tensor Q = add(matmul(q_src, p.at(prefix + ".wq")), p.at(prefix + ".bq"));
    Tensor K = add(matmul(kv_src, p.at(prefix + ".wk")), p.at(prefix + ".bk"));
    Tensor V = add(matmul(kv_src, p.at(prefix + ".wv")), p.at(prefix + ".bv"));
    Tensor Qh = transpose01(reshape(Q, {L, heads, dh}));  // [H, L, dh]
    Tensor Kh = transpose01(reshape(K, {S, heads, dh}));
    Tensor Vh = transpose01(reshape(V, {S, heads, dh}));
    Tensor scores = scale(matmul_nt(Qh, Kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    if (additive_mask) scores = add(scores, *additive_mask);
    Tensor probs = softmax(scores, 2);
    if (ctx.training && pdrop > 0.0) probs = dropout(probs, pdrop, *ctx.rng, true);
    Tensor ctx_out = reshape(transpose01(matmul(probs, Vh)), {L, d});
    return add(matmul(ctx_out, p.at(prefix + ".wo")), p.at(prefix + ".bo"));
  }
};

Tensor layer_norm_p(const ModelParams& p, const std::string& prefix, const Tensor& x) {
  return layer_norm(x, p.at(prefix + ".g"), p.at(prefix + ".b"), 1e-5);
}

Tensor mlp_block(const ModelParams& p, const std::string& prefix, const Tensor& x) {
  Tensor h = gelu(add(matmul(x, p.at(prefix + ".w1")), p.at(prefix + ".b1")));
  return add(matmul(h, p.at(prefix + ".w2")), p.at(prefix + ".b2"));
}

Tensor maybe_dropout(const Tensor& x, double pdrop, const ForwardCtx& ctx) {
  if (ctx.training && pdrop > 0.0) {
    check(ctx.rng != nullptr, "configuration error: training forward needs a dropout stream");
    return dropout(x, pdrop, *ctx.rng, true);
  }
  return x;
}

Tensor encoder_stack(const ModelConfig& cfg, const ModelParams& p, Tensor x,
                     const Tensor* additive_mask, const ForwardCtx& ctx) {
  for (int64_t i = 0; i < cfg.encoder_blocks; ++i) {
    const std::string b = "enc.b" + std::to_string(i);
    Tensor normed = layer_norm_p(p, b + ".ln1", x);
    Tensor attn_out = Mha{p, b + ".attn"}(normed, normed, cfg.heads, additive_mask,
                                          cfg.dropout, ctx);
    x = add(x, maybe_dropout(attn_out, cfg.dropout, ctx));
    Tensor mlp_out = mlp_block(p, b + ".mlp", layer_norm_p(p, b + ".ln2", x));
    x = add(x, maybe_dropout(mlp_out, cfg.dropout, ctx));
  }
  return layer_norm_p(p, "enc.lnf", x);
}

std::vector<int32_t> iota32(int64_t n, int32_t start = 0) {
  std::vector<int32_t> v(static_cast<size_t>(n));
  std::iota(v.begin(), v.end(), start);
  return v;
}

}  // namespace

Model::Model(ModelConfig config, ModelParams params)
    : cfg_(std::move(config)), params_(std::move(params)) {
  cfg_.validate();
}

Model Model::init(const ModelConfig& config, uint64_t seed) {
  return Model(config, init_params(config, seed));
}

EncoderOutput Model::encode_sequence(const std::vector<std::vector<int32_t>>& obs_steps,
                                     const std::vector<int32_t>& goal_ids,
                                     const ForwardCtx& ctx,
                                     const std::vector<int32_t>* context_ids) const {
  const int64_t T = static_cast<int64_t>(obs_steps.size());
  const int64_t G = static_cast<int64_t>(goal_ids.size());
  check(T <= cfg_.max_seq_len, "length error: sequence of ", T, " steps exceeds max_seq_len ",
        cfg_.max_seq_len);
  check(G <= cfg_.max_goal_len, "length error: goal of ", G, " tokens exceeds max_goal_len ",
        cfg_.max_goal_len);
  check(!context_ids || cfg_.instruction_context,
        "configuration error: instruction context passed to a model without one");
  const int64_t C = context_ids ? static_cast<int64_t>(context_ids->size()) : 0;
  if (cfg_.instruction_context)
    check(context_ids != nullptr, "shape error: this model requires an instruction block");
  check(C <= cfg_.max_ctx_len, "length error: instruction block of ", C,
        " tokens exceeds max_ctx_len ", cfg_.max_ctx_len);
  const int64_t P = G + C;  // prefix attendable from every step
  const int64_t L = P + T;
  check(L > 0, "empty-sequence error: nothing to encode");

  const ModelParams& p = params_;
  Tensor x;
  {
    Tensor goal_part;
    if (G > 0) {
      Tensor ge = embedding(p.at("enc.text_embed"), goal_ids);
      goal_part = add(ge, slice_rows(p.at("enc.pos_goal"), 0, G));
    }
    Tensor ctx_part;
    if (C > 0) {
      Tensor ce = embedding(p.at("enc.text_embed"), *context_ids);
      ctx_part = add(ce, slice_rows(p.at("enc.pos_ctx"), 0, C));
    }
    Tensor step_part;
    if (T > 0) {
      std::vector<int32_t> flat;
      flat.reserve(static_cast<size_t>(T * cfg_.obs_tokens));
      for (const auto& step : obs_steps) {
        check(static_cast<int64_t>(step.size()) == cfg_.obs_tokens,
              "shape error: observation with ", step.size(), " tokens, expected ",
              cfg_.obs_tokens);
        flat.insert(flat.end(), step.begin(), step.end());
      }
      Tensor cells = reshape(embedding(p.at("enc.obs_embed"), flat),
                             {T, cfg_.obs_tokens, cfg_.embed_dim});
      cells = add(cells, slice_rows(p.at("enc.pos_grid"), 0, cfg_.obs_tokens));
      Tensor feats = mean_axis(cells, 1);  // [T, D]
      feats = add(matmul(feats, p.at("enc.step_proj.w")), p.at("enc.step_proj.b"));
      step_part = add(feats, slice_rows(p.at("enc.pos_seq"), 0, T));
    }
    x = goal_part;
    if (ctx_part.defined()) x = x.defined() ? concat_rows(x, ctx_part) : ctx_part;
    if (step_part.defined()) x = x.defined() ? concat_rows(x, step_part) : step_part;
  }
  x = maybe_dropout(x, cfg_.dropout, ctx);

  // prefix rows see the prefix; step rows see the prefix plus steps <= their own
  AttentionMask mask;
  mask.rows = mask.cols = L;
  mask.allow.assign(static_cast<size_t>(L * L), 0);
  for (int64_t q = 0; q < L; ++q)
    for (int64_t k = 0; k < L; ++k) {
      const bool ok = k < P ? true : (q >= P && k <= q);
      mask.set(q, k, ok);
    }
  Tensor additive = mask_to_additive(mask, cfg_.dtype);
  Tensor latents = encoder_stack(cfg_, params_, x, &additive, ctx);

  EncoderOutput out;
  out.latents = latents;
  out.goal_begin = 0;
  out.goal_end = G;
  out.step_begin = P;
  out.step_end = P + T;
  return out;
}

EncoderOutput Model::encode_state(const std::vector<int32_t>& obs_ids,
                                  const std::vector<int32_t>& goal_ids,
                                  const ForwardCtx& ctx) const {
  check(cfg_.observability == Observability::Full,
        "configuration error: encode_state needs a fully-observed configuration");
  check(static_cast<int64_t>(obs_ids.size()) == cfg_.obs_tokens, "shape error: observation with ",
        obs_ids.size(), " tokens, expected ", cfg_.obs_tokens);
  const int64_t K = cfg_.obs_tokens;
  const int64_t G = static_cast<int64_t>(goal_ids.size());
  check(G <= cfg_.max_goal_len, "length error: goal of ", G, " tokens exceeds max_goal_len ",
        cfg_.max_goal_len);

  const ModelParams& p = params_;
  std::vector<int32_t> front_ids;
  front_ids.reserve(static_cast<size_t>(1 + K));
  front_ids.push_back(static_cast<int32_t>(cfg_.cls_token_id()));
  front_ids.insert(front_ids.end(), obs_ids.begin(), obs_ids.end());
  Tensor fe = embedding(p.at("enc.obs_embed"), front_ids);
  // CLS takes the spare last row of the grid position table
  std::vector<int32_t> pos_ids = iota32(1 + K, -1);
  pos_ids[0] = static_cast<int32_t>(K);
  Tensor x = add(fe, embedding(p.at("enc.pos_grid"), pos_ids));
  if (G > 0) {
    Tensor ge = add(embedding(p.at("enc.text_embed"), goal_ids),
                    slice_rows(p.at("enc.pos_goal"), 0, G));
    x = concat_rows(x, ge);
  }
  x = maybe_dropout(x, cfg_.dropout, ctx);
  Tensor latents = encoder_stack(cfg_, params_, x, nullptr, ctx);

  EncoderOutput out;
  out.latents = latents;
  out.cls_index = 0;
  out.step_begin = 0;
  out.step_end = 1 + K;
  out.goal_begin = 1 + K;
  out.goal_end = 1 + K + G;
  return out;
}

Tensor Model::policy_logits(const EncoderOutput& enc) const {
  Tensor z = cfg_.observability == Observability::Full
                 ? slice_rows(enc.latents, enc.cls_index, enc.cls_index + 1)
                 : slice_rows(enc.latents, enc.step_begin, enc.step_end);
  return add(matmul(z, params_.at("policy.w")), params_.at("policy.b"));
}

DecoderKeys Model::decoder_keys(const EncoderOutput& enc) const {
  Tensor steps = slice_rows(enc.latents, enc.step_begin, enc.step_end);
  if (!cfg_.decoder_attends_goal || enc.goal_end == enc.goal_begin)
    return DecoderKeys{steps, 0};
  Tensor goal = slice_rows(enc.latents, enc.goal_begin, enc.goal_end);
  return DecoderKeys{concat_rows(goal, steps), enc.goal_end - enc.goal_begin};
}

AttentionMask widen_mask(const AttentionMask& step_mask, int64_t prefix_cols) {
  if (prefix_cols == 0) return step_mask;
  AttentionMask m;
  m.rows = step_mask.rows;
  m.cols = step_mask.cols + prefix_cols;
  m.allow.assign(static_cast<size_t>(m.rows * m.cols), 0);
  for (int64_t r = 0; r < m.rows; ++r) {
    for (int64_t c = 0; c < prefix_cols; ++c) m.set(r, c, true);
    for (int64_t c = 0; c < step_mask.cols; ++c)
      m.set(r, prefix_cols + c, step_mask.at(r, c));
  }
  return m;
}

Tensor Model::decode_instruction_logits(const InstructionTokens& tokens, const Tensor& keys,
                                        const AttentionMask& cross_mask,
                                        const ForwardCtx& ctx) const {
  const int64_t L = static_cast<int64_t>(tokens.ids.size());
  check(L > 0, "shape error: no instruction tokens to decode");
  check(keys.rank() == 2 && keys.extent(1) == cfg_.embed_dim,
        "shape error: decoder keys must be [S x embed_dim]");
  const int64_t S = keys.extent(0);
  check(cross_mask.cols == S, "shape error: cross mask has ", cross_mask.cols,
        " key columns but ", S, " latents were given");
  check(cross_mask.rows == tokens.n_instr, "shape error: cross mask has ", cross_mask.rows,
        " rows for ", tokens.n_instr, " instructions");
  for (int64_t i = 0; i < L; ++i) {
    check(tokens.pos_of[static_cast<size_t>(i)] < cfg_.max_instr_len,
          "length error: instruction longer than max_instr_len ", cfg_.max_instr_len);
    if (tokens.bos_id >= 0 && tokens.pos_of[static_cast<size_t>(i)] == 0)
      check(tokens.ids[static_cast<size_t>(i)] == tokens.bos_id,
            "token error: instruction prefixes must begin with BOS");
  }

  const ModelParams& p = params_;
  Tensor x = add(embedding(p.at("dec.tok_embed"), tokens.ids),
                 embedding(p.at("dec.pos_tok"), tokens.pos_of));
  x = maybe_dropout(x, cfg_.dropout, ctx);

  // block-causal self mask: same instruction, position <= own
  AttentionMask self_mask;
  self_mask.rows = self_mask.cols = L;
  self_mask.allow.assign(static_cast<size_t>(L * L), 0);
  for (int64_t q = 0; q < L; ++q)
    for (int64_t k = 0; k < L; ++k)
      self_mask.set(q, k,
                    tokens.instr_of[static_cast<size_t>(q)] == tokens.instr_of[static_cast<size_t>(k)] &&
                        tokens.pos_of[static_cast<size_t>(k)] <= tokens.pos_of[static_cast<size_t>(q)]);
  Tensor self_additive = mask_to_additive(self_mask, cfg_.dtype);

  // per-token cross mask rows expanded from per-instruction rows
  AttentionMask cross_tok;
  cross_tok.rows = L;
  cross_tok.cols = S;
  cross_tok.allow.assign(static_cast<size_t>(L * S), 0);
  for (int64_t q = 0; q < L; ++q) {
    const int64_t i = tokens.instr_of[static_cast<size_t>(q)];
    for (int64_t k = 0; k < S; ++k) cross_tok.set(q, k, cross_mask.at(i, k));
  }
  Tensor cross_additive = mask_to_additive(cross_tok, cfg_.dtype);

  for (int64_t i = 0; i < cfg_.decoder_blocks; ++i) {
    const std::string b = "dec.b" + std::to_string(i);
    Tensor normed = layer_norm_p(p, b + ".ln1", x);
    Tensor self_out =
        Mha{p, b + ".self"}(normed, normed, cfg_.heads, &self_additive, cfg_.dropout, ctx);
    x = add(x, maybe_dropout(self_out, cfg_.dropout, ctx));
    Tensor cross_out = Mha{p, b + ".cross"}(layer_norm_p(p, b + ".lnx", x), keys, cfg_.heads,
                                            &cross_additive, cfg_.dropout, ctx);
    x = add(x, maybe_dropout(cross_out, cfg_.dropout, ctx));
    Tensor mlp_out = mlp_block(p, b + ".mlp", layer_norm_p(p, b + ".ln2", x));
    x = add(x, maybe_dropout(mlp_out, cfg_.dropout, ctx));
  }
  x = layer_norm_p(p, "dec.lnf", x);
  return add(matmul(x, p.at("dec.out.w")), p.at("dec.out.b"));
}

std::vector<int32_t> Model::greedy_decode(const Tensor& keys,
                                          const AttentionMask& single_row_mask, int32_t bos,
                                          int32_t eos, int64_t max_len) const {
  check(single_row_mask.rows == 1, "shape error: greedy_decode expects a one-row mask");
  ForwardCtx ctx;  // eval mode
  InstructionTokens toks;
  toks.n_instr = 1;
  toks.bos_id = bos;
  toks.ids = {bos};
  toks.instr_of = {0};
  toks.pos_of = {0};
  std::vector<int32_t> out;
  for (int64_t step = 0; step < max_len; ++step) {
    Tensor logits = decode_instruction_logits(toks, keys, single_row_mask, ctx);
    const int64_t last = logits.extent(0) - 1;
    const int64_t V = logits.extent(1);
    int32_t best = 0;
    double best_v = logits.at_flat(last * V);
    for (int64_t j = 1; j < V; ++j) {
      const double v = logits.at_flat(last * V + j);
      if (v > best_v) {
        best_v = v;
        best = static_cast<int32_t>(j);
      }
    }
    if (best == eos) break;
    out.push_back(best);
    if (static_cast<int64_t>(toks.ids.size()) >= cfg_.max_instr_len) break;
    toks.ids.push_back(best);
    toks.instr_of.push_back(0);
    toks.pos_of.push_back(toks.pos_of.back() + 1);
  }
  return out;
}

}  // namespace ic::model
