#include "ic/model/params.hpp"

#include "ic/error.hpp"
#include "ic/num/random.hpp"

namespace ic::model {

using namespace ic::num;

ModelParams::ModelParams(std::vector<NamedTensor> entries) : entries_(std::move(entries)) {
  for (size_t i = 0; i < entries_.size(); ++i) index_[entries_[i].name] = i;
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  check(it != index_.end(), "parameter error: no parameter named ", name);
  return entries_[it->second].tensor;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  check(it != index_.end(), "parameter error: no parameter named ", name);
  return entries_[it->second].tensor;
}

int64_t ModelParams::total_count() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ModelParams::set_requires_grad(bool b) {
  for (auto& e : entries_) e.tensor.set_requires_grad(b);
}

void ModelParams::clear_grads() {
  for (auto& e : entries_) e.tensor.clear_grad();
}

ModelParams ModelParams::clone() const {
  std::vector<NamedTensor> copy;
  copy.reserve(entries_.size());
  for (const auto& e : entries_) copy.push_back({e.name, ic::num::clone(e.tensor)});
  return ModelParams(std::move(copy));
}

namespace {

struct Builder {
  std::vector<NamedTensor> out;
  RandomStream rng;
  DType dtype;
  explicit Builder(uint64_t seed, DType dt) : rng(seed), dtype(dt) {}

  void proj(const std::string& name, int64_t rows, int64_t cols) {
    out.push_back({name, randn(rng, {rows, cols}, 0.02, dtype)});
  }
  void table(const std::string& name, int64_t rows, int64_t cols) {
    out.push_back({name, randn(rng, {rows, cols}, 0.02, dtype)});
  }
  void bias(const std::string& name, int64_t n) { out.push_back({name, zeros({n}, dtype)}); }
  void ln(const std::string& prefix, int64_t n) {
    out.push_back({prefix + ".g", full({n}, 1.0, dtype)});
    out.push_back({prefix + ".b", zeros({n}, dtype)});
  }
  void attn(const std::string& prefix, int64_t d) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) proj(prefix + "." + w, d, d);
    for (const char* b : {"bq", "bk", "bv", "bo"}) bias(prefix + "." + b, d);
  }
  void mlp(const std::string& prefix, int64_t d, int64_t m) {
    proj(prefix + ".w1", d, m);
    bias(prefix + ".b1", m);
    proj(prefix + ".w2", m, d);
    bias(prefix + ".b2", d);
  }
};

}  // namespace

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  const int64_t d = cfg.embed_dim;
  Builder b(derive_seed(seed, "param-init"), cfg.dtype);

  b.table("enc.obs_embed", cfg.obs_vocab_size, d);
  b.table("enc.text_embed", cfg.text_vocab_size, d);
  b.table("enc.pos_seq", cfg.max_seq_len, d);
  b.table("enc.pos_grid", cfg.obs_tokens + 1, d);  // last row is the CLS slot
  b.table("enc.pos_goal", cfg.max_goal_len, d);
  if (cfg.instruction_context) b.table("enc.pos_ctx", cfg.max_ctx_len, d);
  if (cfg.observability == Observability::Partial) {
    b.proj("enc.step_proj.w", d, d);
    b.bias("enc.step_proj.b", d);
  }
  for (int64_t i = 0; i < cfg.encoder_blocks; ++i) {
    const std::string p = "enc.b" + std::to_string(i);
    b.ln(p + ".ln1", d);
    b.attn(p + ".attn", d);
    b.ln(p + ".ln2", d);
    b.mlp(p + ".mlp", d, cfg.mlp_dim);
  }
  b.ln("enc.lnf", d);

  b.proj("policy.w", d, cfg.action_count);
  b.bias("policy.b", cfg.action_count);

  b.table("dec.tok_embed", cfg.text_vocab_size, d);
  b.table("dec.pos_tok", cfg.max_instr_len, d);
  for (int64_t i = 0; i < cfg.decoder_blocks; ++i) {
    const std::string p = "dec.b" + std::to_string(i);
    b.ln(p + ".ln1", d);
    b.attn(p + ".self", d);
    b.ln(p + ".lnx", d);
    b.attn(p + ".cross", d);
    b.ln(p + ".ln2", d);
    b.mlp(p + ".mlp", d, cfg.mlp_dim);
  }
  b.ln("dec.lnf", d);
  b.proj("dec.out.w", d, cfg.text_vocab_size);
  b.bias("dec.out.b", cfg.text_vocab_size);

  return ModelParams(std::move(b.out));
}

int64_t param_count(const ModelConfig& cfg) {
  const int64_t d = cfg.embed_dim;
  const int64_t attn = 4 * d * d + 4 * d;
  const int64_t mlp = d * cfg.mlp_dim + cfg.mlp_dim + cfg.mlp_dim * d + d;
  const int64_t ln = 2 * d;
  int64_t n = 0;
  n += cfg.obs_vocab_size * d;
  n += cfg.text_vocab_size * d;
  n += cfg.max_seq_len * d;
  n += (cfg.obs_tokens + 1) * d;
  n += cfg.max_goal_len * d;
  if (cfg.instruction_context) n += cfg.max_ctx_len * d;
  if (cfg.observability == Observability::Partial) n += d * d + d;
  n += cfg.encoder_blocks * (2 * ln + attn + mlp);
  n += ln;  // enc.lnf
  n += d * cfg.action_count + cfg.action_count;
  n += cfg.text_vocab_size * d;  // dec.tok_embed
  n += cfg.max_instr_len * d;
  n += cfg.decoder_blocks * (3 * ln + 2 * attn + mlp);
  n += ln;  // dec.lnf
  n += d * cfg.text_vocab_size + cfg.text_vocab_size;
  return n;
}

}  // namespace ic::model
