#pragma once
// Small model configurations and random trajectory-shaped inputs shared by
// the model/training tests and the acceptance suite.
#include <vector>

#include "ic/model/net.hpp"
#include "ic/num/random.hpp"

namespace ic::testsupport {

inline ic::model::ModelConfig tiny_config(ic::num::DType dtype = ic::num::DType::f64) {
  ic::model::ModelConfig cfg;
  cfg.encoder_blocks = 2;
  cfg.decoder_blocks = 1;
  cfg.embed_dim = 16;
  cfg.mlp_dim = 32;
  cfg.heads = 2;
  cfg.dropout = 0.0;
  cfg.max_seq_len = 32;
  cfg.max_goal_len = 4;
  cfg.max_instr_len = 12;
  cfg.obs_vocab_size = 11;  // 10 symbols + CLS
  cfg.text_vocab_size = 12;
  cfg.action_count = 4;
  cfg.obs_tokens = 4;
  cfg.observability = ic::model::Observability::Partial;
  cfg.dtype = dtype;
  return cfg;
}

inline std::vector<std::vector<int32_t>> random_obs_steps(ic::num::RandomStream& rng,
                                                          int64_t T, int64_t K,
                                                          int64_t vocab) {
  std::vector<std::vector<int32_t>> steps(static_cast<size_t>(T));
  for (auto& s : steps) {
    s.resize(static_cast<size_t>(K));
    for (auto& v : s) v = static_cast<int32_t>(rng.uniform_int(vocab - 1));  // keep CLS out
  }
  return steps;
}

inline std::vector<int32_t> random_goal(ic::num::RandomStream& rng, int64_t G, int64_t vocab) {
  std::vector<int32_t> g(static_cast<size_t>(G));
  for (auto& v : g) v = static_cast<int32_t>(4 + rng.uniform_int(vocab - 4));
  return g;
}

// Random contiguous partition of [1, T+1) into n intervals.
inline std::vector<ic::model::Interval> random_intervals(ic::num::RandomStream& rng, int64_t T,
                                                         int64_t n) {
  std::vector<int64_t> cuts{1, T + 1};
  for (int64_t i = 0; i < n - 1; ++i) cuts.push_back(2 + rng.uniform_int(T - 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<ic::model::Interval> out;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i] < cuts[i + 1]) out.push_back({cuts[i], cuts[i + 1]});
  return out;
}

// BOS-led token block for n instructions with the given bodies.
inline ic::model::InstructionTokens make_tokens(const std::vector<std::vector<int32_t>>& bodies,
                                                int32_t bos) {
  ic::model::InstructionTokens toks;
  toks.bos_id = bos;
  toks.n_instr = static_cast<int64_t>(bodies.size());
  for (size_t i = 0; i < bodies.size(); ++i) {
    toks.ids.push_back(bos);
    toks.instr_of.push_back(static_cast<int32_t>(i));
    toks.pos_of.push_back(0);
    for (size_t j = 0; j < bodies[i].size(); ++j) {
      toks.ids.push_back(bodies[i][j]);
      toks.instr_of.push_back(static_cast<int32_t>(i));
      toks.pos_of.push_back(static_cast<int32_t>(j + 1));
    }
  }
  return toks;
}

}  // namespace ic::testsupport
