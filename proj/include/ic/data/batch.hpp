#pragma once
#include <vector>

#include "ic/data/trajectory_io.hpp"
#include "ic/data/vocab.hpp"
#include "ic/model/net.hpp"
#include "ic/world/world.hpp"

namespace ic::data {

// Drops instruction segments from all but round(keep_fraction * n)
// trajectories, chosen deterministically from the seed. Actions and
// observations are untouched.
Dataset drop_annotations(const Dataset& dataset, double keep_fraction, uint64_t seed);

// Padded batch. Padded positions hold PAD (or -1 for action targets) and are
// excluded from every loss; `lengths` and the per-instruction counts are the
// compact padding masks.
struct Batch {
  int32_t size = 0;
  int64_t t_max = 0, obs_tokens = 0, goal_max = 0, instr_rows_max = 0, instr_len_max = 0;
  std::vector<int32_t> sample_index;  // dataset indices
  std::vector<int32_t> lengths;       // true T per sample
  std::vector<int32_t> obs;           // [B, t_max, obs_tokens], PAD fill
  std::vector<int32_t> actions;       // [B, t_max], -1 beyond the true length
  std::vector<int32_t> goal;          // [B, goal_max], PAD fill
  std::vector<int32_t> goal_len;
  std::vector<uint8_t> annotated;
  std::vector<int32_t> instr_count;           // instructions per sample
  std::vector<int32_t> instr_len;             // [B, instr_rows_max], tokens incl BOS/EOS
  std::vector<int32_t> instr_tokens;          // [B, instr_rows_max, instr_len_max]
  std::vector<ic::model::Interval> intervals; // [B, instr_rows_max]

  std::vector<std::vector<int32_t>> obs_steps(int32_t b) const;
  std::vector<int32_t> goal_ids(int32_t b) const;
  std::vector<int32_t> action_targets(int32_t b) const;  // true length
  std::vector<ic::model::Interval> sample_intervals(int32_t b) const;
  // decoder input (BOS-led) plus shifted next-token targets per instruction
  struct DecoderBlock {
    ic::model::InstructionTokens tokens;
    std::vector<int32_t> targets;
  };
  DecoderBlock decoder_block(int32_t b) const;
};

// Deterministic per-epoch shuffle; every trajectory appears exactly once.
std::vector<Batch> make_batches(const Dataset& dataset, int32_t batch_size, uint64_t seed,
                                int64_t epoch, const world::ObsEncoder& encoder,
                                const Vocabulary& vocab);

}  // namespace ic::data
