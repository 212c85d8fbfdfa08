#include "ic/data/batch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ic/error.hpp"
#include "ic/num/random.hpp"

namespace ic::data {

using ic::num::derive_seed;
using ic::num::RandomStream;

Dataset drop_annotations(const Dataset& dataset, double keep_fraction, uint64_t seed) {
  check(keep_fraction >= 0.0 && keep_fraction <= 1.0,
        "configuration error: keep_fraction must be in [0, 1], got ", keep_fraction);
  const size_t n = dataset.size();
  const auto keep = static_cast<size_t>(std::llround(keep_fraction * static_cast<double>(n)));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  RandomStream rng(derive_seed(seed, "drop-annotations"));
  rng.shuffle(order);
  std::vector<uint8_t> keep_mask(n, 0);
  for (size_t i = 0; i < keep; ++i) keep_mask[order[i]] = 1;
  Dataset out = dataset;
  for (size_t i = 0; i < n; ++i)
    if (!keep_mask[i]) out[i].segments.clear();
  return out;
}

std::vector<Batch> make_batches(const Dataset& dataset, int32_t batch_size, uint64_t seed,
                                int64_t epoch, const world::ObsEncoder& encoder,
                                const Vocabulary& vocab) {
  check(batch_size >= 1, "configuration error: batch_size must be >= 1, got ", batch_size);
  check(!dataset.empty(), "configuration error: empty dataset");
  std::vector<int32_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(derive_seed(seed, "shuffle", static_cast<uint64_t>(epoch)));
  rng.shuffle(order);

  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    Batch b;
    b.size = static_cast<int32_t>(end - start);
    b.obs_tokens = encoder.token_count();
    for (size_t i = start; i < end; ++i) {
      const auto& traj = dataset[static_cast<size_t>(order[i])];
      b.t_max = std::max<int64_t>(b.t_max, traj.length());
      b.goal_max = std::max<int64_t>(b.goal_max,
                                     static_cast<int64_t>(tokenize(traj.goal_text, vocab).size()));
      b.instr_rows_max =
          std::max<int64_t>(b.instr_rows_max, static_cast<int64_t>(traj.segments.size()));
      for (const auto& seg : traj.segments)
        b.instr_len_max = std::max<int64_t>(
            b.instr_len_max, static_cast<int64_t>(tokenize(seg.text, vocab).size()) + 2);
    }

    b.obs.assign(static_cast<size_t>(b.size * b.t_max * b.obs_tokens), Vocabulary::kPad);
    b.actions.assign(static_cast<size_t>(b.size * b.t_max), -1);
    b.goal.assign(static_cast<size_t>(b.size * b.goal_max), Vocabulary::kPad);
    b.instr_tokens.assign(static_cast<size_t>(b.size * b.instr_rows_max * b.instr_len_max),
                          Vocabulary::kPad);
    b.instr_len.assign(static_cast<size_t>(b.size * b.instr_rows_max), 0);
    b.intervals.assign(static_cast<size_t>(b.size * b.instr_rows_max), {});

    for (size_t i = start; i < end; ++i) {
      const int32_t bi = static_cast<int32_t>(i - start);
      const auto& traj = dataset[static_cast<size_t>(order[i])];
      b.sample_index.push_back(order[i]);
      const int64_t T = traj.length();
      b.lengths.push_back(static_cast<int32_t>(T));
      for (int64_t t = 0; t < T; ++t) {
        const auto toks = encoder.tokens(traj.observations[static_cast<size_t>(t)]);
        std::copy(toks.begin(), toks.end(),
                  b.obs.begin() + bi * b.t_max * b.obs_tokens + t * b.obs_tokens);
        b.actions[static_cast<size_t>(bi * b.t_max + t)] = traj.actions[static_cast<size_t>(t)];
      }
      const auto goal_ids = tokenize(traj.goal_text, vocab);
      b.goal_len.push_back(static_cast<int32_t>(goal_ids.size()));
      std::copy(goal_ids.begin(), goal_ids.end(), b.goal.begin() + bi * b.goal_max);
      b.annotated.push_back(traj.annotated() ? 1 : 0);
      b.instr_count.push_back(static_cast<int32_t>(traj.segments.size()));
      for (size_t si = 0; si < traj.segments.size(); ++si) {
        const auto& seg = traj.segments[si];
        std::vector<int32_t> ids{Vocabulary::kBos};
        for (int32_t w : tokenize(seg.text, vocab)) ids.push_back(w);
        ids.push_back(Vocabulary::kEos);
        const auto row = static_cast<size_t>((bi * b.instr_rows_max + static_cast<int64_t>(si)) *
                                             b.instr_len_max);
        std::copy(ids.begin(), ids.end(), b.instr_tokens.begin() + static_cast<long>(row));
        b.instr_len[static_cast<size_t>(bi * b.instr_rows_max + static_cast<int64_t>(si))] =
            static_cast<int32_t>(ids.size());
        b.intervals[static_cast<size_t>(bi * b.instr_rows_max + static_cast<int64_t>(si))] = {
            seg.t_begin, seg.t_end};
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<std::vector<int32_t>> Batch::obs_steps(int32_t b) const {
  std::vector<std::vector<int32_t>> out;
  const int64_t T = lengths[static_cast<size_t>(b)];
  out.reserve(static_cast<size_t>(T));
  for (int64_t t = 0; t < T; ++t) {
    const auto* base = obs.data() + b * t_max * obs_tokens + t * obs_tokens;
    out.emplace_back(base, base + obs_tokens);
  }
  return out;
}

std::vector<int32_t> Batch::goal_ids(int32_t b) const {
  const auto* base = goal.data() + b * goal_max;
  return std::vector<int32_t>(base, base + goal_len[static_cast<size_t>(b)]);
}

std::vector<int32_t> Batch::action_targets(int32_t b) const {
  const auto* base = actions.data() + b * t_max;
  return std::vector<int32_t>(base, base + lengths[static_cast<size_t>(b)]);
}

std::vector<ic::model::Interval> Batch::sample_intervals(int32_t b) const {
  std::vector<ic::model::Interval> out;
  for (int32_t i = 0; i < instr_count[static_cast<size_t>(b)]; ++i)
    out.push_back(intervals[static_cast<size_t>(b * instr_rows_max + i)]);
  return out;
}

Batch::DecoderBlock Batch::decoder_block(int32_t b) const {
  DecoderBlock block;
  block.tokens.bos_id = Vocabulary::kBos;
  block.tokens.n_instr = instr_count[static_cast<size_t>(b)];
  for (int32_t i = 0; i < instr_count[static_cast<size_t>(b)]; ++i) {
    const int32_t len = instr_len[static_cast<size_t>(b * instr_rows_max + i)];
    const auto* row =
        instr_tokens.data() + (b * instr_rows_max + i) * instr_len_max;
    // input: BOS w1..wk ; target: w1..wk EOS
    for (int32_t j = 0; j + 1 < len; ++j) {
      block.tokens.ids.push_back(row[j]);
      block.tokens.instr_of.push_back(i);
      block.tokens.pos_of.push_back(j);
      block.targets.push_back(row[j + 1]);
    }
  }
  return block;
}

}  // namespace ic::data
