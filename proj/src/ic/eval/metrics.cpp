#include "ic/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ic/error.hpp"

namespace ic::eval {

using namespace ic::num;
using namespace ic::model;
using ic::data::Vocabulary;

double success_rate(const std::vector<EpisodeResult>& results) {
  check(!results.empty(), "empty-input error: success_rate of no episodes");
  int64_t wins = 0;
  for (const auto& r : results) wins += r.success ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(results.size());
}

double token_accuracy(const std::vector<int32_t>& predicted, const std::vector<int32_t>& target,
                      int32_t pad_id) {
  check(predicted.size() == target.size(),
        "shape mismatch: token_accuracy needs aligned sequences, got ", predicted.size(),
        " vs ", target.size());
  int64_t hit = 0, live = 0;
  for (size_t i = 0; i < target.size(); ++i) {
    if (target[i] == pad_id) continue;
    ++live;
    hit += predicted[i] == target[i] ? 1 : 0;
  }
  check(live > 0, "empty-input error: no non-pad target positions");
  return static_cast<double>(hit) / static_cast<double>(live);
}

namespace {
std::map<std::vector<int32_t>, int64_t> ngram_counts(const std::vector<int32_t>& s, int32_t n) {
  std::map<std::vector<int32_t>, int64_t> out;
  if (static_cast<int64_t>(s.size()) < n) return out;
  for (size_t i = 0; i + static_cast<size_t>(n) <= s.size(); ++i)
    out[std::vector<int32_t>(s.begin() + static_cast<long>(i),
                             s.begin() + static_cast<long>(i) + n)] += 1;
  return out;
}
}  // namespace

double bleu(const std::vector<int32_t>& hypothesis, const std::vector<int32_t>& reference,
            int32_t max_n) {
  check(!reference.empty(), "empty-input error: bleu needs a nonempty reference");
  if (hypothesis.empty()) return 0.0;
  double log_sum = 0.0;
  int32_t orders = 0;
  for (int32_t n = 1; n <= max_n; ++n) {
    auto hyp = ngram_counts(hypothesis, n);
    auto ref = ngram_counts(reference, n);
    if (hyp.empty() || ref.empty()) continue;  // no possible n-grams at this order
    int64_t clipped = 0, total = 0;
    for (const auto& [gram, count] : hyp) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double geo = std::exp(log_sum / static_cast<double>(orders));
  const double h = static_cast<double>(hypothesis.size());
  const double r = static_cast<double>(reference.size());
  const double bp = h >= r ? 1.0 : std::exp(1.0 - r / h);
  return bp * geo;
}

std::vector<DifficultyRow> difficulty_breakdown(const std::vector<EpisodeResult>& results) {
  std::map<int32_t, DifficultyRow> rows;
  for (const auto& r : results) {
    auto& row = rows[r.difficulty];
    row.difficulty = r.difficulty;
    row.episodes += 1;
    row.successes += r.success ? 1 : 0;
  }
  std::vector<DifficultyRow> out;
  for (const auto& [d, row] : rows) out.push_back(row);
  return out;
}

LanguageMetrics language_metrics(const Model& m, const Vocabulary& vocab, const world::Env& env,
                                 const ic::data::Dataset& heldout, int32_t window) {
  LanguageMetrics out;
  if (heldout.empty()) return out;
  const int32_t grid = heldout.front().grid_size;
  const bool full = m.config().observability == Observability::Full;
  world::ObsEncoder enc(env.recipes, grid, full, window);
  ForwardCtx eval;
  double nll_sum = 0.0;
  int64_t hits = 0;
  double bleu_sum = 0.0;

  auto batches = ic::data::make_batches(heldout, 1, 1, 0, enc, vocab);
  for (const auto& batch : batches) {
    if (!batch.annotated[0]) continue;
    ic::train::LangBlock lb =
        ic::train::lang_block_for_objective(ic::train::Objective::Lang, batch, 0, vocab);
    if (lb.empty()) continue;
    const int64_t T = batch.lengths[0];
    AttentionMask mask = build_instruction_cross_mask(lb.intervals, T, MaskMode::Execution);

    if (!full) {
      EncoderOutput eo = m.encode_sequence(batch.obs_steps(0), batch.goal_ids(0), eval);
      DecoderKeys keys = m.decoder_keys(eo);
      AttentionMask wide = widen_mask(mask, keys.prefix_cols);
      Tensor logits = m.decode_instruction_logits(lb.tokens, keys.keys, wide, eval);
      const int64_t V = logits.extent(1);
      for (size_t j = 0; j < lb.targets.size(); ++j) {
        const int64_t row = static_cast<int64_t>(j);
        // teacher-forced argmax + NLL
        double mx = logits.at_flat(row * V);
        int32_t best = 0;
        for (int64_t v = 1; v < V; ++v) {
          const double x = logits.at_flat(row * V + v);
          if (x > mx) {
            mx = x;
            best = static_cast<int32_t>(v);
          }
        }
        double lse = 0.0;
        for (int64_t v = 0; v < V; ++v)
          lse += std::exp(logits.at_flat(row * V + v) - mx);
        nll_sum += std::log(lse) + mx - logits.at_flat(row * V + lb.targets[j]);
        hits += best == lb.targets[j] ? 1 : 0;
        out.tokens += 1;
      }
      // greedy per-instruction decodes for BLEU
      for (int64_t i = 0; i < lb.tokens.n_instr; ++i) {
        AttentionMask row_mask;
        row_mask.rows = 1;
        row_mask.cols = wide.cols;
        row_mask.allow.assign(static_cast<size_t>(wide.cols), 0);
        for (int64_t c = 0; c < wide.cols; ++c) row_mask.set(0, c, wide.at(i, c));
        auto decoded = m.greedy_decode(keys.keys, row_mask, Vocabulary::kBos, Vocabulary::kEos,
                                       m.config().max_instr_len - 1);
        std::vector<int32_t> reference;
        for (size_t j = 0; j < lb.targets.size(); ++j)
          if (lb.tokens.instr_of[j] == i && lb.targets[j] != Vocabulary::kEos)
            reference.push_back(lb.targets[j]);
        if (reference.empty()) continue;
        bleu_sum += bleu(decoded, reference);
        out.instructions += 1;
      }
    } else {
      // Markovian: condition each instruction on its onset observation
      const auto obs_steps = batch.obs_steps(0);
      for (int64_t i = 0; i < lb.tokens.n_instr; ++i) {
        const int64_t onset = lb.intervals[static_cast<size_t>(i)].begin - 1;
        EncoderOutput eo =
            m.encode_state(obs_steps[static_cast<size_t>(onset)], batch.goal_ids(0), eval);
        DecoderKeys keys = m.decoder_keys(eo);
        InstructionTokens solo;
        solo.bos_id = lb.tokens.bos_id;
        solo.n_instr = 1;
        std::vector<int32_t> solo_targets;
        for (size_t j = 0; j < lb.tokens.ids.size(); ++j) {
          if (lb.tokens.instr_of[j] != i) continue;
          solo.ids.push_back(lb.tokens.ids[j]);
          solo.instr_of.push_back(0);
          solo.pos_of.push_back(lb.tokens.pos_of[j]);
          solo_targets.push_back(lb.targets[j]);
        }
        AttentionMask allow = AttentionMask::none(1, keys.keys.extent(0));
        Tensor logits = m.decode_instruction_logits(solo, keys.keys, allow, eval);
        const int64_t V = logits.extent(1);
        for (size_t j = 0; j < solo_targets.size(); ++j) {
          const int64_t row = static_cast<int64_t>(j);
          double mx = logits.at_flat(row * V);
          int32_t best = 0;
          for (int64_t v = 1; v < V; ++v) {
            const double x = logits.at_flat(row * V + v);
            if (x > mx) {
              mx = x;
              best = static_cast<int32_t>(v);
            }
          }
          double lse = 0.0;
          for (int64_t v = 0; v < V; ++v)
            lse += std::exp(logits.at_flat(row * V + v) - mx);
          nll_sum += std::log(lse) + mx - logits.at_flat(row * V + solo_targets[j]);
          hits += best == solo_targets[j] ? 1 : 0;
          out.tokens += 1;
        }
        auto decoded = m.greedy_decode(keys.keys, allow, Vocabulary::kBos, Vocabulary::kEos,
                                       m.config().max_instr_len - 1);
        std::vector<int32_t> reference(solo_targets.begin(), solo_targets.end() - 1);
        if (!reference.empty()) {
          bleu_sum += bleu(decoded, reference);
          out.instructions += 1;
        }
      }
    }
  }
  if (out.tokens > 0) {
    out.token_accuracy = static_cast<double>(hits) / static_cast<double>(out.tokens);
    out.lang_nll = nll_sum / static_cast<double>(out.tokens);
  }
  if (out.instructions > 0) out.bleu = bleu_sum / static_cast<double>(out.instructions);
  return out;
}

}  // namespace ic::eval
