#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ic/data/batch.hpp"
#include "ic/train/trainer.hpp"

namespace ic::eval {

struct EpisodeResult {
  std::string task_key;  // "<goal_item>#<bucket>"
  uint64_t task_seed = 0;
  bool success = false;
  int32_t steps_used = 0;
  int32_t difficulty = 1;
  std::vector<std::string> predicted_instructions;
};

double success_rate(const std::vector<EpisodeResult>& results);  // empty -> error

// Teacher-forced exact-match fraction over non-pad target positions.
double token_accuracy(const std::vector<int32_t>& predicted, const std::vector<int32_t>& target,
                      int32_t pad_id);

// Sentence BLEU: clipped n-gram precisions (orders where either side has no
// n-grams are skipped), geometric mean, brevity penalty exp(1 - r/h) when the
// hypothesis is shorter. Empty hypothesis scores 0.
double bleu(const std::vector<int32_t>& hypothesis, const std::vector<int32_t>& reference,
            int32_t max_n = 4);

struct DifficultyRow {
  int32_t difficulty = 0;
  int64_t successes = 0;
  int64_t episodes = 0;
  double rate() const { return episodes ? static_cast<double>(successes) / static_cast<double>(episodes) : 0.0; }
};
std::vector<DifficultyRow> difficulty_breakdown(const std::vector<EpisodeResult>& results);

// Teacher-forced language quality on held-out oracle trajectories. The cross
// mask is always the execution mask: both masked- and unmasked-trained models
// are measured under the test-time conditioning.
struct LanguageMetrics {
  double token_accuracy = 0.0;
  double bleu = 0.0;      // mean sentence BLEU of greedy decodes
  double lang_nll = 0.0;  // mean next-token NLL
  int64_t tokens = 0;
  int64_t instructions = 0;
};
LanguageMetrics language_metrics(const ic::model::Model& m, const ic::data::Vocabulary& vocab,
                                 const world::Env& env, const ic::data::Dataset& heldout,
                                 int32_t window);

}  // namespace ic::eval
