#pragma once
#include <optional>

#include "ic/train/trainer.hpp"

namespace ic::train {

// Instruction-predictability probe: only the language decoder's parameters
// train; the encoder stays frozen (its forward runs off-tape, so its delta is
// exactly zero). Goal-only conditioning encodes the goal tokens alone; the
// goal+observations variant uses the normal interval-masked conditioning.
struct ProbeConfig {
  int64_t steps = 400;
  int32_t batch_size = 16;
  double learning_rate = 3e-4;
  uint64_t seed = 0;
  double val_fraction = 0.15;
  int32_t window = ic::world::kDefaultWindow;
  ic::model::MaskMode mask_mode = ic::model::MaskMode::Execution;
};

struct ProbeResult {
  double token_accuracy = 0.0;  // teacher-forced next-token accuracy on held-out data
  int64_t val_tokens = 0;
  ic::model::ModelParams params;  // frozen encoder + trained decoder
};

// encoder_params: a trained checkpoint to probe, or nullopt for a fresh
// frozen encoder. The decoder is re-initialized in both conditions. mc and
// vocab must match the checkpoint when one is given.
ProbeResult probe_train(const ProbeConfig& pc, const ic::data::Dataset& dataset,
                        bool with_observations, const ic::model::ModelConfig& mc,
                        const ic::data::Vocabulary& vocab, const world::Env& env,
                        const std::optional<ic::model::ModelParams>& encoder_params);

}  // namespace ic::train
