#include "ic/eval/rollout.hpp"

#include <cmath>

#include "ic/error.hpp"

namespace ic::eval {

using namespace ic::model;
using namespace ic::num;
using ic::data::Vocabulary;

int32_t window_from_config(const ModelConfig& mc, const world::RecipeGraph& recipes) {
  const int64_t items = static_cast<int64_t>(recipes.all_items().size());
  const int64_t grid_part = mc.obs_tokens - items - (mc.observability == Observability::Full ? 1 : 0);
  const auto side = static_cast<int32_t>(std::llround(std::sqrt(static_cast<double>(grid_part))));
  check(static_cast<int64_t>(side) * side == grid_part,
        "configuration error: observation token count ", mc.obs_tokens,
        " does not match this recipe set");
  return side;
}

namespace {

int32_t argmax_row(const Tensor& logits, int64_t row) {
  const int64_t C = logits.extent(logits.rank() - 1);
  int32_t best = 0;
  double best_v = logits.at_flat(row * C);
  for (int64_t j = 1; j < C; ++j) {
    const double v = logits.at_flat(row * C + j);
    if (v > best_v) {
      best_v = v;
      best = static_cast<int32_t>(j);
    }
  }
  return best;
}

std::string key_of(const world::TaskSpec& task) {
  const auto [item, bucket] = world::task_key(task);
  return item + "#" + std::to_string(bucket);
}

}  // namespace

EpisodeResult rollout_policy(const Model& m, const Vocabulary& vocab, const world::Env& env,
                             const world::TaskSpec& task, int32_t max_steps,
                             bool decode_instructions) {
  EpisodeResult out;
  out.task_key = key_of(task);
  out.task_seed = task.seed;
  out.difficulty = task.difficulty_steps;

  const bool full = m.config().observability == Observability::Full;
  const int32_t side = window_from_config(m.config(), env.recipes);
  world::ObsEncoder enc(env.recipes, task.grid_size, full,
                        full ? world::kDefaultWindow : side);
  if (full)
    check(side == task.grid_size, "configuration error: model grid ", side,
          " vs task grid ", task.grid_size);

  world::WorldState state = world::build_world(env.recipes, task);
  const auto goal_ids = ic::data::tokenize(task.goal_text, vocab);
  ForwardCtx eval;
  std::vector<std::vector<int32_t>> history;
  bool last_was_interact = true;  // decode once at the start

  const int32_t budget = std::min(env.step_budget, max_steps);
  for (int32_t t = 0; t < budget; ++t) {
    history.push_back(enc.observe(state));
    EncoderOutput eo;
    int64_t policy_row = 0;
    if (full) {
      eo = m.encode_state(history.back(), goal_ids, eval);
    } else {
      eo = m.encode_sequence(history, goal_ids, eval);
      policy_row = eo.step_count() - 1;
    }
    if (decode_instructions && last_was_interact) {
      DecoderKeys keys = m.decoder_keys(eo);
      AttentionMask allow = AttentionMask::none(1, keys.keys.extent(0));
      auto ids = m.greedy_decode(keys.keys, allow, Vocabulary::kBos, Vocabulary::kEos,
                                 m.config().max_instr_len - 1);
      out.predicted_instructions.push_back(ic::data::detokenize(ids, vocab));
    }
    const int32_t action = argmax_row(m.policy_logits(eo), policy_row);
    last_was_interact = action == static_cast<int32_t>(world::Action::Interact);
    world::StepResult res =
        world::step(env, state, task.goal_item, world::action_from_int(action));
    state = res.state;
    out.steps_used = t + 1;
    if (res.done) {
      out.success = res.success;
      break;
    }
  }
  return out;
}

EpisodeResult hierarchy_rollout(const Model& high, const Model& low, const Vocabulary& vocab,
                                const world::Env& env, const world::TaskSpec& task,
                                int32_t max_steps,
                                const std::vector<int32_t>* instruction_override) {
  EpisodeResult out;
  out.task_key = key_of(task);
  out.task_seed = task.seed;
  out.difficulty = task.difficulty_steps;
  check(low.config().instruction_context,
        "configuration error: hierarchy executor lacks the instruction block input");

  const int32_t side = window_from_config(high.config(), env.recipes);
  world::ObsEncoder enc(env.recipes, task.grid_size, false, side);
  world::WorldState state = world::build_world(env.recipes, task);
  const auto goal_ids = ic::data::tokenize(task.goal_text, vocab);
  ForwardCtx eval;

  std::vector<std::vector<int32_t>> history;
  history.push_back(enc.observe(state));

  std::vector<int32_t> instructions;
  if (instruction_override) {
    instructions = *instruction_override;
  } else {
    EncoderOutput eo = high.encode_sequence(history, goal_ids, eval);
    DecoderKeys keys = high.decoder_keys(eo);
    AttentionMask allow = AttentionMask::none(1, keys.keys.extent(0));
    instructions = high.greedy_decode(keys.keys, allow, Vocabulary::kBos, Vocabulary::kEos,
                                      high.config().max_instr_len - 1);
  }
  if (static_cast<int64_t>(instructions.size()) > low.config().max_ctx_len)
    instructions.resize(static_cast<size_t>(low.config().max_ctx_len));
  out.predicted_instructions.push_back(ic::data::detokenize(instructions, vocab));

  const int32_t budget = std::min(env.step_budget, max_steps);
  for (int32_t t = 0; t < budget; ++t) {
    if (t > 0) history.push_back(enc.observe(state));
    EncoderOutput eo = low.encode_sequence(history, goal_ids, eval, &instructions);
    const int32_t action = argmax_row(low.policy_logits(eo), eo.step_count() - 1);
    world::StepResult res =
        world::step(env, state, task.goal_item, world::action_from_int(action));
    state = res.state;
    out.steps_used = t + 1;
    if (res.done) {
      out.success = res.success;
      break;
    }
  }
  return out;
}

}  // namespace ic::eval
