#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ic/data/batch.hpp"
#include "ic/error.hpp"

using namespace ic;
using namespace ic::data;
using namespace ic::world;

namespace {

Dataset sample_dataset(int count, uint64_t seed = 5) {
  Env env{RecipeGraph::load_default(), kDefaultStepBudget};
  Dataset out;
  for (int i = 0; i < count; ++i) {
    auto [w, t] = generate_task(env.recipes, seed + static_cast<uint64_t>(i),
                                1 + i % 3, 7);
    out.push_back(oracle_rollout(env, w, t, kDefaultStepBudget));
  }
  return out;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("vocabulary: reserved slots and sorted corpus words") {
  Trajectory t;
  t.goal_text = "craft plank";
  Dataset corpus{t};
  Vocabulary v = Vocabulary::build(corpus);
  CHECK(v.id("<pad>") == 0);
  CHECK(Vocabulary::kBos == 1);
  CHECK(Vocabulary::kEos == 2);
  CHECK(Vocabulary::kUnk == 3);
  CHECK(v.id("craft") == 4);
  CHECK(v.id("plank") == 5);
  CHECK(v.size() == 6);

  // empty strings contribute nothing
  Trajectory empty;
  empty.goal_text = "";
  Vocabulary v2 = Vocabulary::build({empty});
  CHECK(v2.size() == 4);

  // determinism
  Vocabulary v3 = Vocabulary::build(corpus);
  CHECK(v3 == v);
}

TEST_CASE("tokenize: case folding, unknowns, identity round trip") {
  Trajectory t;
  t.goal_text = "craft plank";
  Vocabulary v = Vocabulary::build({t});
  CHECK(tokenize("", v).empty());
  CHECK(tokenize("Craft Plank", v) == tokenize("craft plank", v));
  CHECK(tokenize("craft plank", v) == std::vector<int32_t>{4, 5});
  CHECK(tokenize("craft gizmo", v) == std::vector<int32_t>{4, Vocabulary::kUnk});

  // tokenize . detokenize is the identity on normalized in-vocabulary text
  const std::string text = "craft plank plank craft";
  CHECK(detokenize(tokenize(text, v), v) == text);
}

TEST_CASE("vocabulary file round trip") {
  Dataset corpus = sample_dataset(3);
  Vocabulary v = Vocabulary::build(corpus);
  const std::string path = "test_vocab.txt";
  v.save(path);
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded == v);
  std::remove(path.c_str());
}

TEST_CASE("trajectory serialization round-trips exactly") {
  Dataset data = sample_dataset(6);
  const std::string path = "test_dataset.jsonl";
  write_trajectories(path, data);
  Dataset loaded = read_trajectories(path);
  REQUIRE(loaded.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) CHECK(loaded[i] == data[i]);

  // file-level bit-exactness of write-read-write
  std::stringstream first, second;
  first << std::ifstream(path).rdbuf();
  write_trajectories(path, loaded);
  second << std::ifstream(path).rdbuf();
  CHECK(first.str() == second.str());
  std::remove(path.c_str());
}

TEST_CASE("drop_annotations: exact count, deterministic, actions untouched") {
  Dataset data = sample_dataset(10);
  Dataset kept = drop_annotations(data, 1.0, 3);
  for (size_t i = 0; i < data.size(); ++i) CHECK(kept[i] == data[i]);

  Dataset none = drop_annotations(data, 0.0, 3);
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(none[i].segments.empty());
    CHECK(none[i].actions == data[i].actions);
    CHECK(none[i].observations == data[i].observations);
  }

  Dataset half = drop_annotations(data, 0.5, 3);
  int annotated = 0;
  for (const auto& t : half) annotated += t.annotated() ? 1 : 0;
  CHECK(annotated == 5);
  Dataset half2 = drop_annotations(data, 0.5, 3);
  for (size_t i = 0; i < half.size(); ++i) CHECK(half[i] == half2[i]);

  // property: |annotated(drop(D, p))| == round(p * |D|) for assorted p
  for (double p : {0.0, 0.1, 0.3, 0.52, 0.77, 1.0}) {
    Dataset d = drop_annotations(data, p, 11);
    int got = 0;
    for (const auto& t : d) got += t.annotated() ? 1 : 0;
    CHECK(got == static_cast<int>(std::llround(p * static_cast<double>(data.size()))));
  }
}

TEST_CASE("make_batches: epoch partition, padding, determinism") {
  Env env{RecipeGraph::load_default(), kDefaultStepBudget};
  Dataset data = sample_dataset(11);
  data = drop_annotations(data, 0.7, 5);
  Vocabulary vocab = Vocabulary::build(data);
  ObsEncoder enc(env.recipes, 7, false, kDefaultWindow);

  auto batches = make_batches(data, 4, 42, 0, enc, vocab);
  CHECK(batches.size() == 3);  // 4 + 4 + 3

  std::set<int32_t> seen;
  for (const auto& b : batches)
    for (int32_t idx : b.sample_index) {
      CHECK(seen.count(idx) == 0);
      seen.insert(idx);
    }
  CHECK(seen.size() == data.size());

  // padded action positions are ignore-marked
  for (const auto& b : batches)
    for (int32_t bi = 0; bi < b.size; ++bi)
      for (int64_t t = b.lengths[static_cast<size_t>(bi)]; t < b.t_max; ++t)
        CHECK(b.actions[static_cast<size_t>(bi * b.t_max + t)] == -1);

  auto batches2 = make_batches(data, 4, 42, 0, enc, vocab);
  for (size_t i = 0; i < batches.size(); ++i)
    CHECK(batches2[i].sample_index == batches[i].sample_index);
  auto batches_e1 = make_batches(data, 4, 42, 1, enc, vocab);
  bool same_order = true;
  for (size_t i = 0; i < batches.size(); ++i)
    same_order = same_order && batches_e1[i].sample_index == batches[i].sample_index;
  CHECK_FALSE(same_order);

  // reconstruction helpers give back the original per-sample data
  const auto& b0 = batches[0];
  for (int32_t bi = 0; bi < b0.size; ++bi) {
    const auto& traj = data[static_cast<size_t>(b0.sample_index[static_cast<size_t>(bi)])];
    CHECK(b0.action_targets(bi) == traj.actions);
    CHECK(b0.obs_steps(bi).size() == traj.observations.size());
    CHECK(b0.goal_ids(bi) == tokenize(traj.goal_text, vocab));
    auto block = b0.decoder_block(bi);
    if (!traj.annotated()) {
      CHECK(block.tokens.ids.empty());
      CHECK(b0.annotated[static_cast<size_t>(bi)] == 0);
    } else {
      CHECK(block.tokens.n_instr == static_cast<int64_t>(traj.segments.size()));
      // targets end each instruction with EOS
      int64_t row = 0;
      for (const auto& seg : traj.segments) {
        const auto words = tokenize(seg.text, vocab);
        row += static_cast<int64_t>(words.size());
        CHECK(block.targets[static_cast<size_t>(row)] == Vocabulary::kEos);
        row += 1;
      }
    }
  }
}

}  // TEST_SUITE
