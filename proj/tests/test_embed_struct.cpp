// Copyright 2026 The NNReverse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "nnreverse/embed_struct.hpp"
#include "nnreverse/error.hpp"
#include "nnreverse/synth.hpp"

namespace nnreverse {
namespace {

std::multiset<WlToken> Multiset(const std::vector<WlToken>& t) { return {t.begin(), t.end()}; }

std::string SortedOpcodes(std::vector<std::string> ops) {
  std::sort(ops.begin(), ops.end());
  std::string s = "wl0(";
  for (const auto& o : ops) s += o + ",";
  return s + ")";
}

std::string Join(std::vector<uint64_t> labels) {
  std::sort(labels.begin(), labels.end());
  std::string s;
  for (uint64_t l : labels) s += Hex64(l) + ",";
  return s;
}

AsmFunction Path3() {
  AsmFunction f;
  f.function_id = "path";
  f.label = "k";
  f.blocks = {{0, {"push rbx", "mov rax, rbx"}, false},
              {1, {"add rax, 1", "cmp rax, rcx", "jl 0x10"}, false},
              {2, {"pop rbx", "ret"}, false}};
  f.edges = {{0, 1}, {1, 2}};
  return f;
}

TEST_CASE("single block at depth zero") {
  AsmFunction f;
  f.function_id = "r";
  f.blocks = {{0, {"ret"}, false}};
  auto t = WlTokens(f, 0);
  REQUIRE(t.size() == 1);
  CHECK(t[0].depth == 0);
  CHECK(t[0].key == Fnv1a64("wl0(ret,)"));
}

TEST_CASE("three-node path relabeling by hand") {
  AsmFunction f = Path3();
  auto t = WlTokens(f, 1);
  REQUIRE(t.size() == 6);
  uint64_t a = Fnv1a64(SortedOpcodes({"push", "mov"}));
  uint64_t b = Fnv1a64(SortedOpcodes({"add", "cmp", "jl"}));
  uint64_t c = Fnv1a64(SortedOpcodes({"pop", "ret"}));
  auto next = [](uint64_t self, std::vector<uint64_t> succ, std::vector<uint64_t> pred) {
    return Fnv1a64("wl1(" + Hex64(self) + "|s:" + Join(succ) + "|p:" + Join(pred) + ")");
  };
  std::multiset<WlToken> expected = {{a, 0}, {b, 0}, {c, 0}, {next(a, {b}, {}), 1},
                                     {next(b, {c}, {a}), 1}, {next(c, {}, {b}), 1}};
  CHECK(Multiset(t) == expected);
  std::set<uint64_t> depth1;
  for (const auto& tok : t) {
    if (tok.depth == 1) depth1.insert(tok.key);
  }
  CHECK(depth1.size() == 3);
}

TEST_CASE("direction matters") {
  AsmFunction f = Path3();
  AsmFunction g = f;
  g.edges = {{1, 0}, {2, 1}};
  CHECK(Multiset(WlTokens(f, 2)) != Multiset(WlTokens(g, 2)));
}

TEST_CASE("isomorphism invariance and token count") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    size_t n = 1 + rng.Below(12);
    AsmFunction f = testing::RandomCfgFunction(rng, n, "g" + std::to_string(trial));
    AsmFunction g = testing::PermuteBlocks(f, rng);
    int h = static_cast<int>(rng.Below(4));
    auto tf = WlTokens(f, h);
    CHECK(tf.size() == (static_cast<size_t>(h) + 1) * n);
    CHECK(Multiset(tf) == Multiset(WlTokens(g, h)));
  }
}

Corpus SmallSynth(double noise, int classes = 3, int per_class = 6) {
  SynthSpec spec;
  spec.classes = classes;
  spec.per_class = per_class;
  spec.noise_rate = noise;
  return GenerateSyntheticCorpus(spec);
}

WlConfig SmallConfig() {
  WlConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 10;
  cfg.infer_epochs = 20;
  return cfg;
}

TEST_CASE("structure gradient matches central differences") {
  Corpus c = SmallSynth(0.0, 4, 2);
  WlConfig cfg = SmallConfig();
  cfg.epochs = 0;
  StructModel base = TrainStructModel(c, cfg);
  REQUIRE(base.wl_vocab.size() >= 8);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    StructModel m = base;
    Rng rng(seed);
    m.out_subgraphs.FillUniform(rng, -1, 1);
    std::vector<float> gv(16);
    for (float& x : gv) x = static_cast<float>(rng.Uniform(-1, 1));
    const int32_t target = 0;
    const std::vector<int32_t> negatives = {1, 2, 3, 4, 5};
    const double lr = 0.5;
    const float eps = 2e-3f;

    std::vector<float> probe = gv;
    auto num_h = testing::NumericGradient(std::span<float>(probe), [&] { return StructExampleLoss(m, probe, target, negatives); }, eps);
    StructModel updated = m;
    std::vector<float> stepped = gv;
    StructExampleStep(updated, stepped, target, negatives, lr, true);
    std::vector<double> ana_h(16);
    for (size_t i = 0; i < 16; ++i) ana_h[i] = -(static_cast<double>(stepped[i]) - gv[i]) / lr;
    CHECK(testing::RelativeError(ana_h, num_h) < 1e-4);

    for (int32_t r : {0, 1, 4}) {
      StructModel pm = m;
      auto num = testing::NumericGradient(pm.out_subgraphs.Row(static_cast<size_t>(r)),
                         [&] { return StructExampleLoss(pm, gv, target, negatives); }, eps);
      std::vector<double> ana(16);
      for (size_t i = 0; i < 16; ++i) {
        ana[i] = -(static_cast<double>(updated.out_subgraphs.Row(r)[i]) - m.out_subgraphs.Row(r)[i]) / lr;
      }
      CHECK(testing::RelativeError(ana, num) < 1e-4);
    }

    // Frozen step leaves out_subgraphs untouched but moves the graph vector identically.
    StructModel frozen = m;
    std::vector<float> fv = gv;
    StructExampleStep(frozen, fv, target, negatives, lr, false);
    CHECK(frozen.out_subgraphs == m.out_subgraphs);
    CHECK(fv == stepped);
  }
}

TEST_CASE("zero epochs and determinism") {
  Corpus c = SmallSynth(0.1);
  WlConfig cfg = SmallConfig();
  cfg.epochs = 0;
  StructModel init = TrainStructModel(c, cfg);
  Rng rng(cfg.seed);
  Matrix gv(c.functions.size(), 16);
  gv.FillUniform(rng, -0.5 / 16, 0.5 / 16);
  CHECK(init.graph_vectors == gv);
  CHECK(init.out_subgraphs == Matrix(init.wl_vocab.size(), 16));

  StructModel a = TrainStructModel(c, SmallConfig());
  StructModel b = TrainStructModel(c, SmallConfig());
  CHECK(a == b);
  CHECK(a.AllFinite());
  for (size_t i = 1; i < a.wl_vocab.size(); ++i) CHECK(a.wl_vocab[i - 1].count >= a.wl_vocab[i].count);
}

TEST_CASE("zero-noise classes separate and re-inference agrees with storage") {
  Corpus c = SmallSynth(0.0, 4, 5);
  WlConfig cfg;
  StructModel m = TrainStructModel(c, cfg);
  for (const auto& f : c.functions) {
    auto self = *m.StoredVector(f.function_id);
    auto re = InferStructVector(m, f);
    CHECK_FALSE(re.unknown_tokens);
    CHECK(re.dropped_tokens == 0);
    CHECK(testing::CosineF(re.vector, self) >= 0.9);
    for (const auto& g : c.functions) {
      if (g.function_id == f.function_id) continue;
      for (const auto& u : c.functions) {
        if (u.label == f.label || g.label != f.label) continue;
        CHECK(testing::CosineF(self, *m.StoredVector(g.function_id)) >
              testing::CosineF(self, *m.StoredVector(u.function_id)));
      }
    }
  }
}

TEST_CASE("unknown graphs fall back to the seeded initialization") {
  Corpus c = SmallSynth(0.0);
  StructModel m = TrainStructModel(c, SmallConfig());
  AsmFunction alien;
  alien.function_id = "alien";
  alien.blocks = {{0, {"hlt"}, false}, {1, {"ud2"}, false}};
  alien.edges = {{0, 1}};
  auto r = InferStructVector(m, alien);
  CHECK(r.unknown_tokens);
  CHECK(r.dropped_tokens == 6);
  CHECK(r.vector == InitialGraphVector(m.config, "alien"));

  StructModel zero = m;
  zero.config.infer_epochs = 0;
  CHECK(InferStructVector(zero, c.functions[0]).vector ==
        InitialGraphVector(zero.config, c.functions[0].function_id));
  CHECK(InferStructVector(m, c.functions[1]).vector == InferStructVector(m, c.functions[1]).vector);
}

TEST_CASE("structure model file round-trips") {
  auto dir = testing::ScratchDir("struct_model");
  Corpus c = SmallSynth(0.1);
  StructModel m = TrainStructModel(c, SmallConfig());
  SaveStructModel(m, dir / "s.bin");
  StructModel back = LoadStructModel(dir / "s.bin");
  CHECK(back == m);
  CHECK(back.Lookup(m.wl_vocab[0].key) == std::optional<int32_t>(0));
  CHECK_THROWS_AS(LoadStructModel(dir / "none.bin"), DataError);
  WlConfig bad;
  bad.iterations = -1;
  CHECK_THROWS_AS(TrainStructModel(c, bad), ConfigError);
}

}  // namespace
}  // namespace nnreverse
