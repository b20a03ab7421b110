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

#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "nnreverse/error.hpp"
#include "nnreverse/reconstruct.hpp"

namespace nnreverse {
namespace {

using nlohmann::json;

json Chain() {
  return {{"nodes", json::array({{{"id", 0}, {"kind", "input"}, {"name", "x"}},
                                 {{"id", 1}, {"kind", "kernel"}, {"symbol", "f_relu"}, {"inputs", {0}}}})},
          {"output_id", 1},
          {"input_shapes", {{"x", {3}}}}};
}

// x -> relu(1) ; x -> softmax(2) ; add(3) ; relu(4)
json Diamond() {
  return {{"nodes",
           json::array({{{"id", 0}, {"kind", "input"}, {"name", "x"}},
                        {{"id", 2}, {"kind", "kernel"}, {"symbol", "s_soft"}, {"inputs", {0}}},
                        {{"id", 1}, {"kind", "kernel"}, {"symbol", "s_relu"}, {"inputs", {0}}},
                        {{"id", 3}, {"kind", "kernel"}, {"symbol", "s_add"}, {"inputs", {1, 2}}},
                        {{"id", 4}, {"kind", "kernel"}, {"symbol", "s_relu"}, {"inputs", {3}}}})},
          {"output_id", 4}};
}

const KernelLabels kDiamondLabels = {{"s_soft", "softmax"}, {"s_relu", "relu"}, {"s_add", "add"}};

TEST_CASE("graph parsing") {
  GraphDescriptor chain = GraphFromJson(Chain());
  CHECK(chain.KernelIds() == std::vector<int64_t>{1});
  CHECK(chain.InputIds() == std::vector<int64_t>{0});
  GraphDescriptor d = GraphFromJson(Diamond());
  CHECK(d.KernelIds().size() == 4);
  CHECK(GraphFromJson(GraphToJson(d)).KernelIds() == d.KernelIds());

  json cyc = Diamond();
  cyc["nodes"][2]["inputs"] = {0, 4};
  try {
    GraphFromJson(cyc);
    FAIL("expected a cycle error");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("cycle") != std::string::npos);
    CHECK(msg.find("->") != std::string::npos);
  }
  json dangling = Diamond();
  dangling["nodes"][3]["inputs"] = {1, 9};
  CHECK_THROWS_AS(GraphFromJson(dangling), DataError);
  json no_out = Diamond();
  no_out.erase("output_id");
  CHECK_THROWS_AS(GraphFromJson(no_out), DataError);
  json dup = Diamond();
  dup["nodes"][1]["id"] = 1;
  CHECK_THROWS_AS(GraphFromJson(dup), DataError);
  json input_with_inputs = Chain();
  input_with_inputs["nodes"][0]["inputs"] = {1};
  CHECK_THROWS_AS(GraphFromJson(input_with_inputs), DataError);
}

TEST_CASE("single relu graph") {
  GraphDescriptor g = GraphFromJson(Chain());
  Tensor x({3}, {-1, 0, 2});
  ReconstructResult r = ReconstructRun(g, {}, {{"f_relu", "relu"}}, x);
  CHECK(r.output.data == std::vector<float>{0, 0, 2});
  CHECK(r.summary.steps.size() == 1);
  CHECK(r.summary.steps[0].kernel_type == "relu");
  CHECK_THROWS_AS(ReconstructRun(g, {}, {}, x), DataError);
  CHECK_THROWS_AS(ReconstructRun(g, {}, {{"f_relu", "relu"}}, Tensor({4})), DataError);
}

TEST_CASE("diamond respects dependencies and both schedules agree") {
  GraphDescriptor g = GraphFromJson(Diamond());
  Tensor x({1, 4}, {0.5f, -2, 3, 0});
  ReconstructResult lo = ReconstructRun(g, {}, kDiamondLabels, x, SchedulePolicy::kLowestIdFirst);
  ReconstructResult hi = ReconstructRun(g, {}, kDiamondLabels, x, SchedulePolicy::kHighestIdFirst);
  CHECK(lo.output == hi.output);
  for (const auto* r : {&lo, &hi}) {
    std::map<int64_t, size_t> pos;
    for (size_t i = 0; i < r->summary.steps.size(); ++i) pos[r->summary.steps[i].node_id] = i;
    REQUIRE(pos.size() == 4);
    CHECK(pos[1] < pos[3]);
    CHECK(pos[2] < pos[3]);
    CHECK(pos[3] < pos[4]);
    for (const auto& [id, count] : r->executions) CHECK(count == 1);
    CHECK(r->executions.size() == 4);
  }
  CHECK(lo.summary.steps[0].node_id == 1);
  CHECK(hi.summary.steps[0].node_id == 2);
  Tensor relu = RunKernel("relu", std::vector<Tensor>{x});
  Tensor soft = RunKernel("softmax", std::vector<Tensor>{x});
  Tensor want = RunKernel("relu", std::vector<Tensor>{RunKernel("add", std::vector<Tensor>{relu, soft})});
  CHECK(lo.output == want);
}

TEST_CASE("hand convolution example") {
  Tensor x({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
  Tensor k({1, 1, 2, 2}, std::vector<float>(4, 1.0f));
  Tensor y = RunKernel("conv2d", std::vector<Tensor>{x, k});
  CHECK(y.shape == Shape{1, 1, 2, 2});
  CHECK(y.data == std::vector<float>(4, 4.0f));
  Tensor s = RunKernel("softmax", std::vector<Tensor>{Tensor({2}, {0, 0})});
  CHECK(s.data == std::vector<float>{0.5f, 0.5f});
}

TEST_CASE("small cnn matches the straight-line oracle") {
  testing::SmallCnn cnn = testing::MakeSmallCnn(17);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Tensor x = testing::RandomTensor(rng, {1, 1, 8, 8});
    ReconstructResult r = ReconstructRun(cnn.graph, cnn.params, cnn.labels, x);
    auto want = testing::SmallCnnOracle(cnn.params, x);
    REQUIRE(r.output.shape == Shape{1, 10});
    for (size_t k = 0; k < 10; ++k) CHECK(std::abs(r.output.data[k] - want[k]) <= 1e-5);
    ReconstructResult hi = ReconstructRun(cnn.graph, cnn.params, cnn.labels, x,
                                          SchedulePolicy::kHighestIdFirst);
    CHECK(hi.output == r.output);
  }
  ReconstructResult r = ReconstructRun(cnn.graph, cnn.params, cnn.labels, Tensor({1, 1, 8, 8}));
  std::vector<Shape> outs;
  for (const auto& s : r.summary.steps) outs.push_back(s.output_shape);
  CHECK(outs == std::vector<Shape>{{1, 4, 8, 8}, {1, 4, 8, 8}, {1, 4, 4, 4}, {1, 64}, {1, 10}, {1, 10}});
  json summary = r.summary.ToJson();
  CHECK(summary["steps"].size() == 6);
}

TEST_CASE("missing inputs are reported") {
  testing::SmallCnn cnn = testing::MakeSmallCnn(1);
  Tensor x({1, 1, 8, 8});
  ParamStore partial = cnn.params;
  partial.erase("fc_w");
  CHECK_THROWS_AS(ReconstructRun(cnn.graph, partial, cnn.labels, x), DataError);
  KernelLabels wrong = cnn.labels;
  wrong["tvmgen_default_fused_nn_dense"] = "conv2d";
  try {
    ReconstructRun(cnn.graph, cnn.params, wrong, x);
    FAIL("expected a kernel error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("node 9") != std::string::npos);
  }
  KernelLabels unsupported = cnn.labels;
  unsupported["tvmgen_default_fused_nn_relu"] = "lstm";
  CHECK_THROWS_AS(ReconstructRun(cnn.graph, cnn.params, unsupported, x), DataError);
}

TEST_CASE("accuracy loss") {
  testing::SmallCnn cnn = testing::MakeSmallCnn(5);
  Rng rng(6);
  std::vector<ReferencePair> refs;
  for (int i = 0; i < 10; ++i) {
    Tensor x = testing::RandomTensor(rng, {1, 1, 8, 8});
    refs.push_back({x, ReconstructRun(cnn.graph, cnn.params, cnn.labels, x).output});
  }
  AccuracyLossReport same = AccuracyLoss(cnn.graph, cnn.params, cnn.labels, refs);
  CHECK(same.inputs == 10);
  CHECK(same.loss == 0.0);
  CHECK(same.max_abs_deviation == 0.0);

  KernelLabels corrupted = cnn.labels;
  corrupted["tvmgen_default_fused_nn_relu"] = "softmax";
  AccuracyLossReport bad = AccuracyLoss(cnn.graph, cnn.params, corrupted, refs);
  CHECK(bad.max_abs_deviation > 0.0);

  refs[0].output = Tensor({1, 3});
  CHECK_THROWS_AS(AccuracyLoss(cnn.graph, cnn.params, cnn.labels, refs), DataError);
}

}  // namespace
}  // namespace nnreverse
