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

#ifndef NNREVERSE_RECONSTRUCT_HPP_
#define NNREVERSE_RECONSTRUCT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "nnreverse/tensor.hpp"

namespace nnreverse {

enum class NodeKind { kInput, kParam, kKernel };

struct GraphNode {
  int64_t id = 0;
  NodeKind kind = NodeKind::kKernel;
  std::string symbol;  // kernel nodes: binary function implementing the op
  std::string name;    // input/param nodes: tensor name
  std::vector<int64_t> inputs;
  nlohmann::json attrs = nlohmann::json::object();
};

// Computational graph of a compiled model.
struct GraphDescriptor {
  std::vector<GraphNode> nodes;
  int64_t output_id = 0;
  std::map<std::string, Shape> input_shapes;

  const GraphNode& Node(int64_t id) const;
  std::vector<int64_t> KernelIds() const;
  std::vector<int64_t> InputIds() const;

  std::unordered_map<int64_t, size_t> index;
};

// Validates references, node-kind rules and acyclicity. A cycle is reported
// with the edge that closes it.
GraphDescriptor GraphFromJson(const nlohmann::json& j);
nlohmann::json GraphToJson(const GraphDescriptor& g);
GraphDescriptor ParseGraph(const std::filesystem::path& path);

using ParamStore = TensorMap;
using KernelLabels = std::map<std::string, std::string>;  // symbol -> kernel type

struct ArchitectureStep {
  int64_t node_id = 0;
  std::string symbol;
  std::string kernel_type;
  std::vector<Shape> input_shapes;
  Shape output_shape;
};

struct ArchitectureSummary {
  std::vector<ArchitectureStep> steps;  // execution order
  nlohmann::json ToJson() const;
};

enum class SchedulePolicy { kLowestIdFirst, kHighestIdFirst };

struct ReconstructResult {
  Tensor output;
  ArchitectureSummary summary;
  std::map<int64_t, int> executions;  // per kernel node
};

// Worklist execution: while kernel nodes remain, pick (by policy) one whose
// inputs are all computed, look up the kernel type of its symbol, run it and
// retire it. Returns the output node's tensor.
ReconstructResult ReconstructRun(const GraphDescriptor& g, const ParamStore& params,
                                 const KernelLabels& labels, const TensorMap& inputs,
                                 SchedulePolicy policy = SchedulePolicy::kLowestIdFirst);
// Convenience for graphs with a single input node.
ReconstructResult ReconstructRun(const GraphDescriptor& g, const ParamStore& params,
                                 const KernelLabels& labels, const Tensor& input,
                                 SchedulePolicy policy = SchedulePolicy::kLowestIdFirst);

struct ReferencePair {
  Tensor input;
  Tensor output;
};

struct AccuracyLossReport {
  size_t inputs = 0;
  size_t disagreements = 0;
  double loss = 0.0;  // disagreements / inputs
  double max_abs_deviation = 0.0;

  nlohmann::json ToJson() const;
};

// Argmax is taken along the last axis of each output row; an input counts as
// a disagreement when any row's argmax differs.
AccuracyLossReport AccuracyLoss(const GraphDescriptor& g, const ParamStore& params,
                                const KernelLabels& labels,
                                const std::vector<ReferencePair>& references);

}  // namespace nnreverse

#endif  // NNREVERSE_RECONSTRUCT_HPP_
