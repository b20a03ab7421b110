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

#include "nnreverse/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>

#include "nnreverse/error.hpp"

namespace nnreverse {

using nlohmann::json;

const GraphNode& GraphDescriptor::Node(int64_t id) const {
  auto it = index.find(id);
  if (it == index.end()) throw DataError("graph has no node " + std::to_string(id));
  return nodes[it->second];
}

std::vector<int64_t> GraphDescriptor::KernelIds() const {
  std::vector<int64_t> ids;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::kKernel) ids.push_back(n.id);
  }
  return ids;
}

std::vector<int64_t> GraphDescriptor::InputIds() const {
  std::vector<int64_t> ids;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::kInput) ids.push_back(n.id);
  }
  return ids;
}

namespace {

NodeKind ParseKind(const std::string& kind) {
  if (kind == "input") return NodeKind::kInput;
  if (kind == "param") return NodeKind::kParam;
  if (kind == "kernel") return NodeKind::kKernel;
  throw DataError("unknown node kind '" + kind + "'");
}

const char* KindName(NodeKind kind) {
  switch (kind) {
    case NodeKind::kInput:
      return "input";
    case NodeKind::kParam:
      return "param";
    case NodeKind::kKernel:
      return "kernel";
  }
  return "kernel";
}

void CheckAcyclic(const GraphDescriptor& g) {
  enum class Color { kWhite, kGrey, kBlack };
  std::vector<Color> color(g.nodes.size(), Color::kWhite);
  // Iterative DFS along input edges (node -> its inputs).
  for (size_t root = 0; root < g.nodes.size(); ++root) {
    if (color[root] != Color::kWhite) continue;
    std::vector<std::pair<size_t, size_t>> stack = {{root, 0}};
    color[root] = Color::kGrey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& inputs = g.nodes[v].inputs;
      if (next == inputs.size()) {
        color[v] = Color::kBlack;
        stack.pop_back();
        continue;
      }
      size_t u = g.index.at(inputs[next++]);
      if (color[u] == Color::kGrey) {
        throw DataError("graph has a cycle: edge " + std::to_string(g.nodes[u].id) + " -> " +
                        std::to_string(g.nodes[v].id) + " closes it");
      }
      if (color[u] == Color::kWhite) {
        color[u] = Color::kGrey;
        stack.emplace_back(u, 0);
      }
    }
  }
}

}  // namespace

GraphDescriptor GraphFromJson(const json& j) {
  GraphDescriptor g;
  try {
    for (const auto& jn : j.at("nodes")) {
      GraphNode n;
      n.id = jn.at("id").get<int64_t>();
      n.kind = ParseKind(jn.at("kind").get<std::string>());
      n.symbol = jn.value("symbol", "");
      n.name = jn.value("name", "");
      n.inputs = jn.value("inputs", std::vector<int64_t>{});
      if (auto a = jn.find("attrs"); a != jn.end() && a->is_object()) n.attrs = *a;
      g.nodes.push_back(std::move(n));
    }
    if (!j.contains("output_id")) throw DataError("graph is missing output_id");
    g.output_id = j.at("output_id").get<int64_t>();
    if (auto s = j.find("input_shapes"); s != j.end()) {
      g.input_shapes = s->get<std::map<std::string, Shape>>();
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad graph descriptor: ") + e.what());
  }
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (!g.index.emplace(g.nodes[i].id, i).second) {
      throw DataError("duplicate node id " + std::to_string(g.nodes[i].id));
    }
  }
  for (const auto& n : g.nodes) {
    const std::string where = "node " + std::to_string(n.id) + ": ";
    if (n.kind != NodeKind::kKernel && !n.inputs.empty()) {
      throw DataError(where + KindName(n.kind) + " nodes take no inputs");
    }
    if (n.kind == NodeKind::kKernel) {
      if (n.inputs.empty()) throw DataError(where + "kernel node without inputs");
      if (n.symbol.empty()) throw DataError(where + "kernel node without symbol");
    } else if (n.name.empty()) {
      throw DataError(where + KindName(n.kind) + " node without name");
    }
    for (int64_t in : n.inputs) {
      if (!g.index.count(in)) {
        throw DataError(where + "dangling reference to node " + std::to_string(in));
      }
    }
  }
  if (!g.index.count(g.output_id)) {
    throw DataError("output_id " + std::to_string(g.output_id) + " does not name a node");
  }
  CheckAcyclic(g);
  return g;
}

json GraphToJson(const GraphDescriptor& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    json jn = {{"id", n.id}, {"kind", KindName(n.kind)}, {"inputs", n.inputs}, {"attrs", n.attrs}};
    if (!n.symbol.empty()) jn["symbol"] = n.symbol;
    if (!n.name.empty()) jn["name"] = n.name;
    nodes.push_back(std::move(jn));
  }
  return {{"nodes", std::move(nodes)}, {"output_id", g.output_id}, {"input_shapes", g.input_shapes}};
}

GraphDescriptor ParseGraph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
  return GraphFromJson(j);
}

json ArchitectureSummary::ToJson() const {
  json out = json::array();
  for (const auto& s : steps) {
    out.push_back({{"node_id", s.node_id},
                   {"symbol", s.symbol},
                   {"kernel_type", s.kernel_type},
                   {"input_shapes", s.input_shapes},
                   {"output_shape", s.output_shape}});
  }
  return {{"version", 1}, {"steps", std::move(out)}};
}

ReconstructResult ReconstructRun(const GraphDescriptor& g, const ParamStore& params,
                                 const KernelLabels& labels, const TensorMap& inputs,
                                 SchedulePolicy policy) {
  std::vector<std::optional<Tensor>> values(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    if (n.kind == NodeKind::kParam) {
      auto it = params.find(n.name);
      if (it == params.end()) throw DataError("missing param '" + n.name + "'");
      values[i] = it->second;
    } else if (n.kind == NodeKind::kInput) {
      auto it = inputs.find(n.name);
      if (it == inputs.end()) throw DataError("missing input tensor '" + n.name + "'");
      auto declared = g.input_shapes.find(n.name);
      if (declared != g.input_shapes.end() && declared->second != it->second.shape) {
        throw DataError("input '" + n.name + "': expected shape " + ShapeString(declared->second) +
                        ", got " + ShapeString(it->second.shape));
      }
      values[i] = it->second;
    }
  }
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::kKernel && !labels.count(n.symbol)) {
      throw DataError("no kernel type inferred for symbol '" + n.symbol + "'");
    }
  }

  ReconstructResult result;
  std::set<int64_t> pending;
  for (int64_t id : g.KernelIds()) pending.insert(id);
  auto ready = [&](int64_t id) {
    for (int64_t in : g.Node(id).inputs) {
      if (!values[g.index.at(in)]) return false;
    }
    return true;
  };
  while (!pending.empty()) {
    std::optional<int64_t> chosen;
    if (policy == SchedulePolicy::kLowestIdFirst) {
      for (auto it = pending.begin(); it != pending.end() && !chosen; ++it) {
        if (ready(*it)) chosen = *it;
      }
    } else {
      for (auto it = pending.rbegin(); it != pending.rend() && !chosen; ++it) {
        if (ready(*it)) chosen = *it;
      }
    }
    if (!chosen) throw DataError("internal error: no runnable kernel node although nodes remain");
    const GraphNode& node = g.Node(*chosen);
    ArchitectureStep step;
    step.node_id = node.id;
    step.symbol = node.symbol;
    step.kernel_type = labels.at(node.symbol);
    std::vector<Tensor> args;
    for (int64_t in : node.inputs) {
      args.push_back(*values[g.index.at(in)]);
      step.input_shapes.push_back(args.back().shape);
    }
    Tensor out;
    try {
      out = RunKernel(step.kernel_type, args, node.attrs);
    } catch (const DataError& e) {
      throw DataError("node " + std::to_string(node.id) + " (" + node.symbol + "): " + e.what());
    }
    if (!out.AllFinite()) {
      throw NumericError("node " + std::to_string(node.id) + " produced non-finite values");
    }
    step.output_shape = out.shape;
    values[g.index.at(node.id)] = std::move(out);
    ++result.executions[node.id];
    result.summary.steps.push_back(std::move(step));
    pending.erase(*chosen);
  }
  result.output = *values[g.index.at(g.output_id)];
  return result;
}

ReconstructResult ReconstructRun(const GraphDescriptor& g, const ParamStore& params,
                                 const KernelLabels& labels, const Tensor& input,
                                 SchedulePolicy policy) {
  auto ids = g.InputIds();
  if (ids.size() != 1) {
    throw DataError("graph has " + std::to_string(ids.size()) + " inputs; pass a tensor map");
  }
  return ReconstructRun(g, params, labels, TensorMap{{g.Node(ids[0]).name, input}}, policy);
}

json AccuracyLossReport::ToJson() const {
  return {{"version", 1},
          {"inputs", inputs},
          {"disagreements", disagreements},
          {"accuracy_loss", loss},
          {"max_abs_deviation", max_abs_deviation}};
}

namespace {

std::vector<size_t> RowArgmax(const Tensor& t) {
  const size_t last = t.shape.empty() ? 1 : t.shape.back();
  std::vector<size_t> out;
  for (size_t r = 0; r + last <= t.size() && last > 0; r += last) {
    auto begin = t.data.begin() + static_cast<std::ptrdiff_t>(r);
    out.push_back(static_cast<size_t>(
        std::max_element(begin, begin + static_cast<std::ptrdiff_t>(last)) - begin));
  }
  return out;
}

}  // namespace

AccuracyLossReport AccuracyLoss(const GraphDescriptor& g, const ParamStore& params,
                                const KernelLabels& labels,
                                const std::vector<ReferencePair>& references) {
  AccuracyLossReport report;
  for (const auto& ref : references) {
    Tensor out = ReconstructRun(g, params, labels, ref.input).output;
    if (out.shape != ref.output.shape) {
      throw DataError("reference output shape " + ShapeString(ref.output.shape) +
                      " differs from reconstructed " + ShapeString(out.shape));
    }
    for (size_t i = 0; i < out.size(); ++i) {
      report.max_abs_deviation =
          std::max(report.max_abs_deviation,
                   std::fabs(static_cast<double>(out.data[i]) - ref.output.data[i]));
    }
    if (RowArgmax(out) != RowArgmax(ref.output)) ++report.disagreements;
    ++report.inputs;
  }
  report.loss = report.inputs == 0 ? 0.0
                                   : static_cast<double>(report.disagreements) /
                                         static_cast<double>(report.inputs);
  return report;
}

}  // namespace nnreverse
