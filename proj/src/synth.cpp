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

#include "nnreverse/synth.hpp"

#include <array>
#include <cstdio>

#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

namespace {

constexpr std::array<const char*, 10> kKernelNames = {
    "conv2d", "dense",    "relu",    "max_pool2d",  "softmax",
    "add",    "bias_add", "flatten", "conv2d_relu", "dense_relu"};

constexpr std::array<const char*, 14> kGpRegs = {
    "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "r8",
    "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};

constexpr std::array<const char*, 16> kVecRegs = {
    "ymm0", "ymm1", "ymm2",  "ymm3",  "ymm4",  "ymm5",  "ymm6",  "ymm7",
    "ymm8", "ymm9", "ymm10", "ymm11", "ymm12", "ymm13", "ymm14", "ymm15"};

// Vector opcodes; each class draws its signature subset from here.
constexpr std::array<const char*, 24> kSimdOps = {
    "vfmadd231ps", "vbroadcastss", "vmulps",   "vaddps",   "vmaxps",
    "vxorps",      "vsubps",       "vdivps",   "vhaddps",  "vminps",
    "vblendvps",   "vcmpps",       "vpermps",  "vshufps",  "vunpcklps",
    "vsqrtps",     "vrcpps",       "vandps",   "vcvtdq2ps", "vfmsub231ps",
    "vmovaps",     "vinsertf128",  "vextractf128", "vrsqrtps"};

constexpr std::array<int64_t, 8> kSmallImms = {4, 8, 16, 32, 64, 96, 128, 256};
constexpr std::array<int64_t, 6> kLargeImms = {0x1000, 0x73ff, 0x2400, 0x8000,
                                               0x1c00, 0x4e20};

struct Operand {
  enum class Kind { kGpReg, kVecReg, kImm, kMem };
  Kind kind = Kind::kGpReg;
  std::string reg;    // kGpReg / kVecReg
  int64_t imm = 0;    // kImm
  std::string base;   // kMem
  std::string index;  // kMem, optional
  int scale = 1;
  int64_t disp = 0;
};

struct TemplateInstruction {
  std::string opcode;
  std::vector<Operand> operands;
};

struct TemplateBlock {
  std::vector<TemplateInstruction> instructions;
};

struct ClassTemplate {
  std::vector<TemplateBlock> blocks;  // block_id == position
  std::vector<CfgEdge> edges;
};

std::string RenderNumber(int64_t value) {
  char buffer[32];
  uint64_t magnitude = value < 0 ? static_cast<uint64_t>(-value) : static_cast<uint64_t>(value);
  if (magnitude < 10) {
    std::snprintf(buffer, sizeof(buffer), "%s%llu", value < 0 ? "-" : "",
                  static_cast<unsigned long long>(magnitude));
  } else {
    std::snprintf(buffer, sizeof(buffer), "%s0x%llx", value < 0 ? "-" : "",
                  static_cast<unsigned long long>(magnitude));
  }
  return buffer;
}

std::string Render(const Operand& op) {
  switch (op.kind) {
    case Operand::Kind::kGpReg:
    case Operand::Kind::kVecReg:
      return op.reg;
    case Operand::Kind::kImm:
      return RenderNumber(op.imm);
    case Operand::Kind::kMem: {
      std::string out = "[" + op.base;
      if (!op.index.empty()) out += "+" + op.index + "*" + std::to_string(op.scale);
      if (op.disp > 0) out += "+" + RenderNumber(op.disp);
      if (op.disp < 0) out += RenderNumber(op.disp);
      return out + "]";
    }
  }
  return {};
}

std::string Render(const TemplateInstruction& ins) {
  std::string out = ins.opcode;
  for (size_t i = 0; i < ins.operands.size(); ++i) {
    out += (i == 0 ? " " : ", ") + Render(ins.operands[i]);
  }
  return out;
}

Operand Gp(const char* name) {
  Operand op;
  op.kind = Operand::Kind::kGpReg;
  op.reg = name;
  return op;
}
Operand Vec(const char* name) {
  Operand op;
  op.kind = Operand::Kind::kVecReg;
  op.reg = name;
  return op;
}
Operand Imm(int64_t v) {
  Operand op;
  op.kind = Operand::Kind::kImm;
  op.imm = v;
  return op;
}
Operand Mem(std::string base, std::string index, int scale, int64_t disp) {
  Operand op;
  op.kind = Operand::Kind::kMem;
  op.base = std::move(base);
  op.index = std::move(index);
  op.scale = scale;
  op.disp = disp;
  return op;
}

template <typename Array>
const char* Pick(Rng& rng, const Array& items) {
  return items[rng.Below(items.size())];
}

int64_t PickImm(Rng& rng) {
  return rng.Below(3) == 0 ? kLargeImms[rng.Below(kLargeImms.size())]
                           : kSmallImms[rng.Below(kSmallImms.size())];
}

// Loop nest of the given depth. Block ids: 0 entry, 1..d headers, d+1 body,
// d+2..2d+1 latches (innermost first), 2d+2 exit. 3d + 2 edges.
ClassTemplate BuildTemplate(int k, uint64_t seed) {
  const int depth = k + 1;
  Rng rng(Fnv1a64("template:" + std::to_string(k), seed * kFnvPrime + 0x9e37));
  std::vector<const char*> signature;
  for (int j = 0; j < 4; ++j) {
    signature.push_back(kSimdOps[(static_cast<size_t>(k) * 3 + static_cast<size_t>(j) * 5) %
                                 kSimdOps.size()]);
  }
  ClassTemplate t;
  t.blocks.resize(static_cast<size_t>(2 * depth + 3));
  auto header_id = [](int level) { return level; };
  auto latch_id = [depth](int level) { return 2 * depth + 2 - level; };
  const int body_id = depth + 1;
  const int exit_id = 2 * depth + 2;

  auto& entry = t.blocks[0].instructions;
  entry.push_back({"push", {Gp("rbp")}});
  entry.push_back({"mov", {Gp("rbp"), Gp("rsp")}});
  entry.push_back({"push", {Gp("rbx")}});
  entry.push_back({"sub", {Gp("rsp"), Imm(k % 2 == 0 ? 0x40 : 0x1200)}});
  entry.push_back({"mov", {Mem("rbp", "", 1, -8), Gp("rdi")}});
  entry.push_back({"xor", {Gp("eax"), Gp("eax")}});

  for (int level = 1; level <= depth; ++level) {
    const char* counter = kGpRegs[static_cast<size_t>(level + 5) % kGpRegs.size()];
    auto& h = t.blocks[static_cast<size_t>(header_id(level))].instructions;
    h.push_back({"cmp", {Gp(counter), Imm(PickImm(rng))}});
    h.push_back({"jge", {Imm(0x400 + level * 0x10)}});
    auto& l = t.blocks[static_cast<size_t>(latch_id(level))].instructions;
    l.push_back({"add", {Gp(counter), Imm(1)}});
    l.push_back({"jmp", {Imm(0x400 + level * 0x10)}});
  }

  auto& body = t.blocks[static_cast<size_t>(body_id)].instructions;
  const int body_len = 6 + 2 * k;
  for (int i = 0; i < body_len; ++i) {
    const char* op = signature[rng.Below(signature.size())];
    switch (rng.Below(4)) {
      case 0:
        body.push_back({"vmovups", {Vec(Pick(rng, kVecRegs)),
                                    Mem(Pick(rng, kGpRegs), Pick(rng, kGpRegs), 4,
                                        PickImm(rng))}});
        break;
      case 1:
        body.push_back({op, {Vec(Pick(rng, kVecRegs)), Vec(Pick(rng, kVecRegs)),
                             Vec(Pick(rng, kVecRegs))}});
        break;
      case 2:
        body.push_back({op, {Vec(Pick(rng, kVecRegs)),
                             Mem(Pick(rng, kGpRegs), "", 1, PickImm(rng))}});
        break;
      default:
        body.push_back({"lea", {Gp(Pick(rng, kGpRegs)),
                                Mem(Pick(rng, kGpRegs), Pick(rng, kGpRegs), 4, 0)}});
        break;
    }
  }
  body.push_back({"vmovups", {Mem("rdi", "rax", 4, 0), Vec("ymm0")}});

  auto& exit = t.blocks[static_cast<size_t>(exit_id)].instructions;
  exit.push_back({"add", {Gp("rsp"), Imm(k % 2 == 0 ? 0x40 : 0x1200)}});
  exit.push_back({"pop", {Gp("rbx")}});
  exit.push_back({"pop", {Gp("rbp")}});
  exit.push_back({"ret", {}});

  t.edges.emplace_back(0, header_id(1));
  for (int level = 1; level <= depth; ++level) {
    t.edges.emplace_back(header_id(level), level < depth ? header_id(level + 1) : body_id);
    t.edges.emplace_back(header_id(level), level > 1 ? latch_id(level - 1) : exit_id);
    t.edges.emplace_back(latch_id(level), header_id(level));
  }
  t.edges.emplace_back(body_id, latch_id(depth));
  return t;
}

int64_t MutateValue(Rng& rng, int64_t old_value) {
  int64_t magnitude = rng.Below(2) == 0
                          ? static_cast<int64_t>(rng.Below(128) * 4)
                          : static_cast<int64_t>(1000 + rng.Below(0x100000 - 1000));
  return old_value < 0 ? -magnitude : magnitude;
}

const char* OtherReg(Rng& rng, const std::string& current, bool vec) {
  for (;;) {
    const char* r = vec ? Pick(rng, kVecRegs) : Pick(rng, kGpRegs);
    if (current != r) return r;
  }
}

// Register rename or immediate/displacement perturbation on one slot.
void Mutate(Rng& rng, TemplateInstruction& ins) {
  std::vector<std::pair<size_t, int>> slots;  // (operand, slot kind)
  for (size_t i = 0; i < ins.operands.size(); ++i) {
    const Operand& op = ins.operands[i];
    switch (op.kind) {
      case Operand::Kind::kGpReg:
      case Operand::Kind::kVecReg:
        slots.emplace_back(i, 0);
        break;
      case Operand::Kind::kImm:
        slots.emplace_back(i, 1);
        break;
      case Operand::Kind::kMem:
        slots.emplace_back(i, 2);
        if (!op.index.empty()) slots.emplace_back(i, 3);
        slots.emplace_back(i, 4);
        break;
    }
  }
  if (slots.empty()) return;
  auto [index, kind] = slots[rng.Below(slots.size())];
  Operand& op = ins.operands[index];
  switch (kind) {
    case 0: {
      bool vec = op.kind == Operand::Kind::kVecReg;
      op.reg = OtherReg(rng, op.reg, vec);
      break;
    }
    case 1:
      op.imm = MutateValue(rng, op.imm);
      break;
    case 2:
      op.base = OtherReg(rng, op.base, false);
      break;
    case 3:
      op.index = OtherReg(rng, op.index, false);
      break;
    default:
      op.disp = MutateValue(rng, op.disp);
      break;
  }
}

}  // namespace

std::string SynthKernelName(int k) {
  if (k >= 0 && static_cast<size_t>(k) < kKernelNames.size()) {
    return kKernelNames[static_cast<size_t>(k)];
  }
  return "kernel_" + std::to_string(k);
}

Corpus GenerateSyntheticCorpus(const SynthSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic corpus needs at least 2 classes");
  if (spec.per_class < 2) throw ConfigError("synthetic corpus needs at least 2 members per class");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0)) {
    throw ConfigError("noise_rate must lie in [0,1]");
  }
  if (spec.platforms.empty()) throw ConfigError("synthetic corpus needs a platform");

  Corpus corpus;
  corpus.split_seed = spec.seed;
  for (int k = 0; k < spec.classes; ++k) corpus.kernel_types.push_back(SynthKernelName(k));

  for (int k = 0; k < spec.classes; ++k) {
    const ClassTemplate t = BuildTemplate(k, spec.seed);
    const std::string name = SynthKernelName(k);
    for (int m = 0; m < spec.per_class; ++m) {
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "%03d", m);
      AsmFunction f;
      f.function_id = "synth_" + name + "_" + suffix;
      f.symbol = "tvmgen_default_fused_nn_" + name + "_" + suffix;
      f.platform = spec.platforms[static_cast<size_t>(m) % spec.platforms.size()];
      f.opt_level = m % 5;
      f.label = name;
      Rng noise(Fnv1a64(f.function_id, spec.seed ^ 0x5bd1e995ULL));
      for (size_t b = 0; b < t.blocks.size(); ++b) {
        BasicBlock block;
        block.block_id = static_cast<int64_t>(b);
        for (TemplateInstruction ins : t.blocks[b].instructions) {
          if (spec.noise_rate > 0.0 && noise.Uniform() < spec.noise_rate) {
            Mutate(noise, ins);
          }
          block.instructions.push_back(Render(ins));
        }
        f.blocks.push_back(std::move(block));
      }
      f.edges = t.edges;
      corpus.functions.push_back(std::move(f));
    }
  }
  ValidateCorpus(corpus);
  return corpus;
}

}  // namespace nnreverse
