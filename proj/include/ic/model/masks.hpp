#pragma once
#include <cstdint>
#include <vector>

#include "ic/model/config.hpp"
#include "ic/num/tensor.hpp"

namespace ic::model {

struct AttentionMask {
  int64_t rows = 0, cols = 0;
  std::vector<uint8_t> allow;  // row-major [rows x cols]

  bool at(int64_t r, int64_t c) const { return allow[static_cast<size_t>(r * cols + c)] != 0; }
  void set(int64_t r, int64_t c, bool v) { allow[static_cast<size_t>(r * cols + c)] = v ? 1 : 0; }
  static AttentionMask none(int64_t rows, int64_t cols) {
    return AttentionMask{rows, cols, std::vector<uint8_t>(static_cast<size_t>(rows * cols), 1)};
  }
};

// Lower-triangular self-attention mask: allow[t][t'] iff t' <= t.
AttentionMask build_causal_mask(int64_t T);

// 1-based half-open instruction interval [begin, end).
struct Interval {
  int64_t begin = 0, end = 0;
  bool operator==(const Interval&) const = default;
};

// Rows are instructions, columns are step latents. In onset mode instruction i
// may attend z_1..z_{max(T_i - 1, 1)}; in execution mode z_1..z_{T_{i+1} - 1};
// unmasked allows everything (the ablation). Intervals must be contiguous,
// 1-based and cover [1, T+1).
AttentionMask build_instruction_cross_mask(const std::vector<Interval>& intervals, int64_t T,
                                           MaskMode mode);

// Additive form consumed by attention: 0 where allowed, -1e9 where masked.
ic::num::Tensor mask_to_additive(const AttentionMask& mask, ic::num::DType dtype);

}  // namespace ic::model
