#include "ic/model/masks.hpp"

#include "ic/error.hpp"
#include "ic/num/kernels.hpp"

namespace ic::model {

AttentionMask build_causal_mask(int64_t T) {
  check(T >= 1, "empty-sequence error: causal mask needs T >= 1, got ", T);
  AttentionMask m;
  m.rows = m.cols = T;
  m.allow.assign(static_cast<size_t>(T * T), 0);
  for (int64_t q = 0; q < T; ++q)
    for (int64_t k = 0; k <= q; ++k) m.set(q, k, true);
  return m;
}

AttentionMask build_instruction_cross_mask(const std::vector<Interval>& intervals, int64_t T,
                                           MaskMode mode) {
  check(!intervals.empty(), "interval error: no intervals given");
  check(intervals.front().begin == 1, "interval error: first interval must start at 1, got ",
        intervals.front().begin);
  for (size_t i = 0; i < intervals.size(); ++i) {
    check(intervals[i].begin < intervals[i].end, "interval error: empty interval [",
          intervals[i].begin, ", ", intervals[i].end, ")");
    if (i + 1 < intervals.size())
      check(intervals[i].end == intervals[i + 1].begin,
            "interval error: gap or overlap between [", intervals[i].begin, ", ",
            intervals[i].end, ") and [", intervals[i + 1].begin, ", ", intervals[i + 1].end,
            ")");
  }
  check(intervals.back().end == T + 1, "interval error: intervals must cover [1, ", T + 1,
        "), last ends at ", intervals.back().end);

  const int64_t n = static_cast<int64_t>(intervals.size());
  AttentionMask m;
  m.rows = n;
  m.cols = T;
  m.allow.assign(static_cast<size_t>(n * T), 0);
  for (int64_t i = 0; i < n; ++i) {
    int64_t cap;
    switch (mode) {
      case MaskMode::Onset:
        cap = std::max<int64_t>(intervals[static_cast<size_t>(i)].begin - 1, 1);
        break;
      case MaskMode::Execution:
        cap = intervals[static_cast<size_t>(i)].end - 1;
        break;
      default:
        cap = T;
        break;
    }
    for (int64_t t = 0; t < cap; ++t) m.set(i, t, true);
  }
  return m;
}

ic::num::Tensor mask_to_additive(const AttentionMask& mask, ic::num::DType dtype) {
  using namespace ic::num;
  Tensor t = zeros({mask.rows, mask.cols}, dtype);
  for (int64_t r = 0; r < mask.rows; ++r)
    for (int64_t c = 0; c < mask.cols; ++c)
      if (!mask.at(r, c)) t.set_flat(r * mask.cols + c, kernels::kMaskSentinel);
  return t;
}

}  // namespace ic::model
