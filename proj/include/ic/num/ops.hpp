#pragma once
#include <cstdint>
#include <vector>

#include "ic/num/random.hpp"
#include "ic/num/tape.hpp"
#include "ic/num/tensor.hpp"

namespace ic::num {

// Differentiable primitives. Each op registers a backward node on the
// thread's current tape when one is active and an input carries gradient.

// rank 2..3 inputs, leading batch extents equal or broadcast from 1
Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T where b's last two extents are stored transposed: b is [.., N, K]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// b's shape must be a right-aligned suffix of a's shape (bias, mask adds)
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // same shape
Tensor scale(const Tensor& a, double s);

Tensor softmax(const Tensor& x, int64_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
Tensor gelu(const Tensor& x);

// table [V, D], ids in [0, V) -> [ids.size(), D]
Tensor embedding(const Tensor& table, const std::vector<int32_t>& ids);

Tensor mean_axis(const Tensor& x, int64_t axis);
Tensor reshape(const Tensor& x, const Shape& new_shape);
Tensor transpose01(const Tensor& x);  // rank-3: [A,B,C] -> [B,A,C]
Tensor slice_rows(const Tensor& x, int64_t begin, int64_t end);
Tensor concat_rows(const Tensor& a, const Tensor& b);

Tensor dropout(const Tensor& x, double p, RandomStream& rng, bool training);

enum class Reduction { Mean, Sum };
// logits [*, C]; targets flattened over leading extents; ignored targets are
// excluded from the reduction
Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int32_t>& targets,
                            int32_t ignore_index, Reduction reduction = Reduction::Mean);

// Runs the tape backward from a scalar loss. Gradients accumulate on every
// requires_grad tensor reachable from the loss; unreached leaves stay zero.
void backward(const Tensor& loss, GradientTape& tape);

// Gradient clone (zeros when none was materialized).
Tensor grad_of(const Tensor& t);

}  // namespace ic::num
