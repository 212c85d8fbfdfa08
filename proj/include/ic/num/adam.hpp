#pragma once
#include <optional>
#include <vector>

#include "ic/num/tensor.hpp"

namespace ic::num {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled
  std::optional<double> grad_clip_norm;
};

struct AdamState {
  std::vector<Tensor> first_moment;   // zero-initialized, parameter-aligned
  std::vector<Tensor> second_moment;
  int64_t step_count = 0;
  AdamConfig config;
};

AdamState make_adam_state(const std::vector<NamedTensor>& params, const AdamConfig& config);

// In-place update of params from grads. Applies optional global-norm clipping
// before the moment updates, then a bias-corrected step with decoupled weight
// decay. Returns the pre-clip global gradient norm.
double adam_step(std::vector<NamedTensor>& params, const std::vector<Tensor>& grads,
                 AdamState& state);

double global_grad_norm(const std::vector<Tensor>& grads);

}  // namespace ic::num
