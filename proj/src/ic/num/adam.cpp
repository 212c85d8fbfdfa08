#include "ic/num/adam.hpp"

#include <cmath>

#include "ic/num/kernels.hpp"

namespace ic::num {

AdamState make_adam_state(const std::vector<NamedTensor>& params, const AdamConfig& config) {
  AdamState st;
  st.config = config;
  st.first_moment.reserve(params.size());
  st.second_moment.reserve(params.size());
  for (const auto& p : params) {
    st.first_moment.push_back(zeros(p.tensor.shape(), p.tensor.dtype()));
    st.second_moment.push_back(zeros(p.tensor.shape(), p.tensor.dtype()));
  }
  return st;
}

double global_grad_norm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    const int64_t n = g.numel();
    dispatch_dtype(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* p = g.data<T>();
      for (int64_t i = 0; i < n; ++i) sq += static_cast<double>(p[i]) * static_cast<double>(p[i]);
    });
  }
  return std::sqrt(sq);
}

double adam_step(std::vector<NamedTensor>& params, const std::vector<Tensor>& grads,
                 AdamState& state) {
  check(params.size() == grads.size(), "shape mismatch: ", params.size(), " params vs ",
        grads.size(), " grads");
  check(params.size() == state.first_moment.size(),
        "shape mismatch: optimizer state built for a different parameter set");
  for (size_t i = 0; i < params.size(); ++i) {
    check(params[i].tensor.shape() == grads[i].shape(),
          "shape mismatch: param ", params[i].name, " ", shape_str(params[i].tensor.shape()),
          " vs grad ", shape_str(grads[i].shape()));
    const int64_t n = grads[i].numel();
    dispatch_dtype(grads[i].dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* g = grads[i].data<T>();
      for (int64_t j = 0; j < n; ++j)
        check(std::isfinite(static_cast<double>(g[j])),
              "non-finite error: gradient of parameter ", params[i].name,
              " is not finite at element ", j);
    });
  }

  const double norm = global_grad_norm(grads);
  double clip_scale = 1.0;
  if (state.config.grad_clip_norm && norm > *state.config.grad_clip_norm && norm > 0.0)
    clip_scale = *state.config.grad_clip_norm / norm;

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.step_count));

  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].tensor;
    const Tensor& g = grads[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    const int64_t n = p.numel();
    dispatch_dtype(p.dtype(), [&](auto tag) {
      using T = decltype(tag);
      kernels::adam_update(p.data<T>(), g.data<T>(), m.data<T>(), v.data<T>(), n,
                           static_cast<T>(state.config.learning_rate),
                           static_cast<T>(state.config.beta1),
                           static_cast<T>(state.config.beta2),
                           static_cast<T>(state.config.epsilon),
                           static_cast<T>(state.config.weight_decay), static_cast<T>(bc1),
                           static_cast<T>(bc2), static_cast<T>(clip_scale));
    });
  }
  return norm;
}

}  // namespace ic::num
