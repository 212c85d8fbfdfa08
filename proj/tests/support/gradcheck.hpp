#pragma once
// Central finite-difference oracle for gradient checks. Test-side only; it
// never calls into the backward pass it verifies.
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ic/num/tensor.hpp"

namespace ic::testsupport {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // "param[i]" of the worst coordinate
};

// loss_fn must recompute the full forward pass from current parameter values.
// Relative error uses a guard on tiny denominators.
inline GradCheckResult finite_difference_check(
    std::vector<ic::num::Tensor>& params, const std::vector<ic::num::Tensor>& analytic,
    const std::function<double()>& loss_fn, double h = 1e-5, double guard = 1e-8,
    const std::vector<std::string>* names = nullptr) {
  GradCheckResult res;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const int64_t n = p.numel();
    for (int64_t i = 0; i < n; ++i) {
      const double orig = p.at_flat(i);
      p.set_flat(i, orig + h);
      const double up = loss_fn();
      p.set_flat(i, orig - h);
      const double down = loss_fn();
      p.set_flat(i, orig);
      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic[pi].at_flat(i);
      const double denom = std::max({std::fabs(numeric), std::fabs(exact), guard});
      const double rel = std::fabs(numeric - exact) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        const std::string base = names ? (*names)[pi] : ("param" + std::to_string(pi));
        res.worst = base + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

// Same oracle restricted to a random sample of coordinates per tensor; used
// where a full sweep would be slow.
inline GradCheckResult finite_difference_check_sampled(
    std::vector<ic::num::Tensor>& params, const std::vector<ic::num::Tensor>& analytic,
    const std::function<double()>& loss_fn, int per_tensor, uint64_t seed, double h = 1e-5,
    double guard = 1e-8, const std::vector<std::string>* names = nullptr) {
  GradCheckResult res;
  ic::num::RandomStream rng(seed);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const int64_t n = p.numel();
    for (int s = 0; s < per_tensor; ++s) {
      const int64_t i = rng.uniform_int(n);
      const double orig = p.at_flat(i);
      p.set_flat(i, orig + h);
      const double up = loss_fn();
      p.set_flat(i, orig - h);
      const double down = loss_fn();
      p.set_flat(i, orig);
      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic[pi].at_flat(i);
      const double denom = std::max({std::fabs(numeric), std::fabs(exact), guard});
      const double rel = std::fabs(numeric - exact) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        const std::string base = names ? (*names)[pi] : ("param" + std::to_string(pi));
        res.worst = base + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace ic::testsupport
