#pragma once
#include <string>
#include <unordered_map>
#include <vector>

#include "ic/model/config.hpp"
#include "ic/num/tensor.hpp"

namespace ic::model {

// Named learnable tensors. Encoder parameters carry the "enc." prefix, the
// policy head "policy.", the language decoder "dec."; the probe freeze logic
// and the parameter-count bookkeeping rely on those prefixes.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::vector<ic::num::NamedTensor> entries);

  ic::num::Tensor& at(const std::string& name);
  const ic::num::Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<ic::num::NamedTensor>& entries() { return entries_; }
  const std::vector<ic::num::NamedTensor>& entries() const { return entries_; }

  int64_t total_count() const;
  void set_requires_grad(bool b);
  void clear_grads();
  ModelParams clone() const;

 private:
  std::vector<ic::num::NamedTensor> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// Weight init: normal(0, 0.02) for embeddings and projections, zeros for
// biases and layer-norm bias, ones for layer-norm gain.
ModelParams init_params(const ModelConfig& config, uint64_t seed);

// Closed-form parameter total; must equal init_params(...).total_count().
int64_t param_count(const ModelConfig& config);

}  // namespace ic::model
