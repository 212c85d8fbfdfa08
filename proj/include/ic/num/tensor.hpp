#pragma once
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ic/error.hpp"
#include "ic/num/random.hpp"

namespace ic::num {

enum class DType : uint8_t { f32 = 0, f64 = 1 };

inline const char* dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s);

struct TensorData {
  Shape shape;
  DType dtype = DType::f32;
  std::vector<float> f32;
  std::vector<double> f64;
  bool requires_grad = false;
  int64_t tape_id = -1;  // node that produced this tensor; -1 for leaves
  std::vector<float> grad32;
  std::vector<double> grad64;
  bool has_grad = false;

  template <typename T>
  std::vector<T>& buf();
  template <typename T>
  const std::vector<T>& buf() const;
  template <typename T>
  std::vector<T>& gbuf();
};

template <>
inline std::vector<float>& TensorData::buf<float>() { return f32; }
template <>
inline std::vector<double>& TensorData::buf<double>() { return f64; }
template <>
inline const std::vector<float>& TensorData::buf<float>() const { return f32; }
template <>
inline const std::vector<double>& TensorData::buf<double>() const { return f64; }
template <>
inline std::vector<float>& TensorData::gbuf<float>() { return grad32; }
template <>
inline std::vector<double>& TensorData::gbuf<double>() { return grad64; }

// Value-semantic handle over shared storage. Safe for concurrent reads; all
// mutation happens through ops on one logical training thread.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}

  bool defined() const { return d_ != nullptr; }
  const Shape& shape() const { return d_->shape; }
  int64_t rank() const { return static_cast<int64_t>(d_->shape.size()); }
  int64_t extent(int64_t axis) const { return d_->shape[static_cast<size_t>(axis)]; }
  int64_t numel() const { return shape_numel(d_->shape); }
  DType dtype() const { return d_->dtype; }
  bool requires_grad() const { return d_->requires_grad; }
  void set_requires_grad(bool b) { d_->requires_grad = b; }
  int64_t tape_id() const { return d_->tape_id; }

  template <typename T>
  T* data() { return d_->buf<T>().data(); }
  template <typename T>
  const T* data() const { return d_->buf<T>().data(); }

  // Materializes a zero gradient on first access.
  template <typename T>
  T* grad() {
    auto& g = d_->gbuf<T>();
    if (!d_->has_grad) {
      g.assign(static_cast<size_t>(numel()), T(0));
      d_->has_grad = true;
    }
    return g.data();
  }
  bool has_grad() const { return d_->has_grad; }
  void clear_grad() {
    d_->grad32.clear();
    d_->grad64.clear();
    d_->has_grad = false;
  }

  double item() const;
  double at_flat(int64_t i) const;
  void set_flat(int64_t i, double v);

  TensorData* raw() const { return d_.get(); }
  std::shared_ptr<TensorData> ptr() const { return d_; }

 private:
  std::shared_ptr<TensorData> d_;
};

Tensor zeros(const Shape& shape, DType dtype = DType::f32);
Tensor full(const Shape& shape, double value, DType dtype = DType::f32);
Tensor scalar(double value, DType dtype = DType::f32);
Tensor from_vector(const std::vector<double>& v, const Shape& shape, DType dtype = DType::f32);
Tensor randn(RandomStream& rng, const Shape& shape, double stddev, DType dtype = DType::f32);
Tensor clone(const Tensor& t);
Tensor to_dtype(const Tensor& t, DType dtype);
bool same_values(const Tensor& a, const Tensor& b);  // bitwise equality of shape+data

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

template <typename F>
auto dispatch_dtype(DType dt, F&& f) {
  if (dt == DType::f32) return f(float{});
  return f(double{});
}

}  // namespace ic::num
