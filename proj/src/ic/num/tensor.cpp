#include "ic/num/tensor.hpp"

#include <cstring>
#include <sstream>

namespace ic::num {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

namespace {
std::shared_ptr<TensorData> make_data(const Shape& shape, DType dtype) {
  auto d = std::make_shared<TensorData>();
  d->shape = shape;
  d->dtype = dtype;
  const size_t n = static_cast<size_t>(shape_numel(shape));
  if (dtype == DType::f32)
    d->f32.assign(n, 0.0f);
  else
    d->f64.assign(n, 0.0);
  return d;
}
}  // namespace

Tensor zeros(const Shape& shape, DType dtype) { return Tensor(make_data(shape, dtype)); }

Tensor full(const Shape& shape, double value, DType dtype) {
  Tensor t = zeros(shape, dtype);
  dispatch_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    T* p = t.data<T>();
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) p[i] = static_cast<T>(value);
  });
  return t;
}

Tensor scalar(double value, DType dtype) { return full(Shape{}, value, dtype); }

Tensor from_vector(const std::vector<double>& v, const Shape& shape, DType dtype) {
  check(static_cast<int64_t>(v.size()) == shape_numel(shape),
        "shape mismatch: vector of ", v.size(), " values vs shape ", shape_str(shape));
  Tensor t = zeros(shape, dtype);
  dispatch_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    T* p = t.data<T>();
    for (size_t i = 0; i < v.size(); ++i) p[i] = static_cast<T>(v[i]);
  });
  return t;
}

Tensor randn(RandomStream& rng, const Shape& shape, double stddev, DType dtype) {
  Tensor t = zeros(shape, dtype);
  dispatch_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    T* p = t.data<T>();
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) p[i] = static_cast<T>(rng.normal(0.0, stddev));
  });
  return t;
}

Tensor clone(const Tensor& t) {
  Tensor out = zeros(t.shape(), t.dtype());
  dispatch_dtype(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::memcpy(out.data<T>(), t.data<T>(), sizeof(T) * static_cast<size_t>(t.numel()));
  });
  out.set_requires_grad(t.requires_grad());
  return out;
}

Tensor to_dtype(const Tensor& t, DType dtype) {
  if (t.dtype() == dtype) return clone(t);
  Tensor out = zeros(t.shape(), dtype);
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) out.set_flat(i, t.at_flat(i));
  return out;
}

bool same_values(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.dtype() != b.dtype()) return false;
  const size_t n = static_cast<size_t>(a.numel());
  return dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return std::memcmp(a.data<T>(), b.data<T>(), n * sizeof(T)) == 0;
  });
}

double Tensor::item() const {
  check(numel() == 1, "rank error: item() on tensor of shape ", shape_str(shape()));
  return at_flat(0);
}

double Tensor::at_flat(int64_t i) const {
  return dispatch_dtype(dtype(), [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(data<T>()[i]);
  });
}

void Tensor::set_flat(int64_t i, double v) {
  dispatch_dtype(dtype(), [&](auto tag) {
    using T = decltype(tag);
    const_cast<T*>(data<T>())[i] = static_cast<T>(v);
  });
}

}  // namespace ic::num
