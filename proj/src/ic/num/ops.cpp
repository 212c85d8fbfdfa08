#include "ic/num/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ic/num/kernels.hpp"

namespace ic::num {

namespace {

bool tape_wants(std::initializer_list<const Tensor*> inputs) {
  if (!GradientTape::current()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

void mark_output(Tensor& out, int64_t node_id) {
  out.set_requires_grad(true);
  out.raw()->tape_id = node_id;
}

template <typename T>
T* grad_buf(const std::shared_ptr<TensorData>& d) {
  auto& g = d->template gbuf<T>();
  if (!d->has_grad) {
    g.assign(static_cast<size_t>(shape_numel(d->shape)), T(0));
    d->has_grad = true;
  }
  return g.data();
}

template <typename T>
const T* grad_if_any(const std::shared_ptr<TensorData>& d) {
  if (!d->has_grad) return nullptr;
  return d->template gbuf<T>().data();
}

struct MatDims {
  int64_t batch, M, K, N;
  int64_t sa, sb;  // batch strides (0 broadcasts)
  Shape out_shape;
};

MatDims matmul_dims(const Tensor& a, const Tensor& b, bool b_transposed) {
  check(a.rank() >= 2 && a.rank() <= 3 && b.rank() >= 2 && b.rank() <= 3,
        "dimension error: matmul needs rank 2..3 operands, got ", shape_str(a.shape()),
        " and ", shape_str(b.shape()));
  check(a.dtype() == b.dtype(), "dtype mismatch: ", dtype_name(a.dtype()), " vs ",
        dtype_name(b.dtype()));
  const int64_t M = a.extent(a.rank() - 2);
  const int64_t Ka = a.extent(a.rank() - 1);
  const int64_t Kb = b_transposed ? b.extent(b.rank() - 1) : b.extent(b.rank() - 2);
  const int64_t N = b_transposed ? b.extent(b.rank() - 2) : b.extent(b.rank() - 1);
  check(Ka == Kb, "dimension error: inner extents disagree for ", shape_str(a.shape()),
        " and ", shape_str(b.shape()));
  const int64_t Ba = a.rank() == 3 ? a.extent(0) : 1;
  const int64_t Bb = b.rank() == 3 ? b.extent(0) : 1;
  const int64_t batch = std::max(Ba, Bb);
  check(Ba == batch || Ba == 1, "dimension error: batch extents disagree for ",
        shape_str(a.shape()), " and ", shape_str(b.shape()));
  check(Bb == batch || Bb == 1, "dimension error: batch extents disagree for ",
        shape_str(a.shape()), " and ", shape_str(b.shape()));
  MatDims d;
  d.batch = batch;
  d.M = M;
  d.K = Ka;
  d.N = N;
  d.sa = (Ba == batch && a.rank() == 3) ? M * Ka : 0;
  d.sb = (Bb == batch && b.rank() == 3) ? (b_transposed ? N * Ka : Ka * N) : 0;
  if (a.rank() == 2 && b.rank() == 2)
    d.out_shape = {M, N};
  else
    d.out_shape = {batch, M, N};
  return d;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const MatDims dm = matmul_dims(a, b, false);
  Tensor out = zeros(dm.out_shape, a.dtype());
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kernels::mm_nn(a.data<T>(), dm.sa, b.data<T>(), dm.sb, out.data<T>(), dm.batch, dm.M,
                   dm.K, dm.N);
  });
  if (tape_wants({&a, &b})) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    int64_t id = GradientTape::current()->record("matmul", [ad, bd, od, dm, ga, gb]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        if (ga) {
          T* da = grad_buf<T>(ad);
          if (dm.sa == 0) {
            for (int64_t bi = 0; bi < dm.batch; ++bi)
              kernels::mm_nt_serial(go + bi * dm.M * dm.N, int64_t{0},
                                    bd->buf<T>().data() + bi * dm.sb, int64_t{0}, da, 1,
                                    dm.M, dm.N, dm.K, true);
          } else {
            kernels::mm_nt(go, dm.M * dm.N, bd->buf<T>().data(), dm.sb, da, dm.batch, dm.M,
                           dm.N, dm.K, true);
          }
        }
        if (gb) {
          T* db = grad_buf<T>(bd);
          if (dm.sb == 0) {
            for (int64_t bi = 0; bi < dm.batch; ++bi)
              kernels::mm_tn_serial(ad->buf<T>().data() + bi * dm.sa, int64_t{0},
                                    go + bi * dm.M * dm.N, int64_t{0}, db, 1, dm.K, dm.M,
                                    dm.N, true);
          } else {
            kernels::mm_tn(ad->buf<T>().data(), dm.sa, go, dm.M * dm.N, db, dm.batch, dm.K,
                           dm.M, dm.N, true);
          }
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const MatDims dm = matmul_dims(a, b, true);
  Tensor out = zeros(dm.out_shape, a.dtype());
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kernels::mm_nt(a.data<T>(), dm.sa, b.data<T>(), dm.sb, out.data<T>(), dm.batch, dm.M,
                   dm.K, dm.N);
  });
  if (tape_wants({&a, &b})) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    int64_t id = GradientTape::current()->record("matmul_nt", [ad, bd, od, dm, ga, gb]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        if (ga) {
          // dA = dC * B  (B stored [N,K])
          T* da = grad_buf<T>(ad);
          if (dm.sa == 0) {
            for (int64_t bi = 0; bi < dm.batch; ++bi)
              kernels::mm_nn_serial(go + bi * dm.M * dm.N, int64_t{0},
                                    bd->buf<T>().data() + bi * dm.sb, int64_t{0}, da, 1,
                                    dm.M, dm.N, dm.K, true);
          } else {
            kernels::mm_nn(go, dm.M * dm.N, bd->buf<T>().data(), dm.sb, da, dm.batch, dm.M,
                           dm.N, dm.K, true);
          }
        }
        if (gb) {
          // dB = dC^T * A -> [N,K]
          T* db = grad_buf<T>(bd);
          if (dm.sb == 0) {
            for (int64_t bi = 0; bi < dm.batch; ++bi)
              kernels::mm_tn_serial(go + bi * dm.M * dm.N, int64_t{0},
                                    ad->buf<T>().data() + bi * dm.sa, int64_t{0}, db, 1,
                                    dm.N, dm.M, dm.K, true);
          } else {
            kernels::mm_tn(go, dm.M * dm.N, ad->buf<T>().data(), dm.sa, db, dm.batch, dm.N,
                           dm.M, dm.K, true);
          }
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

namespace {

int64_t suffix_repeats(const Tensor& a, const Tensor& b, const char* op) {
  check(a.dtype() == b.dtype(), "dtype mismatch in ", op);
  check(b.rank() <= a.rank(), "shape mismatch: ", op, " of ", shape_str(a.shape()), " and ",
        shape_str(b.shape()));
  const int64_t off = a.rank() - b.rank();
  for (int64_t i = 0; i < b.rank(); ++i)
    check(b.extent(i) == a.extent(i + off), "shape mismatch: ", op, " of ",
          shape_str(a.shape()), " and ", shape_str(b.shape()));
  return b.numel() == 0 ? 0 : a.numel() / b.numel();
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const int64_t reps = suffix_repeats(a, b, "add");
  Tensor out = zeros(a.shape(), a.dtype());
  const int64_t nb = b.numel();
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>();
    const T* pb = b.data<T>();
    T* po = out.data<T>();
    for (int64_t r = 0; r < reps; ++r) {
      const T* ar = pa + r * nb;
      T* orow = po + r * nb;
      for (int64_t i = 0; i < nb; ++i) orow[i] = ar[i] + pb[i];
    }
  });
  if (tape_wants({&a, &b})) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    int64_t id = GradientTape::current()->record("add", [ad, bd, od, reps, nb, ga, gb]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        if (ga) {
          T* da = grad_buf<T>(ad);
          const int64_t n = reps * nb;
          for (int64_t i = 0; i < n; ++i) da[i] += go[i];
        }
        if (gb) {
          T* db = grad_buf<T>(bd);
          for (int64_t r = 0; r < reps; ++r) {
            const T* grow = go + r * nb;
            for (int64_t i = 0; i < nb; ++i) db[i] += grow[i];
          }
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "shape mismatch: sub of ", shape_str(a.shape()), " and ",
        shape_str(b.shape()));
  Tensor out = zeros(a.shape(), a.dtype());
  const int64_t n = a.numel();
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>();
    const T* pb = b.data<T>();
    T* po = out.data<T>();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
  });
  if (tape_wants({&a, &b})) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    int64_t id = GradientTape::current()->record("sub", [ad, bd, od, n, ga, gb]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        if (ga) {
          T* da = grad_buf<T>(ad);
          for (int64_t i = 0; i < n; ++i) da[i] += go[i];
        }
        if (gb) {
          T* db = grad_buf<T>(bd);
          for (int64_t i = 0; i < n; ++i) db[i] -= go[i];
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "shape mismatch: mul of ", shape_str(a.shape()), " and ",
        shape_str(b.shape()));
  Tensor out = zeros(a.shape(), a.dtype());
  const int64_t n = a.numel();
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>();
    const T* pb = b.data<T>();
    T* po = out.data<T>();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  });
  if (tape_wants({&a, &b})) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    int64_t id = GradientTape::current()->record("mul", [ad, bd, od, n, ga, gb]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        if (ga) {
          T* da = grad_buf<T>(ad);
          const T* pb = bd->buf<T>().data();
          for (int64_t i = 0; i < n; ++i) da[i] += go[i] * pb[i];
        }
        if (gb) {
          T* db = grad_buf<T>(bd);
          const T* pa = ad->buf<T>().data();
          for (int64_t i = 0; i < n; ++i) db[i] += go[i] * pa[i];
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = zeros(a.shape(), a.dtype());
  const int64_t n = a.numel();
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>();
    T* po = out.data<T>();
    const T sv = static_cast<T>(s);
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * sv;
  });
  if (tape_wants({&a})) {
    auto ad = a.ptr();
    auto od = out.ptr();
    int64_t id = GradientTape::current()->record("scale", [ad, od, n, s]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* da = grad_buf<T>(ad);
        const T sv = static_cast<T>(s);
        for (int64_t i = 0; i < n; ++i) da[i] += go[i] * sv;
      });
    });
    mark_output(out, id);
  }
  return out;
}

namespace {
struct AxisDims {
  int64_t outer, len, inner;
};
AxisDims axis_dims(const Tensor& x, int64_t axis, const char* op) {
  check(axis >= 0 && axis < x.rank(), "axis error: ", op, " axis ", axis,
        " out of range for ", shape_str(x.shape()));
  AxisDims d{1, x.extent(axis), 1};
  for (int64_t i = 0; i < axis; ++i) d.outer *= x.extent(i);
  for (int64_t i = axis + 1; i < x.rank(); ++i) d.inner *= x.extent(i);
  return d;
}
}  // namespace

Tensor softmax(const Tensor& x, int64_t axis) {
  const AxisDims d = axis_dims(x, axis, "softmax");
  Tensor out = zeros(x.shape(), x.dtype());
  int64_t degenerate = -1;
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kernels::softmax_rows(x.data<T>(), out.data<T>(), d.outer * d.inner, d.len, d.inner,
                          d.len * d.inner, &degenerate);
  });
  check(degenerate < 0, "degenerate-row error: softmax row ", degenerate,
        " has every position masked");
  if (tape_wants({&x})) {
    auto xd = x.ptr(), od = out.ptr();
    int64_t id = GradientTape::current()->record("softmax", [xd, od, d]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dx = grad_buf<T>(xd);
        const T* p = od->buf<T>().data();
        const int64_t rows = d.outer * d.inner;
        const int64_t block = d.len * d.inner;
        for (int64_t r = 0; r < rows; ++r) {
          const int64_t base = (r / d.inner) * block + (r % d.inner);
          T dot = 0;
          for (int64_t j = 0; j < d.len; ++j) {
            const int64_t idx = base + j * d.inner;
            dot += go[idx] * p[idx];
          }
          for (int64_t j = 0; j < d.len; ++j) {
            const int64_t idx = base + j * d.inner;
            dx[idx] += p[idx] * (go[idx] - dot);
          }
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  check(x.rank() >= 1, "shape mismatch: layer_norm needs rank >= 1");
  const int64_t C = x.extent(x.rank() - 1);
  check(gain.rank() == 1 && gain.extent(0) == C && bias.rank() == 1 && bias.extent(0) == C,
        "shape mismatch: layer_norm gain/bias ", shape_str(gain.shape()), "/",
        shape_str(bias.shape()), " vs last extent ", C);
  const int64_t rows = x.numel() / C;
  Tensor out = zeros(x.shape(), x.dtype());
  auto xhat = std::make_shared<std::vector<double>>();
  auto inv_std = std::make_shared<std::vector<double>>();
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> h(static_cast<size_t>(rows * C));
    std::vector<T> istd(static_cast<size_t>(rows));
    kernels::layernorm_rows(x.data<T>(), gain.data<T>(), bias.data<T>(), out.data<T>(),
                            h.data(), istd.data(), rows, C, static_cast<T>(eps));
    xhat->assign(h.begin(), h.end());
    inv_std->assign(istd.begin(), istd.end());
  });
  if (tape_wants({&x, &gain, &bias})) {
    auto xd = x.ptr(), gd = gain.ptr(), bd = bias.ptr(), od = out.ptr();
    const bool gx = x.requires_grad(), gg = gain.requires_grad(), gb = bias.requires_grad();
    int64_t id = GradientTape::current()->record(
        "layer_norm", [xd, gd, bd, od, xhat, inv_std, rows, C, gx, gg, gb]() {
          dispatch_dtype(od->dtype, [&](auto tag) {
            using T = decltype(tag);
            const T* go = grad_if_any<T>(od);
            if (!go) return;
            const T* gainv = gd->buf<T>().data();
            if (gx) {
              T* dx = grad_buf<T>(xd);
              for (int64_t r = 0; r < rows; ++r) {
                const T* grow = go + r * C;
                const double* hrow = xhat->data() + r * C;
                double mean_dh = 0.0, mean_dh_h = 0.0;
                for (int64_t j = 0; j < C; ++j) {
                  const double dh = static_cast<double>(grow[j]) * static_cast<double>(gainv[j]);
                  mean_dh += dh;
                  mean_dh_h += dh * hrow[j];
                }
                mean_dh /= static_cast<double>(C);
                mean_dh_h /= static_cast<double>(C);
                const double istd = (*inv_std)[static_cast<size_t>(r)];
                T* dxrow = dx + r * C;
                for (int64_t j = 0; j < C; ++j) {
                  const double dh = static_cast<double>(grow[j]) * static_cast<double>(gainv[j]);
                  dxrow[j] += static_cast<T>(istd * (dh - mean_dh - hrow[j] * mean_dh_h));
                }
              }
            }
            if (gg) {
              T* dgain = grad_buf<T>(gd);
              for (int64_t r = 0; r < rows; ++r) {
                const T* grow = go + r * C;
                const double* hrow = xhat->data() + r * C;
                for (int64_t j = 0; j < C; ++j)
                  dgain[j] += static_cast<T>(static_cast<double>(grow[j]) * hrow[j]);
              }
            }
            if (gb) {
              T* dbias = grad_buf<T>(bd);
              for (int64_t r = 0; r < rows; ++r) {
                const T* grow = go + r * C;
                for (int64_t j = 0; j < C; ++j) dbias[j] += grow[j];
              }
            }
          });
        });
    mark_output(out, id);
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out = zeros(x.shape(), x.dtype());
  const int64_t n = x.numel();
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kernels::gelu_forward(x.data<T>(), out.data<T>(), n);
  });
  if (tape_wants({&x})) {
    auto xd = x.ptr(), od = out.ptr();
    int64_t id = GradientTape::current()->record("gelu", [xd, od, n]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dx = grad_buf<T>(xd);
        const T* px = xd->buf<T>().data();
        for (int64_t i = 0; i < n; ++i) dx[i] += go[i] * kernels::gelu_derivative(px[i]);
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor embedding(const Tensor& table, const std::vector<int32_t>& ids) {
  check(table.rank() == 2, "shape mismatch: embedding table must be rank 2, got ",
        shape_str(table.shape()));
  const int64_t V = table.extent(0);
  const int64_t D = table.extent(1);
  for (int32_t id : ids)
    check(id >= 0 && id < V, "vocabulary error: embedding id ", id, " outside [0, ", V, ")");
  const int64_t n = static_cast<int64_t>(ids.size());
  Tensor out = zeros({n, D}, table.dtype());
  dispatch_dtype(table.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* tp = table.data<T>();
    T* po = out.data<T>();
    for (int64_t i = 0; i < n; ++i)
      std::memcpy(po + i * D, tp + static_cast<int64_t>(ids[static_cast<size_t>(i)]) * D,
                  sizeof(T) * static_cast<size_t>(D));
  });
  if (tape_wants({&table})) {
    auto td = table.ptr(), od = out.ptr();
    auto ids_copy = std::make_shared<std::vector<int32_t>>(ids);
    int64_t id = GradientTape::current()->record("embedding", [td, od, ids_copy, D]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dt = grad_buf<T>(td);
        const int64_t n = static_cast<int64_t>(ids_copy->size());
        for (int64_t i = 0; i < n; ++i) {
          T* drow = dt + static_cast<int64_t>((*ids_copy)[static_cast<size_t>(i)]) * D;
          const T* grow = go + i * D;
          for (int64_t j = 0; j < D; ++j) drow[j] += grow[j];
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor mean_axis(const Tensor& x, int64_t axis) {
  const AxisDims d = axis_dims(x, axis, "mean_axis");
  Shape out_shape;
  for (int64_t i = 0; i < x.rank(); ++i)
    if (i != axis) out_shape.push_back(x.extent(i));
  Tensor out = zeros(out_shape, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>();
    T* po = out.data<T>();
    const T inv = T(1) / static_cast<T>(d.len);
    for (int64_t o = 0; o < d.outer; ++o)
      for (int64_t i = 0; i < d.inner; ++i) {
        T s = 0;
        const int64_t base = o * d.len * d.inner + i;
        for (int64_t j = 0; j < d.len; ++j) s += px[base + j * d.inner];
        po[o * d.inner + i] = s * inv;
      }
  });
  if (tape_wants({&x})) {
    auto xd = x.ptr(), od = out.ptr();
    int64_t id = GradientTape::current()->record("mean_axis", [xd, od, d]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dx = grad_buf<T>(xd);
        const T inv = T(1) / static_cast<T>(d.len);
        for (int64_t o = 0; o < d.outer; ++o)
          for (int64_t i = 0; i < d.inner; ++i) {
            const T g = go[o * d.inner + i] * inv;
            const int64_t base = o * d.len * d.inner + i;
            for (int64_t j = 0; j < d.len; ++j) dx[base + j * d.inner] += g;
          }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor reshape(const Tensor& x, const Shape& new_shape) {
  check(shape_numel(new_shape) == x.numel(), "shape mismatch: reshape ",
        shape_str(x.shape()), " to ", shape_str(new_shape));
  Tensor out = zeros(new_shape, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::memcpy(out.data<T>(), x.data<T>(), sizeof(T) * static_cast<size_t>(x.numel()));
  });
  if (tape_wants({&x})) {
    auto xd = x.ptr(), od = out.ptr();
    const int64_t n = x.numel();
    int64_t id = GradientTape::current()->record("reshape", [xd, od, n]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dx = grad_buf<T>(xd);
        for (int64_t i = 0; i < n; ++i) dx[i] += go[i];
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor transpose01(const Tensor& x) {
  check(x.rank() == 3, "shape mismatch: transpose01 needs rank 3, got ",
        shape_str(x.shape()));
  const int64_t A = x.extent(0), B = x.extent(1), C = x.extent(2);
  Tensor out = zeros({B, A, C}, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>();
    T* po = out.data<T>();
    for (int64_t a = 0; a < A; ++a)
      for (int64_t b = 0; b < B; ++b)
        std::memcpy(po + (b * A + a) * C, px + (a * B + b) * C,
                    sizeof(T) * static_cast<size_t>(C));
  });
  if (tape_wants({&x})) {
    auto xd = x.ptr(), od = out.ptr();
    int64_t id = GradientTape::current()->record("transpose01", [xd, od, A, B, C]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dx = grad_buf<T>(xd);
        for (int64_t b = 0; b < B; ++b)
          for (int64_t a = 0; a < A; ++a) {
            const T* grow = go + (b * A + a) * C;
            T* drow = dx + (a * B + b) * C;
            for (int64_t j = 0; j < C; ++j) drow[j] += grow[j];
          }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int64_t begin, int64_t end) {
  check(x.rank() >= 1 && begin >= 0 && end <= x.extent(0) && begin <= end,
        "shape mismatch: slice_rows [", begin, ", ", end, ") of ", shape_str(x.shape()));
  Shape out_shape = x.shape();
  out_shape[0] = end - begin;
  const int64_t row = x.numel() / std::max<int64_t>(x.extent(0), 1);
  Tensor out = zeros(out_shape, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::memcpy(out.data<T>(), x.data<T>() + begin * row,
                sizeof(T) * static_cast<size_t>((end - begin) * row));
  });
  if (tape_wants({&x})) {
    auto xd = x.ptr(), od = out.ptr();
    int64_t id = GradientTape::current()->record("slice_rows", [xd, od, begin, end, row]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dx = grad_buf<T>(xd);
        const int64_t n = (end - begin) * row;
        T* base = dx + begin * row;
        for (int64_t i = 0; i < n; ++i) base[i] += go[i];
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  check(a.rank() == b.rank() && a.rank() >= 1, "shape mismatch: concat_rows of ",
        shape_str(a.shape()), " and ", shape_str(b.shape()));
  for (int64_t i = 1; i < a.rank(); ++i)
    check(a.extent(i) == b.extent(i), "shape mismatch: concat_rows of ",
          shape_str(a.shape()), " and ", shape_str(b.shape()));
  check(a.dtype() == b.dtype(), "dtype mismatch in concat_rows");
  Shape out_shape = a.shape();
  out_shape[0] = a.extent(0) + b.extent(0);
  Tensor out = zeros(out_shape, a.dtype());
  const int64_t na = a.numel(), nb = b.numel();
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::memcpy(out.data<T>(), a.data<T>(), sizeof(T) * static_cast<size_t>(na));
    std::memcpy(out.data<T>() + na, b.data<T>(), sizeof(T) * static_cast<size_t>(nb));
  });
  if (tape_wants({&a, &b})) {
    auto ad = a.ptr(), bd = b.ptr(), od = out.ptr();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    int64_t id = GradientTape::current()->record("concat_rows", [ad, bd, od, na, nb, ga, gb]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        if (ga) {
          T* da = grad_buf<T>(ad);
          for (int64_t i = 0; i < na; ++i) da[i] += go[i];
        }
        if (gb) {
          T* db = grad_buf<T>(bd);
          for (int64_t i = 0; i < nb; ++i) db[i] += go[na + i];
        }
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, RandomStream& rng, bool training) {
  check(p >= 0.0 && p < 1.0, "configuration error: dropout probability ", p);
  if (!training || p <= 0.0) return x;
  const int64_t n = x.numel();
  auto mask = std::make_shared<std::vector<float>>(static_cast<size_t>(n));
  const float keep_scale = static_cast<float>(1.0 / (1.0 - p));
  for (int64_t i = 0; i < n; ++i)
    (*mask)[static_cast<size_t>(i)] = rng.uniform() < p ? 0.0f : keep_scale;
  Tensor out = zeros(x.shape(), x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>();
    T* po = out.data<T>();
    for (int64_t i = 0; i < n; ++i)
      po[i] = px[i] * static_cast<T>((*mask)[static_cast<size_t>(i)]);
  });
  if (tape_wants({&x})) {
    auto xd = x.ptr(), od = out.ptr();
    int64_t id = GradientTape::current()->record("dropout", [xd, od, mask, n]() {
      dispatch_dtype(od->dtype, [&](auto tag) {
        using T = decltype(tag);
        const T* go = grad_if_any<T>(od);
        if (!go) return;
        T* dx = grad_buf<T>(xd);
        for (int64_t i = 0; i < n; ++i)
          dx[i] += go[i] * static_cast<T>((*mask)[static_cast<size_t>(i)]);
      });
    });
    mark_output(out, id);
  }
  return out;
}

Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int32_t>& targets,
                            int32_t ignore_index, Reduction reduction) {
  check(logits.rank() >= 2, "shape mismatch: cross_entropy_logits needs rank >= 2, got ",
        shape_str(logits.shape()));
  const int64_t C = logits.extent(logits.rank() - 1);
  const int64_t N = logits.numel() / C;
  check(static_cast<int64_t>(targets.size()) == N, "shape mismatch: ", targets.size(),
        " targets for ", N, " logit rows");
  int64_t count = 0;
  for (int32_t t : targets) {
    if (t == ignore_index) continue;
    check(t >= 0 && t < C, "target error: class ", t, " outside [0, ", C, ")");
    ++count;
  }
  check(count > 0, "empty-reduction error: every position carries the ignore index");
  Tensor out = zeros(Shape{}, logits.dtype());
  dispatch_dtype(logits.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pl = logits.data<T>();
    double total = 0.0;
    for (int64_t i = 0; i < N; ++i) {
      const int32_t t = targets[static_cast<size_t>(i)];
      if (t == ignore_index) continue;
      const T* row = pl + i * C;
      T mx = row[0];
      for (int64_t j = 1; j < C; ++j) mx = std::max(mx, row[j]);
      double sum = 0.0;
      for (int64_t j = 0; j < C; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
      total += std::log(sum) + static_cast<double>(mx) - static_cast<double>(row[t]);
    }
    if (reduction == Reduction::Mean) total /= static_cast<double>(count);
    out.data<T>()[0] = static_cast<T>(total);
  });
  if (tape_wants({&logits})) {
    auto ld = logits.ptr(), od = out.ptr();
    auto tgt = std::make_shared<std::vector<int32_t>>(targets);
    const double norm = reduction == Reduction::Mean ? 1.0 / static_cast<double>(count) : 1.0;
    int64_t id = GradientTape::current()->record(
        "cross_entropy", [ld, od, tgt, ignore_index, C, N, norm]() {
          dispatch_dtype(od->dtype, [&](auto tag) {
            using T = decltype(tag);
            const T* go = grad_if_any<T>(od);
            if (!go) return;
            const double upstream = static_cast<double>(go[0]) * norm;
            T* dl = grad_buf<T>(ld);
            const T* pl = ld->buf<T>().data();
            for (int64_t i = 0; i < N; ++i) {
              const int32_t t = (*tgt)[static_cast<size_t>(i)];
              if (t == ignore_index) continue;
              const T* row = pl + i * C;
              T* drow = dl + i * C;
              T mx = row[0];
              for (int64_t j = 1; j < C; ++j) mx = std::max(mx, row[j]);
              double sum = 0.0;
              for (int64_t j = 0; j < C; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
              for (int64_t j = 0; j < C; ++j) {
                const double p = std::exp(static_cast<double>(row[j] - mx)) / sum;
                const double ind = j == t ? 1.0 : 0.0;
                drow[j] += static_cast<T>((p - ind) * upstream);
              }
            }
          });
        });
    mark_output(out, id);
  }
  return out;
}

void backward(const Tensor& loss, GradientTape& tape) {
  check(loss.numel() == 1, "rank error: backward needs a scalar loss, got ",
        shape_str(loss.shape()));
  check(loss.tape_id() >= 0 && tape.size() > 0,
        "tape error: loss is not connected to the tape");
  dispatch_dtype(loss.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor l = loss;
    l.grad<T>()[0] = T(1);
  });
  tape.replay_backward();
}

Tensor grad_of(const Tensor& t) {
  Tensor g = zeros(t.shape(), t.dtype());
  if (t.raw()->has_grad) {
    dispatch_dtype(t.dtype(), [&](auto tag) {
      using T = decltype(tag);
      std::memcpy(g.data<T>(), t.raw()->gbuf<T>().data(),
                  sizeof(T) * static_cast<size_t>(t.numel()));
    });
  }
  return g;
}

}  // namespace ic::num
