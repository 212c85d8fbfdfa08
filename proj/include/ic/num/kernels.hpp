#pragma once
#include <cstdint>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

// Hot inner loops of the tensor engine. Every kernel ships in two variants:
// a plain serial reference and an OpenMP one parallelized over independent
// output rows. Both compute each output element with the identical sequential
// inner loop, so results are bit-identical regardless of thread count; the
// serial variants stay around as the test oracle and for the benchmark tool.
namespace ic::num::kernels {

void set_parallel(bool enabled);
bool parallel_enabled();

// Work (scalar ops) below this stays serial; the fork/join cost outweighs it.
inline constexpr int64_t kParallelWorkThreshold = 32768;

namespace detail {
inline bool go_parallel(int64_t rows, int64_t work) {
#ifdef _OPENMP
  return parallel_enabled() && rows >= 2 && work >= kParallelWorkThreshold &&
         omp_get_max_threads() > 1 && !omp_in_parallel();
#else
  (void)rows;
  (void)work;
  return false;
#endif
}
}  // namespace detail

// ---- matmul: C[M,N] = A[M,K] * B[K,N], batched, optional accumulate ----
// Batch strides of 0 broadcast one operand across the batch.

template <typename T>
void mm_nn_serial(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
                  int64_t M, int64_t K, int64_t N, bool accumulate) {
  for (int64_t bi = 0; bi < batch; ++bi) {
    const T* A = a + bi * sa;
    const T* B = b + bi * sb;
    T* C = c + bi * M * N;
    for (int64_t i = 0; i < M; ++i) {
      T* crow = C + i * N;
      if (!accumulate)
        for (int64_t j = 0; j < N; ++j) crow[j] = T(0);
      for (int64_t k = 0; k < K; ++k) {
        const T av = A[i * K + k];
        const T* brow = B + k * N;
        for (int64_t j = 0; j < N; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

template <typename T>
void mm_nn_parallel(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
                    int64_t M, int64_t K, int64_t N, bool accumulate) {
  const int64_t rows = batch * M;
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t bi = r / M;
    const int64_t i = r % M;
    const T* A = a + bi * sa;
    const T* B = b + bi * sb;
    T* crow = c + bi * M * N + i * N;
    if (!accumulate)
      for (int64_t j = 0; j < N; ++j) crow[j] = T(0);
    for (int64_t k = 0; k < K; ++k) {
      const T av = A[i * K + k];
      const T* brow = B + k * N;
      for (int64_t j = 0; j < N; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void mm_nn(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
           int64_t M, int64_t K, int64_t N, bool accumulate = false) {
  if (detail::go_parallel(batch * M, batch * M * K * N))
    mm_nn_parallel(a, sa, b, sb, c, batch, M, K, N, accumulate);
  else
    mm_nn_serial(a, sa, b, sb, c, batch, M, K, N, accumulate);
}

// C[M,N] = A^T * B where A is stored [K,M], B is [K,N].
template <typename T>
void mm_tn_serial(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
                  int64_t M, int64_t K, int64_t N, bool accumulate) {
  for (int64_t bi = 0; bi < batch; ++bi) {
    const T* A = a + bi * sa;
    const T* B = b + bi * sb;
    T* C = c + bi * M * N;
    if (!accumulate)
      for (int64_t i = 0; i < M * N; ++i) C[i] = T(0);
    for (int64_t k = 0; k < K; ++k) {
      const T* arow = A + k * M;
      const T* brow = B + k * N;
      for (int64_t i = 0; i < M; ++i) {
        const T av = arow[i];
        T* crow = C + i * N;
        for (int64_t j = 0; j < N; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

template <typename T>
void mm_tn_parallel(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
                    int64_t M, int64_t K, int64_t N, bool accumulate) {
  const int64_t rows = batch * M;
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t bi = r / M;
    const int64_t i = r % M;
    const T* A = a + bi * sa;
    const T* B = b + bi * sb;
    T* crow = c + bi * M * N + i * N;
    if (!accumulate)
      for (int64_t j = 0; j < N; ++j) crow[j] = T(0);
    for (int64_t k = 0; k < K; ++k) {
      const T av = A[k * M + i];
      const T* brow = B + k * N;
      for (int64_t j = 0; j < N; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void mm_tn(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
           int64_t M, int64_t K, int64_t N, bool accumulate = false) {
  if (detail::go_parallel(batch * M, batch * M * K * N))
    mm_tn_parallel(a, sa, b, sb, c, batch, M, K, N, accumulate);
  else
    mm_tn_serial(a, sa, b, sb, c, batch, M, K, N, accumulate);
}

// C[M,N] = A * B^T where A is [M,K], B is stored [N,K].
template <typename T>
void mm_nt_serial(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
                  int64_t M, int64_t K, int64_t N, bool accumulate) {
  for (int64_t bi = 0; bi < batch; ++bi) {
    const T* A = a + bi * sa;
    const T* B = b + bi * sb;
    T* C = c + bi * M * N;
    for (int64_t i = 0; i < M; ++i) {
      const T* arow = A + i * K;
      T* crow = C + i * N;
      for (int64_t j = 0; j < N; ++j) {
        const T* brow = B + j * K;
        T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
        int64_t k = 0;
        for (; k + 4 <= K; k += 4) {
          s0 += arow[k] * brow[k];
          s1 += arow[k + 1] * brow[k + 1];
          s2 += arow[k + 2] * brow[k + 2];
          s3 += arow[k + 3] * brow[k + 3];
        }
        T s = ((s0 + s1) + (s2 + s3));
        for (; k < K; ++k) s += arow[k] * brow[k];
        if (accumulate)
          crow[j] += s;
        else
          crow[j] = s;
      }
    }
  }
}

template <typename T>
void mm_nt_parallel(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
                    int64_t M, int64_t K, int64_t N, bool accumulate) {
  const int64_t rows = batch * M;
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t bi = r / M;
    const int64_t i = r % M;
    const T* arow = a + bi * sa + i * K;
    const T* B = b + bi * sb;
    T* crow = c + bi * M * N + i * N;
    for (int64_t j = 0; j < N; ++j) {
      const T* brow = B + j * K;
      T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      int64_t k = 0;
      for (; k + 4 <= K; k += 4) {
        s0 += arow[k] * brow[k];
        s1 += arow[k + 1] * brow[k + 1];
        s2 += arow[k + 2] * brow[k + 2];
        s3 += arow[k + 3] * brow[k + 3];
      }
      T s = ((s0 + s1) + (s2 + s3));
      for (; k < K; ++k) s += arow[k] * brow[k];
      if (accumulate)
        crow[j] += s;
      else
        crow[j] = s;
    }
  }
}

template <typename T>
void mm_nt(const T* a, int64_t sa, const T* b, int64_t sb, T* c, int64_t batch,
           int64_t M, int64_t K, int64_t N, bool accumulate = false) {
  if (detail::go_parallel(batch * M, batch * M * K * N))
    mm_nt_parallel(a, sa, b, sb, c, batch, M, K, N, accumulate);
  else
    mm_nt_serial(a, sa, b, sb, c, batch, M, K, N, accumulate);
}

// ---- softmax over rows of length `len` with element stride `inner` ----
// Masked positions arrive as large negative values; a row whose max is still
// below `degenerate_floor` is reported through *degenerate_row.

inline constexpr double kMaskSentinel = -1e9;

template <typename T>
void softmax_rows_serial(const T* x, T* y, int64_t rows, int64_t len, int64_t inner,
                         int64_t row_block, int64_t* degenerate_row) {
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t base = (r / inner) * row_block + (r % inner);
    T mx = x[base];
    for (int64_t j = 1; j < len; ++j) mx = std::max(mx, x[base + j * inner]);
    if (static_cast<double>(mx) <= kMaskSentinel / 2) {
      if (*degenerate_row < 0) *degenerate_row = r;
      continue;
    }
    T sum = 0;
    for (int64_t j = 0; j < len; ++j) {
      const T e = std::exp(x[base + j * inner] - mx);
      y[base + j * inner] = e;
      sum += e;
    }
    const T inv = T(1) / sum;
    for (int64_t j = 0; j < len; ++j) y[base + j * inner] *= inv;
  }
}

template <typename T>
void softmax_rows_parallel(const T* x, T* y, int64_t rows, int64_t len, int64_t inner,
                           int64_t row_block, int64_t* degenerate_row) {
  int64_t bad = -1;
#pragma omp parallel for schedule(static) reduction(max : bad)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t base = (r / inner) * row_block + (r % inner);
    T mx = x[base];
    for (int64_t j = 1; j < len; ++j) mx = std::max(mx, x[base + j * inner]);
    if (static_cast<double>(mx) <= kMaskSentinel / 2) {
      bad = std::max(bad, r);
      continue;
    }
    T sum = 0;
    for (int64_t j = 0; j < len; ++j) {
      const T e = std::exp(x[base + j * inner] - mx);
      y[base + j * inner] = e;
      sum += e;
    }
    const T inv = T(1) / sum;
    for (int64_t j = 0; j < len; ++j) y[base + j * inner] *= inv;
  }
  if (bad >= 0 && *degenerate_row < 0) *degenerate_row = bad;
}

template <typename T>
void softmax_rows(const T* x, T* y, int64_t rows, int64_t len, int64_t inner,
                  int64_t row_block, int64_t* degenerate_row) {
  if (detail::go_parallel(rows, rows * len * 8))
    softmax_rows_parallel(x, y, rows, len, inner, row_block, degenerate_row);
  else
    softmax_rows_serial(x, y, rows, len, inner, row_block, degenerate_row);
}

// ---- layer norm over contiguous rows of length C ----

template <typename T>
void layernorm_rows_serial(const T* x, const T* gain, const T* bias, T* y, T* xhat,
                           T* inv_std, int64_t rows, int64_t C, T eps) {
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * C;
    T mean = 0;
    for (int64_t j = 0; j < C; ++j) mean += xr[j];
    mean /= T(C);
    T var = 0;
    for (int64_t j = 0; j < C; ++j) {
      const T d = xr[j] - mean;
      var += d * d;
    }
    var /= T(C);
    const T istd = T(1) / std::sqrt(var + eps);
    inv_std[r] = istd;
    T* yr = y + r * C;
    T* hr = xhat + r * C;
    for (int64_t j = 0; j < C; ++j) {
      const T h = (xr[j] - mean) * istd;
      hr[j] = h;
      yr[j] = h * gain[j] + bias[j];
    }
  }
}

template <typename T>
void layernorm_rows_parallel(const T* x, const T* gain, const T* bias, T* y, T* xhat,
                             T* inv_std, int64_t rows, int64_t C, T eps) {
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * C;
    T mean = 0;
    for (int64_t j = 0; j < C; ++j) mean += xr[j];
    mean /= T(C);
    T var = 0;
    for (int64_t j = 0; j < C; ++j) {
      const T d = xr[j] - mean;
      var += d * d;
    }
    var /= T(C);
    const T istd = T(1) / std::sqrt(var + eps);
    inv_std[r] = istd;
    T* yr = y + r * C;
    T* hr = xhat + r * C;
    for (int64_t j = 0; j < C; ++j) {
      const T h = (xr[j] - mean) * istd;
      hr[j] = h;
      yr[j] = h * gain[j] + bias[j];
    }
  }
}

template <typename T>
void layernorm_rows(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* inv_std,
                    int64_t rows, int64_t C, T eps) {
  if (detail::go_parallel(rows, rows * C * 4))
    layernorm_rows_parallel(x, gain, bias, y, xhat, inv_std, rows, C, eps);
  else
    layernorm_rows_serial(x, gain, bias, y, xhat, inv_std, rows, C, eps);
}

// ---- GELU (exact, erf form) ----

template <typename T>
inline T gelu_value(T x) {
  return x * T(0.5) * (T(1) + std::erf(x * T(0.7071067811865475244)));
}

template <typename T>
inline T gelu_derivative(T x) {
  const T phi = T(0.3989422804014326779) * std::exp(T(-0.5) * x * x);
  const T Phi = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865475244)));
  return Phi + x * phi;
}

template <typename T>
void gelu_forward_serial(const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = gelu_value(x[i]);
}

template <typename T>
void gelu_forward_parallel(const T* x, T* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = gelu_value(x[i]);
}

template <typename T>
void gelu_forward(const T* x, T* y, int64_t n) {
  if (detail::go_parallel(n, n * 16))
    gelu_forward_parallel(x, y, n);
  else
    gelu_forward_serial(x, y, n);
}

// ---- fused Adam update for one parameter buffer ----
// Decoupled weight decay; caller handles bias correction factors and clipping.

template <typename T>
void adam_update_serial(T* p, const T* g, T* m, T* v, int64_t n, T lr, T beta1, T beta2,
                        T eps, T weight_decay, T bc1, T bc2, T clip_scale) {
  for (int64_t i = 0; i < n; ++i) {
    const T gi = g[i] * clip_scale;
    m[i] = beta1 * m[i] + (T(1) - beta1) * gi;
    v[i] = beta2 * v[i] + (T(1) - beta2) * gi * gi;
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
  }
}

template <typename T>
void adam_update_parallel(T* p, const T* g, T* m, T* v, int64_t n, T lr, T beta1, T beta2,
                          T eps, T weight_decay, T bc1, T bc2, T clip_scale) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const T gi = g[i] * clip_scale;
    m[i] = beta1 * m[i] + (T(1) - beta1) * gi;
    v[i] = beta2 * v[i] + (T(1) - beta2) * gi * gi;
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
  }
}

template <typename T>
void adam_update(T* p, const T* g, T* m, T* v, int64_t n, T lr, T beta1, T beta2, T eps,
                 T weight_decay, T bc1, T bc2, T clip_scale) {
  if (detail::go_parallel(n, n * 8))
    adam_update_parallel(p, g, m, v, n, lr, beta1, beta2, eps, weight_decay, bc1, bc2, clip_scale);
  else
    adam_update_serial(p, g, m, v, n, lr, beta1, beta2, eps, weight_decay, bc1, bc2, clip_scale);
}

}  // namespace ic::num::kernels
