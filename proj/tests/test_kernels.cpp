#include <doctest.h>

#include <cstring>
#include <vector>

#include "ic/num/kernels.hpp"
#include "ic/num/random.hpp"

using namespace ic::num;

namespace {

// Independent naive triple-loop product, the matmul oracle.
template <typename T>
std::vector<T> naive_matmul(const std::vector<T>& a, const std::vector<T>& b, int64_t M,
                            int64_t K, int64_t N) {
  std::vector<T> c(static_cast<size_t>(M * N), T(0));
  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < N; ++j) {
      T s = 0;
      for (int64_t k = 0; k < K; ++k) s += a[i * K + k] * b[k * N + j];
      c[i * N + j] = s;
    }
  return c;
}

template <typename T>
std::vector<T> random_vec(RandomStream& rng, int64_t n) {
  std::vector<T> v(static_cast<size_t>(n));
  for (auto& x : v) x = static_cast<T>(rng.normal());
  return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("mm_nn matches naive oracle in f64") {
  RandomStream rng(11);
  const int64_t M = 4, K = 5, N = 3;
  auto a = random_vec<double>(rng, M * K);
  auto b = random_vec<double>(rng, K * N);
  auto want = naive_matmul(a, b, M, K, N);
  std::vector<double> got(static_cast<size_t>(M * N));
  kernels::mm_nn_serial(a.data(), int64_t{0}, b.data(), int64_t{0}, got.data(), 1, M, K, N, false);
  for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("mm_nt and mm_tn match transposed naive oracle") {
  RandomStream rng(12);
  const int64_t M = 6, K = 7, N = 5;
  auto a = random_vec<double>(rng, M * K);
  auto bt = random_vec<double>(rng, N * K);  // stored [N,K]
  std::vector<double> b(static_cast<size_t>(K * N));
  for (int64_t i = 0; i < N; ++i)
    for (int64_t k = 0; k < K; ++k) b[k * N + i] = bt[i * K + k];
  auto want = naive_matmul(a, b, M, K, N);
  std::vector<double> got(static_cast<size_t>(M * N));
  kernels::mm_nt_serial(a.data(), int64_t{0}, bt.data(), int64_t{0}, got.data(), 1, M, K, N, false);
  for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

  auto at = random_vec<double>(rng, K * M);  // stored [K,M]
  std::vector<double> a2(static_cast<size_t>(M * K));
  for (int64_t k = 0; k < K; ++k)
    for (int64_t i = 0; i < M; ++i) a2[i * K + k] = at[k * M + i];
  auto b2 = random_vec<double>(rng, K * N);
  auto want2 = naive_matmul(a2, b2, M, K, N);
  std::vector<double> got2(static_cast<size_t>(M * N));
  kernels::mm_tn_serial(at.data(), int64_t{0}, b2.data(), int64_t{0}, got2.data(), 1, M, K, N, false);
  for (size_t i = 0; i < want2.size(); ++i)
    CHECK(got2[i] == doctest::Approx(want2[i]).epsilon(1e-12));
}

TEST_CASE("parallel kernels are bit-identical to serial references") {
  RandomStream rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t batch = 1 + rng.uniform_int(3);
    const int64_t M = 1 + rng.uniform_int(40);
    const int64_t K = 1 + rng.uniform_int(40);
    const int64_t N = 1 + rng.uniform_int(40);
    auto a = random_vec<float>(rng, batch * M * K);
    auto b = random_vec<float>(rng, batch * K * N);
    std::vector<float> c0(static_cast<size_t>(batch * M * N)), c1(c0.size());
    kernels::mm_nn_serial(a.data(), M * K, b.data(), K * N, c0.data(), batch, M, K, N, false);
    kernels::mm_nn_parallel(a.data(), M * K, b.data(), K * N, c1.data(), batch, M, K, N, false);
    CHECK(std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) == 0);

    auto bt = random_vec<float>(rng, batch * N * K);
    kernels::mm_nt_serial(a.data(), M * K, bt.data(), N * K, c0.data(), batch, M, K, N, false);
    kernels::mm_nt_parallel(a.data(), M * K, bt.data(), N * K, c1.data(), batch, M, K, N, false);
    CHECK(std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) == 0);

    auto at = random_vec<float>(rng, batch * K * M);
    kernels::mm_tn_serial(at.data(), K * M, b.data(), K * N, c0.data(), batch, M, K, N, false);
    kernels::mm_tn_parallel(at.data(), K * M, b.data(), K * N, c1.data(), batch, M, K, N, false);
    CHECK(std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("softmax and layernorm parallel variants bit-identical to serial") {
  RandomStream rng(14);
  const int64_t rows = 33, len = 17;
  auto x = random_vec<float>(rng, rows * len);
  std::vector<float> y0(x.size()), y1(x.size());
  int64_t bad0 = -1, bad1 = -1;
  kernels::softmax_rows_serial(x.data(), y0.data(), rows, len, int64_t{1}, len, &bad0);
  kernels::softmax_rows_parallel(x.data(), y1.data(), rows, len, int64_t{1}, len, &bad1);
  CHECK(bad0 == -1);
  CHECK(bad1 == -1);
  CHECK(std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);

  const int64_t C = 24;
  auto g = random_vec<float>(rng, C);
  auto b = random_vec<float>(rng, C);
  auto x2 = random_vec<float>(rng, rows * C);
  std::vector<float> o0(x2.size()), o1(x2.size()), h(x2.size()), istd(static_cast<size_t>(rows));
  kernels::layernorm_rows_serial(x2.data(), g.data(), b.data(), o0.data(), h.data(),
                                 istd.data(), rows, C, 1e-5f);
  kernels::layernorm_rows_parallel(x2.data(), g.data(), b.data(), o1.data(), h.data(),
                                   istd.data(), rows, C, 1e-5f);
  CHECK(std::memcmp(o0.data(), o1.data(), o0.size() * sizeof(float)) == 0);
}

TEST_CASE("adam update parallel variant bit-identical to serial") {
  RandomStream rng(15);
  const int64_t n = 5000;
  auto p0 = random_vec<float>(rng, n);
  auto g = random_vec<float>(rng, n);
  auto p1 = p0;
  std::vector<float> m0(static_cast<size_t>(n), 0.0f), v0(m0), m1(m0), v1(m0);
  kernels::adam_update_serial(p0.data(), g.data(), m0.data(), v0.data(), n, 1e-3f, 0.9f,
                              0.999f, 1e-8f, 0.01f, 0.1f, 0.001f, 1.0f);
  kernels::adam_update_parallel(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3f, 0.9f,
                                0.999f, 1e-8f, 0.01f, 0.1f, 0.001f, 1.0f);
  CHECK(std::memcmp(p0.data(), p1.data(), p0.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(m0.data(), m1.data(), m0.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(v0.data(), v1.data(), v0.size() * sizeof(float)) == 0);
}

}  // TEST_SUITE
