// Times the serial reference kernels against their OpenMP counterparts and
// prints throughput plus speedup per size. Results must agree bit-for-bit;
// the benchmark asserts that while it runs.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "ic/num/kernels.hpp"
#include "ic/num/random.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ic::num;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

void fill_random(std::vector<float>& v, RandomStream& rng) {
  for (auto& x : v) x = static_cast<float>(rng.normal());
}

struct Row {
  std::string name;
  double serial_s, parallel_s, gflops;
};

void print_row(const Row& r) {
  std::printf("%-26s %10.3f ms %10.3f ms %8.2fx %9.2f GFLOP/s\n", r.name.c_str(),
              r.serial_s * 1e3, r.parallel_s * 1e3, r.serial_s / r.parallel_s, r.gflops);
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  if (argc > 1) reps = std::atoi(argv[1]);
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%-26s %13s %13s %9s %17s\n", "kernel", "serial", "parallel", "speedup",
              "parallel rate");

  RandomStream rng(7);
  for (int64_t n : {64, 128, 256, 512}) {
    std::vector<float> a(static_cast<size_t>(n * n)), b(static_cast<size_t>(n * n));
    std::vector<float> c0(static_cast<size_t>(n * n)), c1(static_cast<size_t>(n * n));
    fill_random(a, rng);
    fill_random(b, rng);
    const double flops = 2.0 * static_cast<double>(n) * n * n;

    Row row;
    row.name = "mm_nn " + std::to_string(n) + "^3";
    row.serial_s = time_best_of(reps, [&] {
      kernels::mm_nn_serial(a.data(), int64_t{0}, b.data(), int64_t{0}, c0.data(), 1, n, n, n, false);
    });
    row.parallel_s = time_best_of(reps, [&] {
      kernels::mm_nn_parallel(a.data(), int64_t{0}, b.data(), int64_t{0}, c1.data(), 1, n, n, n, false);
    });
    row.gflops = flops / row.parallel_s / 1e9;
    if (std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "mismatch between serial and parallel mm_nn at n=%ld\n", n);
      return 1;
    }
    print_row(row);

    row.name = "mm_nt " + std::to_string(n) + "^3";
    row.serial_s = time_best_of(reps, [&] {
      kernels::mm_nt_serial(a.data(), int64_t{0}, b.data(), int64_t{0}, c0.data(), 1, n, n, n, false);
    });
    row.parallel_s = time_best_of(reps, [&] {
      kernels::mm_nt_parallel(a.data(), int64_t{0}, b.data(), int64_t{0}, c1.data(), 1, n, n, n, false);
    });
    row.gflops = flops / row.parallel_s / 1e9;
    if (std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "mismatch between serial and parallel mm_nt at n=%ld\n", n);
      return 1;
    }
    print_row(row);

    row.name = "mm_tn " + std::to_string(n) + "^3";
    row.serial_s = time_best_of(reps, [&] {
      kernels::mm_tn_serial(a.data(), int64_t{0}, b.data(), int64_t{0}, c0.data(), 1, n, n, n, false);
    });
    row.parallel_s = time_best_of(reps, [&] {
      kernels::mm_tn_parallel(a.data(), int64_t{0}, b.data(), int64_t{0}, c1.data(), 1, n, n, n, false);
    });
    row.gflops = flops / row.parallel_s / 1e9;
    if (std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "mismatch between serial and parallel mm_tn at n=%ld\n", n);
      return 1;
    }
    print_row(row);
  }

  {
    const int64_t rows = 4096, len = 64;
    std::vector<float> x(static_cast<size_t>(rows * len)), y0(x.size()), y1(x.size());
    fill_random(x, rng);
    int64_t bad = -1;
    Row row;
    row.name = "softmax 4096x64";
    row.serial_s = time_best_of(reps, [&] {
      kernels::softmax_rows_serial(x.data(), y0.data(), rows, len, int64_t{1}, len, &bad);
    });
    row.parallel_s = time_best_of(reps, [&] {
      kernels::softmax_rows_parallel(x.data(), y1.data(), rows, len, int64_t{1}, len, &bad);
    });
    row.gflops = static_cast<double>(rows * len) * 4.0 / row.parallel_s / 1e9;
    if (std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "mismatch between serial and parallel softmax\n");
      return 1;
    }
    print_row(row);
  }

  {
    const int64_t rows = 4096, C = 128;
    std::vector<float> x(static_cast<size_t>(rows * C)), g(static_cast<size_t>(C), 1.0f),
        b(static_cast<size_t>(C), 0.0f);
    std::vector<float> y0(x.size()), y1(x.size()), h(x.size()),
        istd(static_cast<size_t>(rows));
    fill_random(x, rng);
    Row row;
    row.name = "layernorm 4096x128";
    row.serial_s = time_best_of(reps, [&] {
      kernels::layernorm_rows_serial(x.data(), g.data(), b.data(), y0.data(), h.data(),
                                     istd.data(), rows, C, 1e-5f);
    });
    row.parallel_s = time_best_of(reps, [&] {
      kernels::layernorm_rows_parallel(x.data(), g.data(), b.data(), y1.data(), h.data(),
                                       istd.data(), rows, C, 1e-5f);
    });
    row.gflops = static_cast<double>(rows * C) * 6.0 / row.parallel_s / 1e9;
    if (std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "mismatch between serial and parallel layernorm\n");
      return 1;
    }
    print_row(row);
  }

  {
    const int64_t n = 1 << 20;
    std::vector<float> x(static_cast<size_t>(n)), y0(x.size()), y1(x.size());
    fill_random(x, rng);
    Row row;
    row.name = "gelu 1M";
    row.serial_s = time_best_of(reps, [&] { kernels::gelu_forward_serial(x.data(), y0.data(), n); });
    row.parallel_s =
        time_best_of(reps, [&] { kernels::gelu_forward_parallel(x.data(), y1.data(), n); });
    row.gflops = static_cast<double>(n) * 8.0 / row.parallel_s / 1e9;
    if (std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) != 0) {
      std::fprintf(stderr, "mismatch between serial and parallel gelu\n");
      return 1;
    }
    print_row(row);
  }

  return 0;
}
