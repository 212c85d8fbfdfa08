#include "ic/num/kernels.hpp"

#include <atomic>

namespace ic::num::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

}  // namespace ic::num::kernels
