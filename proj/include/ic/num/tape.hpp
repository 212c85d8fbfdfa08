#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ic::num {

// One recorded primitive. The backward closure reads the output gradient and
// accumulates into the input gradients; it owns shared_ptrs to everything it
// touches.
struct TapeNode {
  const char* op;
  std::function<void()> backward;
};

// Ordered record of operations. Confined to one logical thread; parallel
// training uses one tape per worker.
class GradientTape {
 public:
  int64_t record(const char* op, std::function<void()> fn) {
    nodes_.push_back(TapeNode{op, std::move(fn)});
    return static_cast<int64_t>(nodes_.size()) - 1;
  }

  // Reverse creation order, each node exactly once.
  void replay_backward() const {
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
  }

  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }
  void clear() { nodes_.clear(); }

  static GradientTape* current();

 private:
  std::vector<TapeNode> nodes_;
};

// RAII scope installing a tape as the recording target for the current thread.
class TapeScope {
 public:
  explicit TapeScope(GradientTape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradientTape* prev_;
};

}  // namespace ic::num
