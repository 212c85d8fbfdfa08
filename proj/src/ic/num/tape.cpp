#include "ic/num/tape.hpp"

namespace ic::num {

namespace {
thread_local GradientTape* g_current_tape = nullptr;
}

GradientTape* GradientTape::current() { return g_current_tape; }

TapeScope::TapeScope(GradientTape& tape) : prev_(g_current_tape) { g_current_tape = &tape; }

TapeScope::~TapeScope() { g_current_tape = prev_; }

}  // namespace ic::num
