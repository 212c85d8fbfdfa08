#pragma once
#include <sstream>
#include <stdexcept>
#include <string>

namespace ic {

// All recoverable failures surface as ic::Error with a category prefix in the
// message ("shape mismatch:", "interval error:", ...). Tests match on the prefix.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void append_all(std::ostringstream&) {}
template <typename T, typename... Rest>
void append_all(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  append_all(os, rest...);
}
}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
  std::ostringstream os;
  detail::append_all(os, args...);
  throw Error(os.str());
}

template <typename... Args>
void check(bool cond, const Args&... args) {
  if (!cond) fail(args...);
}

}  // namespace ic
