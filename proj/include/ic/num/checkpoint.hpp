#pragma once
#include <string>
#include <vector>

#include "ic/num/tensor.hpp"

namespace ic::num {

// Binary parameter container. Layout, all little-endian:
//   magic "ICKP" | u32 version (1) | u32 entry count
//   per entry: u16 name length | name bytes | u8 dtype | u8 rank
//              | i64 extent per rank dim | raw row-major data
// Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& params);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace ic::num
