#include "ic/num/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ic::num {

namespace {
constexpr char kMagic[4] = {'I', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  check(static_cast<bool>(is), "I/O error: truncated checkpoint");
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  check(static_cast<bool>(os), "I/O error: cannot open ", path, " for writing");
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    check(p.name.size() < 65536, "I/O error: parameter name too long");
    write_pod(os, static_cast<uint16_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_pod(os, static_cast<uint8_t>(p.tensor.dtype()));
    write_pod(os, static_cast<uint8_t>(p.tensor.rank()));
    for (int64_t e : p.tensor.shape()) write_pod(os, e);
    dispatch_dtype(p.tensor.dtype(), [&](auto tag) {
      using T = decltype(tag);
      os.write(reinterpret_cast<const char*>(p.tensor.data<T>()),
               static_cast<std::streamsize>(sizeof(T) * static_cast<size_t>(p.tensor.numel())));
    });
  }
  check(static_cast<bool>(os), "I/O error: failed writing checkpoint to ", path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(static_cast<bool>(is), "I/O error: cannot open checkpoint ", path);
  char magic[4];
  is.read(magic, 4);
  check(static_cast<bool>(is) && std::memcmp(magic, kMagic, 4) == 0,
        "format error: ", path, " is not a checkpoint file");
  const uint32_t version = read_pod<uint32_t>(is);
  check(version == kVersion, "format error: unsupported checkpoint version ", version);
  const uint32_t count = read_pod<uint32_t>(is);
  std::vector<NamedTensor> params;
  params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = read_pod<uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    check(static_cast<bool>(is), "I/O error: truncated checkpoint");
    const auto dtype = static_cast<DType>(read_pod<uint8_t>(is));
    const uint8_t rank = read_pod<uint8_t>(is);
    Shape shape(rank);
    for (uint8_t d = 0; d < rank; ++d) shape[d] = read_pod<int64_t>(is);
    Tensor t = zeros(shape, dtype);
    dispatch_dtype(dtype, [&](auto tag) {
      using T = decltype(tag);
      is.read(reinterpret_cast<char*>(t.data<T>()),
              static_cast<std::streamsize>(sizeof(T) * static_cast<size_t>(t.numel())));
    });
    check(static_cast<bool>(is), "I/O error: truncated checkpoint");
    params.push_back({std::move(name), std::move(t)});
  }
  return params;
}

}  // namespace ic::num
