#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace erpdepth {

struct NamedTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

struct TensorFile {
  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, std::string> metadata;
};

// Layout: u64 little-endian header size N, N bytes of JSON
//   {"__metadata__": {...}, "<name>": {"dtype": "F32", "shape": [...],
//    "data_offsets": [begin, end]}, ...}
// followed by the concatenated little-endian float32 payloads.
void write_tensor_file(const std::string& path, const TensorFile& file);
TensorFile read_tensor_file(const std::string& path);

}  // namespace erpdepth
