#include "erpdepth/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "erpdepth/errors.hpp"

namespace erpdepth {
namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor files are written with native little-endian floats");

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

void write_tensor_file(const std::string& path, const TensorFile& file) {
  nlohmann::ordered_json header;
  if (!file.metadata.empty()) header["__metadata__"] = file.metadata;
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : file.tensors) {
    if (element_count(tensor.shape) != static_cast<std::int64_t>(tensor.data.size())) {
      throw ConfigError("tensor '" + name + "' shape does not match its data");
    }
    const std::uint64_t bytes = tensor.data.size() * sizeof(float);
    header[name] = {{"dtype", "F32"},
                    {"shape", tensor.shape},
                    {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string text = header.dump();
  // Pad the header so the payload starts 8-byte aligned.
  while (text.size() % 8 != 0) text.push_back(' ');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  const std::uint64_t header_size = text.size();
  out.write(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, tensor] : file.tensors) {
    out.write(reinterpret_cast<const char*>(tensor.data.data()),
              static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
  }
  if (!out) throw InputError("failed writing '" + path + "'");
}

TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw InputError("'" + path + "' is too short to be a tensor file");
  std::uint64_t header_size = 0;
  std::memcpy(&header_size, bytes.data(), sizeof(header_size));
  if (header_size > bytes.size() - 8) throw InputError("'" + path + "' has a truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_size));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "' header: " + e.what());
  }
  const std::size_t payload = 8 + header_size;
  TensorFile file;
  try {
    for (const auto& [name, entry] : header.items()) {
      if (name == "__metadata__") {
        file.metadata = entry.get<std::map<std::string, std::string>>();
        continue;
      }
      if (entry.at("dtype").get<std::string>() != "F32") {
        throw InputError("tensor '" + name + "' has unsupported dtype");
      }
      NamedTensor tensor;
      tensor.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offsets.size() != 2 || offsets[1] < offsets[0] ||
          payload + offsets[1] > bytes.size()) {
        throw InputError("tensor '" + name + "' has invalid data offsets");
      }
      const std::uint64_t count = (offsets[1] - offsets[0]) / sizeof(float);
      if (static_cast<std::int64_t>(count) != element_count(tensor.shape)) {
        throw InputError("tensor '" + name + "' shape does not match its byte range");
      }
      tensor.data.resize(count);
      std::memcpy(tensor.data.data(), bytes.data() + payload + offsets[0], count * sizeof(float));
      file.tensors.emplace(name, std::move(tensor));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path + "' header: " + e.what());
  }
  return file;
}

}  // namespace erpdepth
