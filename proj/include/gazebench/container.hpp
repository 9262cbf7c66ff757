#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace gazebench {

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;  // row-major
};

// Versioned binary container: magic "GZTC", u32 version, u64 header length,
// JSON header (kind, meta, tensor directory), then each tensor's values as
// little-endian 32-bit floats in directory order.
struct TensorContainer {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

void write_container(const std::string& path, const TensorContainer& container);
TensorContainer read_container(const std::string& path);

// write-temp-then-rename
void atomic_write_file(const std::string& path, const std::string& bytes);

}  // namespace gazebench
