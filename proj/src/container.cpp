#include "gazebench/container.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gazebench/errors.hpp"

namespace gazebench {

namespace {

constexpr char kMagic[4] = {'G', 'Z', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

std::int64_t element_count(const NamedTensor& t) {
  std::int64_t n = 1;
  for (const std::int64_t dim : t.shape) n *= dim;
  return n;
}

}  // namespace

const NamedTensor* TensorContainer::find(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_container(const std::string& path, const TensorContainer& container) {
  nlohmann::json header;
  header["kind"] = container.kind;
  header["meta"] = container.meta;
  nlohmann::json directory = nlohmann::json::array();
  for (const NamedTensor& t : container.tensors) {
    if (element_count(t) != static_cast<std::int64_t>(t.data.size())) {
      throw ValidationError("tensor '" + t.name + "': shape does not match data size");
    }
    directory.push_back({{"name", t.name}, {"shape", t.shape}});
  }
  header["tensors"] = directory;
  const std::string header_bytes = header.dump();

  std::string out;
  out.append(kMagic, 4);
  append_u32_le(out, kVersion);
  append_u64_le(out, header_bytes.size());
  out += header_bytes;
  for (const NamedTensor& t : container.tensors) {
    static_assert(std::endian::native == std::endian::little,
                  "tensor serialization assumes a little-endian host");
    const char* raw = reinterpret_cast<const char*>(t.data.data());
    out.append(raw, t.data.size() * sizeof(float));
  }
  atomic_write_file(path, out);
}

TensorContainer read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("'" + path + "' is not a tensor container (bad magic)");
  }
  const std::uint32_t version = read_u32_le(in);
  if (version != kVersion) {
    throw ValidationError("'" + path + "': unsupported container version " +
                          std::to_string(version));
  }
  const std::uint64_t header_len = read_u64_le(in);
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ValidationError("'" + path + "': truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path + "': invalid container header: " + e.what());
  }

  TensorContainer container;
  container.kind = header.value("kind", std::string{});
  container.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    NamedTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const std::int64_t n = element_count(t);
    if (n < 0) throw ValidationError("tensor '" + t.name + "': negative shape");
    t.data.resize(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw ValidationError("'" + path + "': truncated tensor '" + t.name + "'");
    container.tensors.push_back(std::move(t));
  }
  return container;
}

}  // namespace gazebench
