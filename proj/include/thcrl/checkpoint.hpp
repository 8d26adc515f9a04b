#pragma once

// Checkpoints are two files: "<base>.bin" holding the raw little-endian
// parameter arrays back to back, and "<base>.json" indexing them by name,
// shape and byte offset, plus an arch meta block. Arrays are f32 when written
// by an f32 run and f64 when written by an f64 run (the index records which),
// so a save/load round trip inside one precision mode is bit-exact.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "thcrl/nn.hpp"

namespace thcrl {

template <typename T>
constexpr const char* dtype_name();
template <>
constexpr const char* dtype_name<float>() {
  return "f32";
}
template <>
constexpr const char* dtype_name<double>() {
  return "f64";
}

template <typename T>
void save_checkpoint(const std::string& base, const NamedParams<T>& params,
                     const nlohmann::json& meta) {
  std::ofstream bin(base + ".bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write checkpoint data " + base + ".bin");
  nlohmann::json index;
  index["dtype"] = dtype_name<T>();
  index["meta"] = meta;
  nlohmann::json plist = nlohmann::json::array();
  int64_t offset = 0;
  for (const auto& [name, tensor] : params) {
    nlohmann::json p;
    p["name"] = name;
    p["shape"] = tensor.shape();
    p["offset"] = offset;
    plist.push_back(p);
    bin.write(reinterpret_cast<const char*>(tensor.value().data()),
              std::streamsize(tensor.value().size() * sizeof(T)));
    offset += int64_t(tensor.value().size() * sizeof(T));
  }
  if (!bin) throw IoError("short write on checkpoint data " + base + ".bin");
  index["params"] = std::move(plist);
  std::ofstream idx(base + ".json", std::ios::trunc);
  if (!idx) throw IoError("cannot write checkpoint index " + base + ".json");
  idx << index.dump(2) << "\n";
}

inline nlohmann::json read_checkpoint_index(const std::string& base) {
  std::ifstream idx(base + ".json");
  if (!idx) throw IoError("cannot open checkpoint index " + base + ".json");
  nlohmann::json index;
  try {
    idx >> index;
  } catch (const std::exception& e) {
    throw IoError("malformed checkpoint index " + base + ".json: " + e.what());
  }
  for (const char* key : {"dtype", "meta", "params"})
    if (!index.contains(key))
      throw IoError("checkpoint index " + base + ".json missing field '" + key + "'");
  return index;
}

// Loads the named arrays into the caller's tensors, which must match the
// index entry for entry in both name and shape. Stored f32/f64 values are
// converted to T.
template <typename T>
nlohmann::json load_checkpoint(const std::string& base, const NamedParams<T>& params) {
  nlohmann::json index = read_checkpoint_index(base);
  std::string dtype = index["dtype"].get<std::string>();
  if (dtype != "f32" && dtype != "f64")
    throw IoError("checkpoint " + base + ": unknown dtype " + dtype);
  size_t elem = dtype == "f32" ? sizeof(float) : sizeof(double);

  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint data " + base + ".bin");

  const auto& plist = index["params"];
  if (plist.size() != params.size())
    throw ShapeError("checkpoint " + base + ": holds " + std::to_string(plist.size()) +
                     " params, model expects " + std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& entry = plist[i];
    const auto& [name, tensor] = params[i];
    if (entry["name"].get<std::string>() != name)
      throw ShapeError("checkpoint " + base + ": param " + std::to_string(i) + " is '" +
                       entry["name"].get<std::string>() + "', model expects '" + name + "'");
    Shape shape = entry["shape"].get<Shape>();
    if (shape != tensor.shape())
      throw ShapeError("checkpoint " + base + ": param '" + name + "' has shape " +
                       shape_str(shape) + ", model expects " + shape_str(tensor.shape()));
    bin.seekg(entry["offset"].get<int64_t>());
    std::vector<char> raw(tensor.value().size() * elem);
    bin.read(raw.data(), std::streamsize(raw.size()));
    if (!bin) throw IoError("short read on checkpoint data " + base + ".bin");
    if (dtype == "f32") {
      const float* src = reinterpret_cast<const float*>(raw.data());
      for (size_t j = 0; j < tensor.value().size(); ++j) tensor.value()[j] = T(src[j]);
    } else {
      const double* src = reinterpret_cast<const double*>(raw.data());
      for (size_t j = 0; j < tensor.value().size(); ++j) tensor.value()[j] = T(src[j]);
    }
  }
  return index["meta"];
}

}  // namespace thcrl
