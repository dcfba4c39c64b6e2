#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lulc/core/binary.hpp"
#include "lulc/nn/optimizer.hpp"

namespace lulc::nn {

inline constexpr char kCheckpointMagic[8] = {'L', 'U', 'L', 'C', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kCheckpointTrailer = 0x444E454Cu;  // "LEND"

enum class TensorSection : std::uint8_t { param = 0, buffer = 1, velocity = 2 };
inline constexpr std::uint8_t kDtypeF32 = 1;

struct Checkpoint {
  Model<float> model;
  OptimizerState<float> optimizer;
  std::uint64_t epoch = 0;
};

namespace detail {

inline void put_tensor(ByteWriter& w, const std::string& name, TensorSection section, const Tensor<float>& t) {
  w.put_string(name);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(section));
  w.put<std::uint8_t>(kDtypeF32);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) w.put<std::uint64_t>(d);
  w.put_bytes(t.data(), t.size() * sizeof(float));
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const Model<float>& model, const OptimizerState<float>& opt,
                                                    std::uint64_t epoch) {
  check_model(model);
  ByteWriter w;
  w.put_bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_string(model.config.to_text());
  w.put<std::uint64_t>(epoch);
  w.put<double>(opt.lr);
  w.put<double>(opt.momentum);
  w.put<std::uint64_t>(model.params.size() + model.buffers.size() + opt.velocity.size());
  for (const auto& [n, t] : model.params) detail::put_tensor(w, n, TensorSection::param, t);
  for (const auto& [n, t] : model.buffers) detail::put_tensor(w, n, TensorSection::buffer, t);
  for (const auto& [n, t] : opt.velocity) detail::put_tensor(w, n, TensorSection::velocity, t);
  w.put<std::uint32_t>(kCheckpointTrailer);
  return w.bytes();
}

/// Decodes a checkpoint. With `expected`, the stored tensors are checked against
/// that configuration instead of the one embedded in the file.
inline Checkpoint decode_checkpoint(std::span<const unsigned char> bytes, const std::string& source,
                                    const std::optional<NetworkConfig>& expected = std::nullopt) {
  ByteReader r(bytes, source);
  char magic[8];
  r.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) throw FormatError(source + ": not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw VersionError(source + ": checkpoint version " + std::to_string(version) + ", this build reads version " +
                       std::to_string(kCheckpointVersion));
  Checkpoint ck;
  ck.model.config = NetworkConfig::from_text(r.get_string());
  ck.epoch = r.get<std::uint64_t>();
  ck.optimizer.lr = r.get<double>();
  ck.optimizer.momentum = r.get<double>();
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.get_string();
    const auto section = r.get<std::uint8_t>();
    const auto dtype = r.get<std::uint8_t>();
    if (dtype != kDtypeF32) throw FormatError(source + ": tensor '" + name + "' has unknown dtype tag");
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError(source + ": tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    Tensor<float> t(shape);
    r.get_bytes(t.data(), t.size() * sizeof(float));
    ParamMap<float>* dest = nullptr;
    switch (section) {
      case 0: dest = &ck.model.params; break;
      case 1: dest = &ck.model.buffers; break;
      case 2: dest = &ck.optimizer.velocity; break;
      default: throw FormatError(source + ": tensor '" + name + "' has unknown section");
    }
    if (!dest->emplace(name, std::move(t)).second) throw FormatError(source + ": duplicate tensor '" + name + "'");
  }
  if (r.get<std::uint32_t>() != kCheckpointTrailer || !r.at_end())
    throw FormatError(source + ": unexpected bytes after the tensor records");

  if (expected) ck.model.config = *expected;
  check_model(ck.model);
  for (const auto& [name, v] : ck.optimizer.velocity) {
    auto it = ck.model.params.find(name);
    if (it == ck.model.params.end()) throw ShapeError("velocity '" + name + "' has no matching parameter");
    if (it->second.shape() != v.shape())
      throw ShapeError("velocity '" + name + "' has shape " + shape_string(v.shape()) + ", parameter has " +
                       shape_string(it->second.shape()));
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                            const OptimizerState<float>& opt, std::uint64_t epoch) {
  write_binary_file(path, encode_checkpoint(model, opt, epoch));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  const std::optional<NetworkConfig>& expected = std::nullopt) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("checkpoint not found: " + path.string());
  const auto bytes = read_binary_file(path);
  return decode_checkpoint(bytes, path.string(), expected);
}

}  // namespace lulc::nn
