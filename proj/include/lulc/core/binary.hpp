#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "lulc/core/error.hpp"

namespace lulc {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for big-endian hosts");

/// Appends little-endian encodings to a byte buffer.
class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

/// Bounds-checked reader; running past the end raises TruncatedFileError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> data, std::string source = {})
      : data_(data), source_(std::move(source)) {}

  template <typename T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string(std::size_t max_len = 1u << 24) {
    const auto n = get<std::uint32_t>();
    if (n > max_len) throw FormatError(source_ + ": string length " + std::to_string(n) + " is implausible");
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n)
      throw TruncatedFileError(source_ + ": truncated at byte " + std::to_string(pos_) + " (needed " +
                               std::to_string(n) + " more bytes)");
  }
  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
  std::string source_;
};

inline std::vector<unsigned char> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> buf(size);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed for " + path.string());
  return buf;
}

inline void write_binary_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<float> read_f32_file(const std::filesystem::path& path, std::size_t expected_count) {
  auto bytes = read_binary_file(path);
  const std::size_t want = expected_count * sizeof(float);
  if (bytes.size() < want)
    throw TruncatedFileError(path.string() + ": expected " + std::to_string(want) + " bytes, found " +
                             std::to_string(bytes.size()));
  if (bytes.size() > want)
    throw FormatError(path.string() + ": expected " + std::to_string(want) + " bytes, found " +
                      std::to_string(bytes.size()));
  std::vector<float> out(expected_count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

inline void write_f32_file(const std::filesystem::path& path, std::span<const float> values) {
  write_binary_file(path, std::span(reinterpret_cast<const unsigned char*>(values.data()),
                                    values.size() * sizeof(float)));
}

}  // namespace lulc
