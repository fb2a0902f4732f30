#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agrame/error.hpp"

namespace agrame::detail {

// Little-endian encoder into an in-memory buffer.
class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int k = 0; k < 2; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  // Rounds to binary32 on the way out.
  void f32s(std::span<const double> vs) {
    for (double v : vs) f32(static_cast<float>(v));
  }

  const std::string& buffer() const noexcept { return buf_; }

 private:
  std::string buf_;
};

// Bounds-checked little-endian decoder. Running past the end raises
// Error(Corrupt, "corrupt index: ...").
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    std::uint16_t v = 0;
    for (int k = 0; k < 2; ++k) v |= static_cast<std::uint16_t>(u8()) << (8 * k);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(u8()) << (8 * k);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::vector<double> f32s(std::size_t n) {
    need(n * 4);
    std::vector<double> out(n);
    for (auto& v : out) v = f32();
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorKind::Corrupt, "corrupt index: truncated payload");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace agrame::detail
