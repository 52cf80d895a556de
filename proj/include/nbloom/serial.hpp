#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "nbloom/error.hpp"

namespace nbloom {

// Little-endian helpers for the binary container formats.
class ByteWriter {
 public:
  explicit ByteWriter(const char (&magic)[5]) : bytes_(magic, magic + 4) {}

  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const char (&magic)[5]) : bytes_(bytes), magic_(magic) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), magic, 4) != 0) {
      throw DataError(magic_ + ": bad magic at offset 0");
    }
    pos_ = 4;
  }

  std::uint64_t read(int width) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(width)) {
      throw DataError(magic_ + ": truncated at offset " + std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint16_t u16() { return static_cast<std::uint16_t>(read(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  std::uint64_t u64() { return read(8); }
  float f32() {
    const auto bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const auto bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::size_t offset() const { return pos_; }
  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw DataError(magic_ + ": trailing bytes at offset " + std::to_string(pos_));
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string magic_;
  std::size_t pos_ = 0;
};

}  // namespace nbloom
