// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace winoattn {

/// Little-endian writer used by the WATN1 and WDMP1 formats.
class ByteWriter {
 public:
  void put_bytes(std::string_view s);
  void put_u32(std::uint32_t v);
  void put_f32(float v);
  void put_f32s(std::span<const float> v);
  void put_string(std::string_view s);  // u32 length + bytes

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Little-endian reader. All reads throw FormatError on truncation, naming
/// `what` in the message.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view get_bytes(std::size_t n, std::string_view what);
  std::uint32_t get_u32(std::string_view what);
  void get_f32s(std::span<float> out, std::string_view what);
  std::string get_string(std::string_view what, std::size_t max_len = 1u << 20);

  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace winoattn
