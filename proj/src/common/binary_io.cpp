// SPDX-License-Identifier: Apache-2.0
#include "winoattn/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "winoattn/error.hpp"

namespace winoattn {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

void ByteWriter::put_bytes(std::string_view s) { buf_.append(s); }

void ByteWriter::put_u32(std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf_.append(b, 4);
}

void ByteWriter::put_f32(float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf_.append(b, 4);
}

void ByteWriter::put_f32s(std::span<const float> v) {
  buf_.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
}

void ByteWriter::put_string(std::string_view s) {
  put_u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

std::string_view ByteReader::get_bytes(std::size_t n, std::string_view what) {
  if (remaining() < n)
    throw FormatError("truncated input while reading " + std::string(what) + ": need " +
                      std::to_string(n) + " bytes, have " + std::to_string(remaining()));
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::get_u32(std::string_view what) {
  auto b = get_bytes(4, what);
  std::uint32_t v;
  std::memcpy(&v, b.data(), 4);
  return v;
}

void ByteReader::get_f32s(std::span<float> out, std::string_view what) {
  auto b = get_bytes(out.size_bytes(), what);
  std::memcpy(out.data(), b.data(), b.size());
}

std::string ByteReader::get_string(std::string_view what, std::size_t max_len) {
  auto n = get_u32(what);
  if (n > max_len) throw FormatError(std::string(what) + ": implausible length " + std::to_string(n));
  return std::string(get_bytes(n, what));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("write failed: " + path);
}

}  // namespace winoattn
