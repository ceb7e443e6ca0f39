#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lgm/error.hpp"

namespace lgm::io {

//! Little-endian primitive writer on top of an ostream.
class BinaryWriter {
public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }

  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  template <typename Container>
  void f64s(const Container& values) {
    for (double v : values) f64(v);
  }

private:
  void put_le(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(buf, bytes);
  }

  std::ostream& out_;
};

//! Reader counterpart; every short read raises DataError.
class BinaryReader {
public:
  explicit BinaryReader(std::istream& in, std::string context) : in_(in), context_(std::move(context)) {}

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in_ || got != tag) throw DataError(context_ + ": bad magic, expected '" + std::string(tag) + "'");
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get_le(8)); }
  double f64() { return std::bit_cast<double>(get_le(8)); }

  std::string str() {
    const auto size = u64();
    if (size > (1u << 20)) throw DataError(context_ + ": string field too long");
    std::string s(size, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(size));
    if (!in_) throw DataError(context_ + ": truncated file");
    return s;
  }

  //! Bounded element count; guards allocation against corrupt headers.
  std::uint64_t count(std::uint64_t limit) {
    const auto n = u64();
    if (n > limit) throw DataError(context_ + ": element count " + std::to_string(n) + " exceeds limit");
    return n;
  }

  //! Throws unless the stream is exhausted.
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw DataError(context_ + ": trailing bytes after the payload");
  }

  const std::string& context() const { return context_; }

private:
  std::uint64_t get_le(int bytes) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), bytes);
    if (!in_) throw DataError(context_ + ": truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  std::istream& in_;
  std::string context_;
};

}  // namespace lgm::io
