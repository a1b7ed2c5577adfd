#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ovnet {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Error taxonomy. Every failure mode the library reports is one of these.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : Error { using Error::Error; };
struct InvalidParameter : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };
struct EmbedFailure : Error {
  EmbedFailure(const std::string& what, std::size_t index = 0) : Error(what), index(index) {}
  std::size_t index;
};
struct BindingError : Error { using Error::Error; };
struct SignatureError : Error { using Error::Error; };
struct RegistrationError : Error { using Error::Error; };
struct AmbiguityError : Error {
  AmbiguityError(const std::string& what, std::vector<std::size_t> hits)
      : Error(what), hits(std::move(hits)) {}
  std::vector<std::size_t> hits;
};
struct CapacityError : Error { using Error::Error; };
struct CreditError : Error { using Error::Error; };

// Little-endian canonical byte writer. All hashed/signed layouts go through it.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void raw(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void blob(ByteView b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  const Bytes& bytes() const& { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  Bytes buf_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView b) : b_(b) {}

  std::uint8_t u8() { need(1); return b_[pos_++]; }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  ByteView raw(std::size_t n) {
    need(n);
    auto out = b_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  Bytes blob() {
    auto n = u32();
    auto v = raw(n);
    return {v.begin(), v.end()};
  }
  std::string str() {
    auto v = blob();
    return {v.begin(), v.end()};
  }
  bool done() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }
  void expect_done() const {
    if (!done()) throw FormatError("trailing bytes after record");
  }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("truncated input");
  }
  ByteView b_;
  std::size_t pos_ = 0;
};

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view hex);

inline Bytes concat(std::initializer_list<ByteView> parts) {
  Bytes out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace ovnet
