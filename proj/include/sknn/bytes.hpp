#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace sknn {

// Little-endian serialization helpers shared by the wire protocol and the
// on-disk formats. All multi-byte integers are fixed-width little-endian.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { append(&v, 2); }
  void u32(uint32_t v) { append(&v, 4); }
  void u64(uint64_t v) { append(&v, 8); }
  void f32(float v) { append(&v, 4); }
  void f64(double v) { append(&v, 8); }
  void bytes(const uint8_t* p, size_t len) { buf_.insert(buf_.end(), p, p + len); }
  void bytes(const std::vector<uint8_t>& v) { bytes(v.data(), v.size()); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  void append(const void* p, size_t len) {
    // Host is little-endian on every platform this project targets; keep the
    // byte order explicit anyway.
    const uint8_t* b = static_cast<const uint8_t*>(p);
    uint64_t v = 0;
    std::memcpy(&v, b, len);
    for (size_t i = 0; i < len; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }

  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t len) : data_(data), len_(len) {}
  explicit ByteReader(const std::vector<uint8_t>& v) : data_(v.data()), len_(v.size()) {}

  uint8_t u8() { return take(1) ? static_cast<uint8_t>(scratch_) : 0; }
  uint16_t u16() { return take(2) ? static_cast<uint16_t>(scratch_) : 0; }
  uint32_t u32() { return take(4) ? static_cast<uint32_t>(scratch_) : 0; }
  uint64_t u64() { return take(8) ? scratch_ : 0; }
  float f32() {
    uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  double f64() {
    uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::vector<uint8_t> bytes(size_t len) {
    require(len);
    std::vector<uint8_t> out(data_ + pos_, data_ + pos_ + len);
    pos_ += len;
    return out;
  }
  std::string str() {
    uint64_t n = u64();
    require(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return len_ - pos_; }
  bool done() const { return pos_ == len_; }

 private:
  bool take(size_t n) {
    require(n);
    scratch_ = 0;
    for (size_t i = 0; i < n; ++i) scratch_ |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return true;
  }
  void require(size_t n) const {
    if (pos_ + n > len_) throw std::runtime_error("ByteReader: truncated input");
  }

  const uint8_t* data_;
  size_t len_;
  size_t pos_ = 0;
  uint64_t scratch_ = 0;
};

// Bit-level packing, LSB-first within the byte stream. Used for DORAM block
// layout where field widths are not byte multiples.
class BitWriter {
 public:
  void put(uint64_t value, uint32_t width) {
    for (uint32_t i = 0; i < width; ++i) {
      if (bit_ == 0) buf_.push_back(0);
      if ((value >> i) & 1) buf_.back() |= static_cast<uint8_t>(1u << bit_);
      bit_ = (bit_ + 1) & 7;
    }
  }
  size_t bit_count() const { return buf_.size() * 8 - (bit_ == 0 ? 0 : 8 - bit_); }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
  uint32_t bit_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* data, size_t len) : data_(data), len_bits_(len * 8) {}
  explicit BitReader(const std::vector<uint8_t>& v) : BitReader(v.data(), v.size()) {}

  uint64_t get(uint32_t width) {
    uint64_t out = 0;
    for (uint32_t i = 0; i < width; ++i) {
      if (pos_ >= len_bits_) throw std::runtime_error("BitReader: out of bits");
      if ((data_[pos_ >> 3] >> (pos_ & 7)) & 1) out |= 1ULL << i;
      ++pos_;
    }
    return out;
  }
  void seek_bits(size_t bit_pos) { pos_ = bit_pos; }

 private:
  const uint8_t* data_;
  size_t len_bits_;
  size_t pos_ = 0;
};

}  // namespace sknn
