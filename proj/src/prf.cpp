#include "sknn/prf.hpp"

#include <cstring>
#include <stdexcept>

namespace sknn {

namespace {

inline uint64_t rotl(uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

struct SipState {
  uint64_t v0, v1, v2, v3;

  explicit SipState(const PrfKey& key) {
    v0 = 0x736f6d6570736575ULL ^ key[0];
    v1 = 0x646f72616e646f6dULL ^ key[1];
    v2 = 0x6c7967656e657261ULL ^ key[0];
    v3 = 0x7465646279746573ULL ^ key[1];
  }

  void round() {
    v0 += v1;
    v1 = rotl(v1, 13);
    v1 ^= v0;
    v0 = rotl(v0, 32);
    v2 += v3;
    v3 = rotl(v3, 16);
    v3 ^= v2;
    v0 += v3;
    v3 = rotl(v3, 21);
    v3 ^= v0;
    v2 += v1;
    v1 = rotl(v1, 17);
    v1 ^= v2;
    v2 = rotl(v2, 32);
  }

  void compress(uint64_t m) {
    v3 ^= m;
    round();
    round();
    v0 ^= m;
  }

  uint64_t finalize() {
    v2 ^= 0xff;
    round();
    round();
    round();
    round();
    return v0 ^ v1 ^ v2 ^ v3;
  }
};

}  // namespace

uint64_t siphash24(const PrfKey& key, const uint8_t* data, size_t len) {
  SipState st(key);
  const size_t full = len / 8;
  for (size_t i = 0; i < full; ++i) {
    uint64_t m;
    std::memcpy(&m, data + 8 * i, 8);
    st.compress(m);
  }
  uint64_t last = static_cast<uint64_t>(len & 0xff) << 56;
  for (size_t i = 0; i < (len & 7); ++i)
    last |= static_cast<uint64_t>(data[full * 8 + i]) << (8 * i);
  st.compress(last);
  return st.finalize();
}

uint64_t siphash24_u64(const PrfKey& key, uint64_t m0, uint64_t m1) {
  SipState st(key);
  st.compress(m0);
  st.compress(m1);
  st.compress(16ULL << 56);  // length block for 16 input bytes
  return st.finalize();
}

std::vector<uint8_t> prf_expand(const PrfKey& key, uint64_t index, size_t out_bytes) {
  std::vector<uint8_t> out(out_bytes);
  size_t pos = 0;
  uint64_t ctr = 0;
  while (pos < out_bytes) {
    const uint64_t block = siphash24_u64(key, index, ctr++);
    const size_t take = std::min<size_t>(8, out_bytes - pos);
    for (size_t i = 0; i < take; ++i) out[pos + i] = static_cast<uint8_t>(block >> (8 * i));
    pos += take;
  }
  return out;
}

const std::vector<PrfCostRow>& prf_cost_table() {
  static const std::vector<PrfCostRow> table = {
      {"aes-128", kPrfOut128Bits, 5000},     {"aes-128", kPrfOut2p7KBBits, 865000},
      {"aes-128", kPrfOut6KBBits, 1920000},  {"chacha20", kPrfOut128Bits, 20480},
      {"chacha20", kPrfOut2p7KBBits, 901120}, {"chacha20", kPrfOut6KBBits, 1966080},
      {"kreyvium", kPrfOut128Bits, 3840},    {"kreyvium", kPrfOut2p7KBBits, 69810},
      {"kreyvium", kPrfOut6KBBits, 150912},
  };
  return table;
}

uint64_t prf_cost(std::string_view cipher, uint64_t out_bits) {
  for (const auto& row : prf_cost_table())
    if (row.cipher == cipher && row.out_bits == out_bits) return row.and_gates;
  throw std::invalid_argument("prf_cost: unknown cipher/output size");
}

}  // namespace sknn
