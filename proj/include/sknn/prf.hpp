#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sknn {

using PrfKey = std::array<uint64_t, 2>;  // 128-bit key

// SipHash-2-4 with a 128-bit key (reference construction). Deterministic
// keyed 64-bit output; the basis of both the DORAM masking PRF and the DPF
// node expansion.
uint64_t siphash24(const PrfKey& key, const uint8_t* data, size_t len);
uint64_t siphash24_u64(const PrfKey& key, uint64_t m0, uint64_t m1);

// Counter-mode PRF: arbitrary-length output for a (key, index) pair. This is
// the pluggable masking function of the DORAM; the contract is a
// deterministic keyed function with a 128-bit key and arbitrary output
// length. Ciphers with garbling-friendly gate counts (Kreyvium, AES) appear
// in the cost model below; evaluating them in the clear is not required.
std::vector<uint8_t> prf_expand(const PrfKey& key, uint64_t index, size_t out_bytes);

// ---------------------------------------------------------------------------
// Tabulated AND-gate costs for PRF choices evaluated inside a garbled
// circuit, per output size. Sizes follow the source table: 128 bits, 2.7 KiB
// and 6 KiB of output.
inline constexpr uint64_t kPrfOut128Bits = 128;
inline constexpr uint64_t kPrfOut2p7KBBits = 22118;  // 2.7 * 1024 * 8, floored
inline constexpr uint64_t kPrfOut6KBBits = 49152;    // 6 * 1024 * 8

struct PrfCostRow {
  std::string_view cipher;
  uint64_t out_bits;
  uint64_t and_gates;
};

// All rows of the cost table, in report order.
const std::vector<PrfCostRow>& prf_cost_table();

// AND-gate count for cipher in {"aes-128", "chacha20", "kreyvium"} at one of
// the tabulated output sizes. Unknown cipher/size throws.
uint64_t prf_cost(std::string_view cipher, uint64_t out_bits);

}  // namespace sknn
