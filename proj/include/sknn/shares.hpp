#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sknn/rng.hpp"

namespace sknn {

// Additive share modulo t (t a power of two throughout this project, so share
// arithmetic is plain wrapping arithmetic at width b_d).
struct ArithShare {
  uint64_t value = 0;
  uint64_t modulus = 0;
};

// XOR share of a bit string of up to 64 bits.
struct XorShare {
  uint64_t bits = 0;
  uint32_t width = 0;
};

inline uint64_t mod_add(uint64_t a, uint64_t b, uint64_t t) { return (a + b) & (t - 1); }
inline uint64_t mod_sub(uint64_t a, uint64_t b, uint64_t t) { return (a - b) & (t - 1); }
inline uint64_t mod_mul(uint64_t a, uint64_t b, uint64_t t) { return (a * b) & (t - 1); }
inline uint64_t mod_neg(uint64_t a, uint64_t t) { return (t - (a & (t - 1))) & (t - 1); }

std::pair<ArithShare, ArithShare> share_arith(uint64_t secret, uint64_t t, Rng& rng);
uint64_t reconstruct(const ArithShare& c, const ArithShare& s);

std::pair<XorShare, XorShare> share_xor(uint64_t secret, uint32_t width, Rng& rng);
uint64_t reconstruct(const XorShare& c, const XorShare& s);

// ---------------------------------------------------------------------------
// Boolean-to-arithmetic conversion.
//
// Per secret bit the dealer hands out a correlated-randomness triple: the
// client learns a random a, the server a random b, and each an additive share
// of a*b mod t. The parties exchange one masked value each (d = x_c - a from
// the client, e = x_s - b from the server) and assemble additive shares of
// x_c XOR x_s = x_c + x_s - 2*x_c*x_s locally. The dealer replaces an OT
// phase and is confined to the test/bench trust model.

struct B2aClientBit {
  uint64_t a = 0;
  uint64_t ab_share = 0;
};
struct B2aServerBit {
  uint64_t b = 0;
  uint64_t ab_share = 0;
};

std::pair<std::vector<B2aClientBit>, std::vector<B2aServerBit>> b2a_dealer_material(
    size_t bit_count, uint64_t t, Rng& rng);

// Party-side steps; `x_bits` holds one 0/1 entry per converted bit, in the
// order the material was issued.
std::vector<uint64_t> b2a_client_masked(const std::vector<uint8_t>& x_bits,
                                        const std::vector<B2aClientBit>& mat, uint64_t t);
std::vector<uint64_t> b2a_server_masked(const std::vector<uint8_t>& x_bits,
                                        const std::vector<B2aServerBit>& mat, uint64_t t);

// Final per-bit arithmetic shares of x_c XOR x_s.
std::vector<uint64_t> b2a_client_bit_shares(const std::vector<uint8_t>& x_bits,
                                            const std::vector<uint64_t>& e_peer,
                                            const std::vector<B2aClientBit>& mat, uint64_t t);
std::vector<uint64_t> b2a_server_bit_shares(const std::vector<uint8_t>& x_bits,
                                            const std::vector<uint64_t>& d_peer,
                                            const std::vector<B2aServerBit>& mat, uint64_t t);

// Weighted recombination of consecutive per-bit shares into one value share.
uint64_t b2a_weigh(const std::vector<uint64_t>& bit_shares, size_t offset, uint32_t width,
                   uint64_t t);

// In-process composition of the full conversion, dealer included. Width must
// not exceed log2(t).
std::pair<ArithShare, ArithShare> b2a_convert(const XorShare& x_c, const XorShare& x_s, uint64_t t,
                                              Rng& rng);

}  // namespace sknn
