#include "sknn/shares.hpp"

#include <stdexcept>

#include "sknn/core.hpp"

namespace sknn {

namespace {
void check_pow2(uint64_t t) {
  if (t == 0 || (t & (t - 1)) != 0) throw std::invalid_argument("shares: modulus must be a power of two");
}
}  // namespace

std::pair<ArithShare, ArithShare> share_arith(uint64_t secret, uint64_t t, Rng& rng) {
  check_pow2(t);
  const uint64_t c = rng.below(t);
  return {ArithShare{c, t}, ArithShare{mod_sub(secret, c, t), t}};
}

uint64_t reconstruct(const ArithShare& c, const ArithShare& s) {
  if (c.modulus != s.modulus) throw std::invalid_argument("reconstruct: modulus mismatch");
  return mod_add(c.value, s.value, c.modulus);
}

std::pair<XorShare, XorShare> share_xor(uint64_t secret, uint32_t width, Rng& rng) {
  if (width == 0 || width > 64) throw std::invalid_argument("share_xor: bad width");
  const uint64_t mask = width >= 64 ? UINT64_MAX : (1ULL << width) - 1;
  const uint64_t c = rng.bits(width);
  return {XorShare{c, width}, XorShare{(secret ^ c) & mask, width}};
}

uint64_t reconstruct(const XorShare& c, const XorShare& s) {
  if (c.width != s.width) throw std::invalid_argument("reconstruct: width mismatch");
  return c.bits ^ s.bits;
}

std::pair<std::vector<B2aClientBit>, std::vector<B2aServerBit>> b2a_dealer_material(
    size_t bit_count, uint64_t t, Rng& rng) {
  check_pow2(t);
  std::vector<B2aClientBit> client(bit_count);
  std::vector<B2aServerBit> server(bit_count);
  for (size_t i = 0; i < bit_count; ++i) {
    const uint64_t a = rng.below(t);
    const uint64_t b = rng.below(t);
    const uint64_t ab = mod_mul(a, b, t);
    const uint64_t ab_c = rng.below(t);
    client[i] = {a, ab_c};
    server[i] = {b, mod_sub(ab, ab_c, t)};
  }
  return {std::move(client), std::move(server)};
}

std::vector<uint64_t> b2a_client_masked(const std::vector<uint8_t>& x_bits,
                                        const std::vector<B2aClientBit>& mat, uint64_t t) {
  if (x_bits.size() != mat.size()) throw std::invalid_argument("b2a: material size mismatch");
  std::vector<uint64_t> d(x_bits.size());
  for (size_t i = 0; i < x_bits.size(); ++i) d[i] = mod_sub(x_bits[i], mat[i].a, t);
  return d;
}

std::vector<uint64_t> b2a_server_masked(const std::vector<uint8_t>& x_bits,
                                        const std::vector<B2aServerBit>& mat, uint64_t t) {
  if (x_bits.size() != mat.size()) throw std::invalid_argument("b2a: material size mismatch");
  std::vector<uint64_t> e(x_bits.size());
  for (size_t i = 0; i < x_bits.size(); ++i) e[i] = mod_sub(x_bits[i], mat[i].b, t);
  return e;
}

std::vector<uint64_t> b2a_client_bit_shares(const std::vector<uint8_t>& x_bits,
                                            const std::vector<uint64_t>& e_peer,
                                            const std::vector<B2aClientBit>& mat, uint64_t t) {
  if (x_bits.size() != mat.size() || e_peer.size() != mat.size())
    throw std::invalid_argument("b2a: size mismatch");
  std::vector<uint64_t> z(x_bits.size());
  for (size_t i = 0; i < x_bits.size(); ++i) {
    const uint64_t d = mod_sub(x_bits[i], mat[i].a, t);
    // Client share of x_c * x_s is d*e + e*a + [ab]_c.
    uint64_t prod = mod_add(mod_mul(d, e_peer[i], t), mod_mul(e_peer[i], mat[i].a, t), t);
    prod = mod_add(prod, mat[i].ab_share, t);
    z[i] = mod_sub(x_bits[i], mod_mul(2, prod, t), t);
  }
  return z;
}

std::vector<uint64_t> b2a_server_bit_shares(const std::vector<uint8_t>& x_bits,
                                            const std::vector<uint64_t>& d_peer,
                                            const std::vector<B2aServerBit>& mat, uint64_t t) {
  if (x_bits.size() != mat.size() || d_peer.size() != mat.size())
    throw std::invalid_argument("b2a: size mismatch");
  std::vector<uint64_t> z(x_bits.size());
  for (size_t i = 0; i < x_bits.size(); ++i) {
    // Server share of x_c * x_s is d*b + [ab]_s.
    const uint64_t prod = mod_add(mod_mul(d_peer[i], mat[i].b, t), mat[i].ab_share, t);
    z[i] = mod_sub(x_bits[i], mod_mul(2, prod, t), t);
  }
  return z;
}

uint64_t b2a_weigh(const std::vector<uint64_t>& bit_shares, size_t offset, uint32_t width,
                   uint64_t t) {
  uint64_t acc = 0;
  for (uint32_t j = 0; j < width; ++j) acc = mod_add(acc, mod_mul(1ULL << j, bit_shares[offset + j], t), t);
  return acc;
}

std::pair<ArithShare, ArithShare> b2a_convert(const XorShare& x_c, const XorShare& x_s, uint64_t t,
                                              Rng& rng) {
  check_pow2(t);
  if (x_c.width != x_s.width) throw std::invalid_argument("b2a_convert: width mismatch");
  const uint32_t width = x_c.width;
  if (width > ceil_log2(t)) throw std::invalid_argument("b2a_convert: width exceeds modulus bits");

  std::vector<uint8_t> bits_c(width), bits_s(width);
  for (uint32_t j = 0; j < width; ++j) {
    bits_c[j] = static_cast<uint8_t>((x_c.bits >> j) & 1);
    bits_s[j] = static_cast<uint8_t>((x_s.bits >> j) & 1);
  }
  auto [mat_c, mat_s] = b2a_dealer_material(width, t, rng);
  auto d = b2a_client_masked(bits_c, mat_c, t);
  auto e = b2a_server_masked(bits_s, mat_s, t);
  auto zc = b2a_client_bit_shares(bits_c, e, mat_c, t);
  auto zs = b2a_server_bit_shares(bits_s, d, mat_s, t);
  return {ArithShare{b2a_weigh(zc, 0, width, t), t}, ArithShare{b2a_weigh(zs, 0, width, t), t}};
}

}  // namespace sknn
