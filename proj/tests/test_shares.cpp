#include <array>

#include "doctest.h"
#include "sknn/shares.hpp"

using namespace sknn;

TEST_SUITE_BEGIN("shares");

namespace {

// Chi-square statistic over 256 buckets; critical value for df=255 at
// significance 0.001 is ~330.5 (Wilson-Hilferty).
double chi_square_256(const std::vector<uint32_t>& counts, uint64_t total) {
  const double expected = static_cast<double>(total) / 256.0;
  double stat = 0.0;
  for (uint32_t c : counts) {
    const double diff = c - expected;
    stat += diff * diff / expected;
  }
  return stat;
}
constexpr double kChi256Crit = 330.5;

}  // namespace

TEST_CASE("arithmetic shares reconstruct") {
  Rng rng(1);
  const uint64_t t = 1ULL << 23;
  for (int rep = 0; rep < 100000; ++rep) {
    const uint64_t x = rng.below(t);
    auto [c, s] = share_arith(x, t, rng);
    CHECK(reconstruct(c, s) == x);
  }
  // Secret zero: shares are additive inverses.
  auto [c0, s0] = share_arith(0, t, rng);
  CHECK(mod_add(c0.value, s0.value, t) == 0);
  CHECK(s0.value == mod_neg(c0.value, t));
}

TEST_CASE("share determinism under a fixed seed") {
  const uint64_t t = 1ULL << 16;
  Rng a(42), b(42);
  for (int rep = 0; rep < 100; ++rep) {
    auto [c1, s1] = share_arith(7, t, a);
    auto [c2, s2] = share_arith(7, t, b);
    CHECK(c1.value == c2.value);
    CHECK(s1.value == s2.value);
  }
  Rng xa(43), xb(43);
  for (int rep = 0; rep < 100; ++rep) {
    auto [c1, s1] = share_xor(0x1234, 16, xa);
    auto [c2, s2] = share_xor(0x1234, 16, xb);
    CHECK(c1.bits == c2.bits);
    CHECK(s1.bits == s2.bits);
  }
}

TEST_CASE("xor shares reconstruct") {
  Rng rng(2);
  for (int rep = 0; rep < 100000; ++rep) {
    const uint32_t width = 1 + static_cast<uint32_t>(rng.below(23));
    const uint64_t x = rng.bits(width);
    auto [c, s] = share_xor(x, width, rng);
    CHECK(reconstruct(c, s) == x);
  }
  auto [c0, s0] = share_xor(0, 8, rng);
  CHECK(c0.bits == s0.bits);
}

TEST_CASE("individual shares look uniform (chi-square at width 8)") {
  Rng rng(3);
  std::vector<uint32_t> arith_counts(256, 0), xor_counts(256, 0);
  const uint64_t samples = 100000;
  for (uint64_t i = 0; i < samples; ++i) {
    auto [c, s] = share_arith(42, 256, rng);
    ++arith_counts[c.value];
    auto [xc, xs] = share_xor(0xA5, 8, rng);
    ++xor_counts[xc.bits];
  }
  CHECK(chi_square_256(arith_counts, samples) < kChi256Crit);
  CHECK(chi_square_256(xor_counts, samples) < kChi256Crit);
}

TEST_CASE("b2a reconstructs: exhaustive at width 8") {
  Rng rng(4);
  const uint64_t t = 1ULL << 23;
  for (uint32_t secret = 0; secret < 256; ++secret) {
    auto [xc, xs] = share_xor(secret, 8, rng);
    auto [ac, as] = b2a_convert(xc, xs, t, rng);
    CHECK(reconstruct(ac, as) == secret);
  }
}

TEST_CASE("b2a reconstructs: random 23-bit secrets") {
  Rng rng(5);
  const uint64_t t = 1ULL << 23;
  for (int rep = 0; rep < 10000; ++rep) {
    const uint64_t secret = rng.bits(23);
    auto [xc, xs] = share_xor(secret, 23, rng);
    auto [ac, as] = b2a_convert(xc, xs, t, rng);
    CHECK(reconstruct(ac, as) == secret);
  }
  // Zero secret: arithmetic shares sum to 0 mod t.
  auto [xc, xs] = share_xor(0, 23, rng);
  auto [ac, as] = b2a_convert(xc, xs, t, rng);
  CHECK(mod_add(ac.value, as.value, t) == 0);
}

TEST_CASE("b2a rejects width overflow") {
  Rng rng(6);
  auto [xc, xs] = share_xor(1, 24, rng);
  CHECK_THROWS(b2a_convert(xc, xs, 1ULL << 23, rng));
}

TEST_CASE("b2a party messages stay masked") {
  // The exchanged d/e values are uniform regardless of the input bit.
  Rng rng(7);
  const uint64_t t = 256;
  std::vector<uint32_t> counts(256, 0);
  const uint64_t samples = 100000;
  for (uint64_t i = 0; i < samples; ++i) {
    auto [mc, ms] = b2a_dealer_material(1, t, rng);
    const auto d = b2a_client_masked({1}, mc, t);
    ++counts[d[0]];
    (void)ms;
  }
  CHECK(chi_square_256(counts, samples) < kChi256Crit);
}

TEST_SUITE_END();
