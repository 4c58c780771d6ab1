#include "doctest.h"
#include "sknn/packing.hpp"
#include "sknn/rng.hpp"
#include "sknn/shares.hpp"

using namespace sknn;

TEST_SUITE_BEGIN("packing");

namespace {

std::vector<QuantizedPoint> random_points(size_t count, uint32_t d, uint32_t b_c, Rng& rng) {
  std::vector<QuantizedPoint> pts(count);
  for (size_t i = 0; i < count; ++i) {
    pts[i].coords.resize(d);
    for (auto& c : pts[i].coords) c = static_cast<uint32_t>(rng.bits(b_c));
    pts[i].id = i;
  }
  return pts;
}

std::vector<const QuantizedPoint*> views(const std::vector<QuantizedPoint>& pts) {
  std::vector<const QuantizedPoint*> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = &pts[i];
  return out;
}

}  // namespace

TEST_CASE("query encoding is constant polynomials") {
  const uint64_t t = 1ULL << 21;
  const std::vector<uint32_t> q{3, 0, 250};
  const auto f = encode_query(q, 16, t);
  REQUIRE(f.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(f[i].coeffs[0] == q[i]);
    for (size_t c = 1; c < 16; ++c) CHECK(f[i].coeffs[c] == 0);
  }
  const auto z = encode_query({0, 0}, 8, t);
  for (const auto& e : z)
    for (uint64_t c : e.coeffs) CHECK(c == 0);
}

TEST_CASE("point encoding collects one coordinate across the batch") {
  const uint64_t t = 1ULL << 21;
  Rng rng(11);
  auto pts = random_points(5, 3, 8, rng);
  const auto g = encode_points(views(pts), 3, 8, t);
  REQUIRE(g.size() == 3);
  for (uint32_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 5; ++j) CHECK(g[i].coeffs[j] == pts[j].coords[i]);
    for (size_t j = 5; j < 8; ++j) CHECK(g[i].coeffs[j] == 0);
  }
  // Empty batch encodes to zeros.
  const auto empty = encode_points({}, 3, 8, t);
  for (const auto& e : empty)
    for (uint64_t c : e.coeffs) CHECK(c == 0);
  // Batch larger than N rejected.
  auto big = random_points(9, 3, 8, rng);
  CHECK_THROWS(encode_points(views(big), 3, 8, t));
}

TEST_CASE("packed inner products: hand-checkable batch") {
  const uint64_t t = 1ULL << 21;
  Rng rng(12);
  auto pts = random_points(8, 2, 8, rng);
  std::vector<uint32_t> q{17, 201};
  const auto h = packed_inner_products(encode_query(q, 8, t), encode_points(views(pts), 2, 8, t), t);
  for (size_t j = 0; j < 8; ++j) {
    const uint64_t dot = 17ULL * pts[j].coords[0] + 201ULL * pts[j].coords[1];
    CHECK(h.coeffs[j] == (dot & (t - 1)));
  }
}

TEST_CASE("packed inner products: basis query extracts a coordinate") {
  const uint64_t t = 1ULL << 21;
  Rng rng(13);
  auto pts = random_points(16, 4, 8, rng);
  std::vector<uint32_t> e2{0, 0, 1, 0};
  const auto h = packed_inner_products(encode_query(e2, 16, t), encode_points(views(pts), 4, 16, t), t);
  for (size_t j = 0; j < 16; ++j) CHECK(h.coeffs[j] == pts[j].coords[2]);
}

TEST_CASE("constant-f fast path equals the schoolbook product and plain convolution") {
  const uint64_t t = 1ULL << 20;
  Rng rng(14);
  const uint32_t N = 64, d = 4;
  auto pts = random_points(N, d, 8, rng);
  std::vector<uint32_t> q(d);
  for (auto& v : q) v = static_cast<uint32_t>(rng.bits(8));

  const auto f = encode_query(q, N, t);
  const auto g = encode_points(views(pts), d, N, t);
  const auto fast = packed_inner_products(f, g, t);

  RingElem slow = ring_zero(N);
  for (uint32_t i = 0; i < d; ++i) slow = ring_add(slow, ring_mul_schoolbook(f[i], g[i], t), t);
  CHECK(fast.coeffs == slow.coeffs);

  // Constant polynomials never reach the negacyclic wrap: the plain
  // convolution has no terms at degree >= N.
  for (uint32_t i = 0; i < d; ++i) {
    const auto conv = convolve_plain(f[i], g[i], t);
    for (size_t deg = N; deg < conv.size(); ++deg) CHECK(conv[deg] == 0);
    const auto neg = ring_mul_schoolbook(f[i], g[i], t);
    for (size_t c = 0; c < N; ++c) CHECK(neg.coeffs[c] == conv[c]);
  }
}

TEST_CASE("negacyclic wrap: multiplying by x N times negates") {
  const uint64_t t = 1ULL << 18;
  Rng rng(15);
  const uint32_t N = 32;
  RingElem a = ring_zero(N);
  for (auto& c : a.coeffs) c = rng.below(t);
  RingElem x = ring_zero(N);
  x.coeffs[1] = 1;

  RingElem acc = a;
  for (uint32_t i = 0; i < N; ++i) acc = ring_mul_schoolbook(acc, x, t);
  for (uint32_t c = 0; c < N; ++c) CHECK(acc.coeffs[c] == mod_neg(a.coeffs[c], t));

  // ring_mul_x agrees with multiplying by the schoolbook x.
  const auto shifted = ring_mul_x(a, t);
  const auto slow = ring_mul_schoolbook(a, x, t);
  CHECK(shifted.coeffs == slow.coeffs);
}

TEST_CASE("masked response hands out distance shares") {
  const uint64_t t = 1ULL << 21;
  Rng rng(16);
  const uint32_t N = 128, d = 6;
  for (int rep = 0; rep < 200; ++rep) {
    auto pts = random_points(N, d, 8, rng);
    std::vector<uint32_t> q(d);
    for (auto& v : q) v = static_cast<uint32_t>(rng.bits(8));

    const auto h = packed_inner_products(encode_query(q, N, t), encode_points(views(pts), d, N, t), t);
    std::vector<uint64_t> r(N);
    for (auto& v : r) v = rng.below(t);
    const auto mr = masked_response(h, r, t);

    const uint64_t q_norm = squared_norm(q.data(), d);
    for (size_t j = 0; j < N; ++j) {
      // client: -2*s + ||q||^2 ; server: -2*mask + ||p_j||^2.
      const uint64_t client = mod_add(mod_neg(mod_mul(2, mr.client_coeffs[j], t), t), q_norm & (t - 1), t);
      const uint64_t norm_j = squared_norm(pts[j].coords.data(), d);
      const uint64_t server = mod_add(mod_neg(mod_mul(2, mr.server_mask[j], t), t), norm_j & (t - 1), t);
      const uint64_t dist = squared_distance(q.data(), pts[j].coords.data(), d);
      CHECK(mod_add(client, server, t) == (dist & (t - 1)));
    }
  }
}

TEST_CASE("masked response determinism and self-distance") {
  const uint64_t t = 1ULL << 21;
  Rng rng(17);
  const uint32_t N = 16, d = 3;
  auto pts = random_points(N, d, 8, rng);
  std::vector<uint32_t> q(pts[4].coords.begin(), pts[4].coords.end());

  const auto h = packed_inner_products(encode_query(q, N, t), encode_points(views(pts), d, N, t), t);
  std::vector<uint64_t> r(N, 99);
  const auto m1 = masked_response(h, r, t);
  const auto m2 = masked_response(h, r, t);
  CHECK(m1.client_coeffs == m2.client_coeffs);
  CHECK(m1.server_mask == m2.server_mask);

  // Reconstructed distance to the identical point is zero.
  const uint64_t q_norm = squared_norm(q.data(), d);
  const uint64_t client = mod_add(mod_neg(mod_mul(2, m1.client_coeffs[4], t), t), q_norm & (t - 1), t);
  const uint64_t norm4 = squared_norm(pts[4].coords.data(), d);
  const uint64_t server = mod_add(mod_neg(mod_mul(2, m1.server_mask[4], t), t), norm4 & (t - 1), t);
  CHECK(mod_add(client, server, t) == 0);
}

TEST_SUITE_END();
