#include "sknn/packing.hpp"

#include <stdexcept>

#include "sknn/shares.hpp"

namespace sknn {

namespace {
void check_same_n(const RingElem& a, const RingElem& b) {
  if (a.n() != b.n()) throw std::invalid_argument("ring: dimension mismatch");
}
}  // namespace

RingElem ring_zero(uint32_t N) { return RingElem{std::vector<uint64_t>(N, 0)}; }

RingElem ring_add(const RingElem& a, const RingElem& b, uint64_t t) {
  check_same_n(a, b);
  RingElem out = ring_zero(static_cast<uint32_t>(a.n()));
  for (size_t i = 0; i < a.n(); ++i) out.coeffs[i] = mod_add(a.coeffs[i], b.coeffs[i], t);
  return out;
}

RingElem ring_sub(const RingElem& a, const RingElem& b, uint64_t t) {
  check_same_n(a, b);
  RingElem out = ring_zero(static_cast<uint32_t>(a.n()));
  for (size_t i = 0; i < a.n(); ++i) out.coeffs[i] = mod_sub(a.coeffs[i], b.coeffs[i], t);
  return out;
}

RingElem ring_mul_schoolbook(const RingElem& a, const RingElem& b, uint64_t t) {
  check_same_n(a, b);
  const size_t N = a.n();
  RingElem out = ring_zero(static_cast<uint32_t>(N));
  for (size_t i = 0; i < N; ++i) {
    const uint64_t ai = a.coeffs[i];
    if (ai == 0) continue;
    for (size_t j = 0; j < N; ++j) {
      const uint64_t prod = mod_mul(ai, b.coeffs[j], t);
      const size_t deg = i + j;
      if (deg < N)
        out.coeffs[deg] = mod_add(out.coeffs[deg], prod, t);
      else  // x^N = -1
        out.coeffs[deg - N] = mod_sub(out.coeffs[deg - N], prod, t);
    }
  }
  return out;
}

RingElem ring_mul_x(const RingElem& a, uint64_t t) {
  const size_t N = a.n();
  RingElem out = ring_zero(static_cast<uint32_t>(N));
  for (size_t i = 0; i + 1 < N; ++i) out.coeffs[i + 1] = a.coeffs[i];
  if (N > 0) out.coeffs[0] = mod_neg(a.coeffs[N - 1], t);
  return out;
}

std::vector<uint64_t> convolve_plain(const RingElem& a, const RingElem& b, uint64_t t) {
  const size_t N = a.n();
  std::vector<uint64_t> out(2 * N - 1, 0);
  for (size_t i = 0; i < N; ++i) {
    if (a.coeffs[i] == 0) continue;
    for (size_t j = 0; j < N; ++j)
      out[i + j] = mod_add(out[i + j], mod_mul(a.coeffs[i], b.coeffs[j], t), t);
  }
  return out;
}

std::vector<RingElem> encode_query(const std::vector<uint32_t>& q, uint32_t N, uint64_t t) {
  std::vector<RingElem> f(q.size(), ring_zero(N));
  for (size_t i = 0; i < q.size(); ++i) f[i].coeffs[0] = q[i] & (t - 1);
  return f;
}

std::vector<RingElem> encode_points(const std::vector<const QuantizedPoint*>& batch, uint32_t d,
                                    uint32_t N, uint64_t t) {
  if (batch.size() > N) throw std::invalid_argument("encode_points: batch larger than ring dimension");
  std::vector<RingElem> g(d, ring_zero(N));
  for (size_t j = 0; j < batch.size(); ++j) {
    if (batch[j]->coords.size() != d) throw std::invalid_argument("encode_points: dimension mismatch");
    for (uint32_t i = 0; i < d; ++i) g[i].coeffs[j] = batch[j]->coords[i] & (t - 1);
  }
  return g;
}

RingElem packed_inner_products(const std::vector<RingElem>& f, const std::vector<RingElem>& g,
                               uint64_t t) {
  if (f.size() != g.size()) throw std::invalid_argument("packed_inner_products: d mismatch");
  if (f.empty()) throw std::invalid_argument("packed_inner_products: empty input");
  const size_t N = f[0].n();
  RingElem h = ring_zero(static_cast<uint32_t>(N));
  for (size_t i = 0; i < f.size(); ++i) {
    check_same_n(f[i], g[i]);
    bool constant = true;
    for (size_t c = 1; c < N && constant; ++c) constant = f[i].coeffs[c] == 0;
    if (constant) {
      const uint64_t scalar = f[i].coeffs[0];
      if (scalar == 0) continue;
      for (size_t c = 0; c < N; ++c)
        h.coeffs[c] = mod_add(h.coeffs[c], mod_mul(scalar, g[i].coeffs[c], t), t);
    } else {
      h = ring_add(h, ring_mul_schoolbook(f[i], g[i], t), t);
    }
  }
  return h;
}

MaskedResponse masked_response(const RingElem& h, const std::vector<uint64_t>& r, uint64_t t) {
  if (r.size() != h.n()) throw std::invalid_argument("masked_response: mask length mismatch");
  MaskedResponse out;
  out.client_coeffs.resize(h.n());
  out.server_mask.resize(h.n());
  for (size_t i = 0; i < h.n(); ++i) {
    out.client_coeffs[i] = mod_add(h.coeffs[i], r[i], t);
    out.server_mask[i] = mod_neg(r[i], t);
  }
  return out;
}

}  // namespace sknn
