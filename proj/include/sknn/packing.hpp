#pragma once

#include <cstdint>
#include <vector>

#include "sknn/core.hpp"
#include "sknn/rng.hpp"

namespace sknn {

// Arithmetic in Z_t[x]/(x^N + 1) with t a power of two, used to emulate the
// coefficient-packed batch inner-product computation: a query encoded as d
// constant polynomials f_i and a batch of up to N points encoded as d
// polynomials g_i (one per coordinate, one point per degree) satisfy
//
//   sum_i f_i * g_i  =  sum_j <q, p_j> x^(j-1)   (mod t, mod x^N + 1).
//
// No encryption is involved: the ring identity and the masked share handoff
// are what this module realizes and validates.
struct RingElem {
  std::vector<uint64_t> coeffs;  // size N, values mod t

  size_t n() const { return coeffs.size(); }
};

RingElem ring_zero(uint32_t N);
RingElem ring_add(const RingElem& a, const RingElem& b, uint64_t t);
RingElem ring_sub(const RingElem& a, const RingElem& b, uint64_t t);
// Negacyclic schoolbook product; O(N^2), the correctness oracle for any
// faster path.
RingElem ring_mul_schoolbook(const RingElem& a, const RingElem& b, uint64_t t);
// Multiply by x (degree shift with sign flip at the wrap).
RingElem ring_mul_x(const RingElem& a, uint64_t t);
// Plain (non-modular) convolution, degree 2N-2; used to assert that constant
// polynomials never trigger the negacyclic wrap.
std::vector<uint64_t> convolve_plain(const RingElem& a, const RingElem& b, uint64_t t);

// Query encoding: one constant polynomial per coordinate.
std::vector<RingElem> encode_query(const std::vector<uint32_t>& q, uint32_t N, uint64_t t);

// Batch encoding: g_i collects coordinate i of every point, one point per
// degree. batch.size() must not exceed N.
std::vector<RingElem> encode_points(const std::vector<const QuantizedPoint*>& batch, uint32_t d,
                                    uint32_t N, uint64_t t);

// h = sum_i f_i * g_i. Constant f_i take a scalar fast path; the general case
// falls back to the schoolbook product.
RingElem packed_inner_products(const std::vector<RingElem>& f, const std::vector<RingElem>& g,
                               uint64_t t);

// Masked handoff of h: the client-side coefficients are h + r, the server
// keeps -r; with the local post-processing (client: -2s + ||q||^2, server:
// -2r + ||p_j||^2) the parties end with additive shares of the squared
// distances mod t.
struct MaskedResponse {
  std::vector<uint64_t> client_coeffs;  // h + r
  std::vector<uint64_t> server_mask;    // -r mod t
};
MaskedResponse masked_response(const RingElem& h, const std::vector<uint64_t>& r, uint64_t t);

}  // namespace sknn
