#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sknn {

uint32_t ceil_log2(uint64_t x);

// A dataset point after fixed-point quantization: d coordinates of b_c bits
// each, plus a b_pid-bit ID.
struct QuantizedPoint {
  std::vector<uint32_t> coords;
  uint64_t id = 0;
};

struct QuantizedDataset {
  std::vector<QuantizedPoint> points;
  uint32_t d = 0;

  size_t n() const { return points.size(); }
  // Checks shared dimension, distinct IDs and the per-coordinate bit bound.
  void validate(uint32_t b_c) const;
};

// The full hyperparameter set. Scalar fields mirror the protocol's public
// parameters; vector fields (k_c, u, l) have one entry per cluster group.
struct HyperParams {
  uint64_t n = 0;
  uint32_t d = 0;
  uint32_t k_nn = 10;

  // Clustering stage.
  uint32_t T = 0;
  std::vector<uint32_t> k_c;
  uint32_t m = 0;
  std::vector<uint32_t> u;
  uint32_t u_all = 0;
  std::vector<uint32_t> l;
  double alpha = 0.56;

  // Stash.
  uint64_t s = 0;
  uint32_t l_s = 0;

  // Bit widths.
  uint32_t b_c = 8;
  uint32_t b_d = 0;
  uint32_t b_cid = 0;
  uint32_t b_pid = 0;
  uint32_t r_c = 0;
  uint32_t r_p = 0;

  // Ring / share modulus.
  uint32_t N = 8192;
  uint64_t t = 0;

  // Fill b_d, t, u_all, b_cid and (if zero) b_pid from the primary fields.
  void derive();
  void validate() const;

  uint64_t max_distance() const;  // d * (2^b_c - 1)^2

  std::string to_config() const;
  static HyperParams from_config(const std::string& text);
  // FNV-1a over the canonical config text; stable across runs.
  uint64_t digest() const;
};

// Appendix-style presets, stored verbatim. Clustering tags: "sift",
// "deep1b-1m", "deep1b-10m", "amazon". Linear-scan variants carry a "-ls"
// suffix and leave the clustering fields empty. Unknown tags throw.
HyperParams load_preset(std::string_view name);
std::vector<std::string> preset_names();

// Uniform quantization of one raw vector into b_c-bit integers over [lo, hi],
// round-half-up, clamped to the representable range. Rejects non-finite
// input.
std::vector<uint32_t> quantize(const std::vector<double>& raw, uint32_t b_c, double lo, double hi);

uint64_t squared_distance(const QuantizedPoint& p, const QuantizedPoint& q);
uint64_t squared_distance(const uint32_t* a, const uint32_t* b, uint32_t d);
uint64_t squared_norm(const uint32_t* coords, uint32_t d);

}  // namespace sknn
