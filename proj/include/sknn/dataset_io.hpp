#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sknn/core.hpp"

namespace sknn {

// Raw float dataset as read from disk.
struct RawDataset {
  std::vector<std::vector<double>> rows;
  uint32_t d = 0;
  size_t n() const { return rows.size(); }
};

enum class VecFormat { Fvecs, Bvecs, Ivecs };
VecFormat format_from_name(const std::string& name);

// Standard benchmark vector files: each record is a little-endian int32
// dimension followed by d values (float32 / uint8 / int32). A dimension
// change mid-file or a truncated record is reported with its record index.
RawDataset load_vecs(const std::string& path, VecFormat format);
void save_fvecs(const std::string& path, const RawDataset& data);

// Gaussian blob generator: `blobs` centers sampled in [0, box]^d with
// pairwise separation at least min_sep, points assigned round-robin and
// spread with sigma = `spread`. Deterministic per seed.
struct SyntheticOptions {
  uint64_t n = 0;
  uint32_t d = 0;
  uint32_t blobs = 1;
  double spread = 1.0;
  double box = 256.0;
  double min_sep = 0.0;  // 0: no separation constraint
  uint64_t seed = 1;
};
RawDataset gen_synthetic(const SyntheticOptions& opts);

// Global min/max quantization of a raw dataset; ids are assigned 0..n-1.
struct QuantizedWithBounds {
  QuantizedDataset data;
  double lo = 0.0, hi = 0.0;
};
QuantizedWithBounds quantize_dataset(const RawDataset& raw, uint32_t b_c);

}  // namespace sknn
