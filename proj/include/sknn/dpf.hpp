#pragma once

#include <cstdint>
#include <vector>

#include "sknn/bytes.hpp"
#include "sknn/prf.hpp"
#include "sknn/rng.hpp"

namespace sknn {

// Tree-based distributed point function with single-bit output.
//
// Each key is a GGM-style tree walk: a 128-bit root seed plus one correction
// word per level. The two keys expand to identical (seed, flag) pairs
// everywhere except along the path to the programmed index, where the flag
// bits differ; the final correction turns the leaf state into the indicator
// bit, so eval_A(j) XOR eval_B(j) = 1 exactly when j equals the programmed
// index. Key generation is a dealer operation here (the distributed
// GC-based generation is out of this artifact's trust model); evaluation is
// local to each party.
struct DpfKey {
  struct LevelCw {
    PrfKey seed;      // seed correction word
    uint8_t t_left;   // flag correction, left child
    uint8_t t_right;  // flag correction, right child
  };

  PrfKey root_seed{};
  uint8_t root_flag = 0;  // 0 for party A, 1 for party B
  uint32_t depth = 0;
  std::vector<LevelCw> levels;
  uint8_t final_cw = 0;  // output correction

  std::vector<uint8_t> serialize() const;
  static DpfKey deserialize(ByteReader& r);
  size_t byte_size() const { return 16 + 1 + 4 + levels.size() * 18 + 1; }
};

struct DpfKeyPair {
  DpfKey a;
  DpfKey b;
};

inline constexpr uint32_t kDpfMaxDepth = 30;  // desk-scale bound

// Keys for the point function at `index` over domain {0, ..., 2^depth - 1}.
DpfKeyPair dpf_gen(uint64_t index, uint32_t depth, Rng& dealer_rng);

// Single-point evaluation.
uint8_t dpf_eval(const DpfKey& key, uint64_t index);

// Level-order expansion of the whole domain; out[j] in {0,1}.
std::vector<uint8_t> dpf_eval_full(const DpfKey& key);

}  // namespace sknn
