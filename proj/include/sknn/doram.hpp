#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sknn/dpf.hpp"
#include "sknn/prf.hpp"
#include "sknn/rng.hpp"

namespace sknn {

// Read-only distributed ORAM in the masked-replica style: both parties hold
// identical copies of
//
//   masked[i] = DB[i] XOR PRF_kA(i) XOR PRF_kB(i),
//
// a read XOR-selects the masked block under a DPF-expanded indicator vector,
// and a trusted unmask step strips the two PRF layers while re-randomizing
// the shares. The PRF is the counter-mode keyed function from prf.hpp.
struct MaskedDb {
  uint64_t n_blocks = 0;
  uint32_t block_bits = 0;
  uint32_t prf_tag = 0;  // identifies the masking PRF family
  std::vector<uint8_t> data;  // n_blocks * block_bytes()

  size_t block_bytes() const { return (block_bits + 7) / 8; }
  const uint8_t* block(uint64_t i) const { return data.data() + i * block_bytes(); }

  void save(std::ostream& os) const;
  static MaskedDb load(std::istream& is);
};

inline constexpr uint32_t kPrfTagSipCounter = 1;

using Block = std::vector<uint8_t>;

void xor_into(uint8_t* dst, const uint8_t* src, size_t len);

// Bit layout of one cluster block: m slots of [coords | id | norm | flag],
// fields LSB-first. The 1-bit flag marks padding slots; every block decodes
// to exactly m slots. Field extraction commutes with XOR, so the same codec
// reads both plain blocks and block shares.
struct BlockCodec {
  uint32_t d = 0;
  uint32_t b_c = 0;
  uint32_t b_pid = 0;
  uint32_t b_d = 0;
  uint32_t m = 0;

  uint32_t slot_bits() const { return d * b_c + b_pid + b_d + 1; }
  uint32_t block_bits() const { return m * slot_bits(); }
  size_t block_bytes() const { return (block_bits() + 7) / 8; }

  struct SlotFields {
    std::vector<uint64_t> coords;
    uint64_t id = 0;
    uint64_t norm = 0;
    uint8_t flag = 0;
  };

  Block encode_slots(const std::vector<SlotFields>& slots) const;
  SlotFields decode_slot(const Block& block, uint32_t slot) const;
};

// Both parties receive an identical MaskedDb built from the plain blocks.
MaskedDb doram_init(const std::vector<Block>& db, uint32_t block_bits, const PrfKey& key_a,
                    const PrfKey& key_b);

// Recover DB[i] from the masked replica (both PRF keys needed); test helper.
Block doram_unmask_block(const MaskedDb& masked, const PrfKey& key_a, const PrfKey& key_b,
                         uint64_t i);

// Party-local half of a read: XOR of masked blocks selected by the DPF
// indicator bits. The result is this party's share of masked[i].
Block doram_select(const MaskedDb& masked, const DpfKey& key);

// Dealer-side unmask material for one read of index i: the client receives
// PRF_kA(i) XOR PRF_kB(i) XOR R, the server receives R, for a fresh uniform
// R sampled per call. XORing the materials into the two select() shares
// yields fresh XOR shares of DB[i].
struct UnmaskPair {
  Block client;
  Block server;
};
UnmaskPair doram_unmask_material(const PrfKey& key_a, const PrfKey& key_b, uint64_t index,
                                 uint32_t block_bits, Rng& rng);

// In-process composition of one full read (key generation, both parties'
// selects, trusted unmask). Returns the two XOR shares of DB[i].
struct DoramReadResult {
  Block client_share;
  Block server_share;
};
DoramReadResult doram_read(const MaskedDb& masked, uint64_t index, const PrfKey& key_a,
                           const PrfKey& key_b, Rng& dealer_rng);

// Batched non-adaptive reads; identical result to per-index doram_read. The
// round-count guarantee for the batched form is asserted at the transport
// layer, where the reads of one batch travel in single messages.
std::vector<DoramReadResult> doram_multi_read(const MaskedDb& masked,
                                              const std::vector<uint64_t>& indices,
                                              const PrfKey& key_a, const PrfKey& key_b,
                                              Rng& dealer_rng);

}  // namespace sknn
