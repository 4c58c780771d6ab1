#include "sknn/doram.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "sknn/bytes.hpp"
#include "sknn/core.hpp"

namespace sknn {

Block BlockCodec::encode_slots(const std::vector<SlotFields>& slots) const {
  if (slots.size() != m) throw std::invalid_argument("block codec: need exactly m slots");
  BitWriter w;
  for (const auto& slot : slots) {
    if (slot.coords.size() != d) throw std::invalid_argument("block codec: bad slot dimension");
    for (uint32_t j = 0; j < d; ++j) w.put(slot.coords[j], b_c);
    w.put(slot.id, b_pid);
    w.put(slot.norm, b_d);
    w.put(slot.flag, 1);
  }
  Block out = w.take();
  out.resize(block_bytes(), 0);
  return out;
}

BlockCodec::SlotFields BlockCodec::decode_slot(const Block& block, uint32_t slot) const {
  BitReader r(block);
  r.seek_bits(static_cast<size_t>(slot) * slot_bits());
  SlotFields f;
  f.coords.resize(d);
  for (uint32_t j = 0; j < d; ++j) f.coords[j] = r.get(b_c);
  f.id = r.get(b_pid);
  f.norm = r.get(b_d);
  f.flag = static_cast<uint8_t>(r.get(1));
  return f;
}

void xor_into(uint8_t* dst, const uint8_t* src, size_t len) {
  size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    uint64_t a, b;
    std::memcpy(&a, dst + i, 8);
    std::memcpy(&b, src + i, 8);
    a ^= b;
    std::memcpy(dst + i, &a, 8);
  }
  for (; i < len; ++i) dst[i] ^= src[i];
}

MaskedDb doram_init(const std::vector<Block>& db, uint32_t block_bits, const PrfKey& key_a,
                    const PrfKey& key_b) {
  MaskedDb out;
  out.n_blocks = db.size();
  out.block_bits = block_bits;
  out.prf_tag = kPrfTagSipCounter;
  const size_t bytes = out.block_bytes();
  out.data.assign(out.n_blocks * bytes, 0);
  for (uint64_t i = 0; i < out.n_blocks; ++i) {
    if (db[i].size() != bytes) throw std::invalid_argument("doram_init: block size mismatch");
    uint8_t* dst = out.data.data() + i * bytes;
    std::memcpy(dst, db[i].data(), bytes);
    const Block mask_a = prf_expand(key_a, i, bytes);
    const Block mask_b = prf_expand(key_b, i, bytes);
    xor_into(dst, mask_a.data(), bytes);
    xor_into(dst, mask_b.data(), bytes);
  }
  return out;
}

Block doram_unmask_block(const MaskedDb& masked, const PrfKey& key_a, const PrfKey& key_b,
                         uint64_t i) {
  const size_t bytes = masked.block_bytes();
  Block out(masked.block(i), masked.block(i) + bytes);
  const Block mask_a = prf_expand(key_a, i, bytes);
  const Block mask_b = prf_expand(key_b, i, bytes);
  xor_into(out.data(), mask_a.data(), bytes);
  xor_into(out.data(), mask_b.data(), bytes);
  return out;
}

Block doram_select(const MaskedDb& masked, const DpfKey& key) {
  const size_t bytes = masked.block_bytes();
  const std::vector<uint8_t> bits = dpf_eval_full(key);
  if (bits.size() < masked.n_blocks) throw std::invalid_argument("doram_select: domain too small");
  Block acc(bytes, 0);
  for (uint64_t i = 0; i < masked.n_blocks; ++i)
    if (bits[i]) xor_into(acc.data(), masked.block(i), bytes);
  return acc;
}

UnmaskPair doram_unmask_material(const PrfKey& key_a, const PrfKey& key_b, uint64_t index,
                                 uint32_t block_bits, Rng& rng) {
  const size_t bytes = (block_bits + 7) / 8;
  UnmaskPair pair;
  pair.server.resize(bytes);
  rng.fill(pair.server.data(), bytes);
  pair.client = prf_expand(key_a, index, bytes);
  const Block mask_b = prf_expand(key_b, index, bytes);
  xor_into(pair.client.data(), mask_b.data(), bytes);
  xor_into(pair.client.data(), pair.server.data(), bytes);
  return pair;
}

DoramReadResult doram_read(const MaskedDb& masked, uint64_t index, const PrfKey& key_a,
                           const PrfKey& key_b, Rng& dealer_rng) {
  const uint32_t depth = ceil_log2(masked.n_blocks);
  const DpfKeyPair keys = dpf_gen(index, depth, dealer_rng);
  const UnmaskPair unmask =
      doram_unmask_material(key_a, key_b, index, masked.block_bits, dealer_rng);
  DoramReadResult res;
  res.client_share = doram_select(masked, keys.a);
  res.server_share = doram_select(masked, keys.b);
  xor_into(res.client_share.data(), unmask.client.data(), unmask.client.size());
  xor_into(res.server_share.data(), unmask.server.data(), unmask.server.size());
  return res;
}

std::vector<DoramReadResult> doram_multi_read(const MaskedDb& masked,
                                              const std::vector<uint64_t>& indices,
                                              const PrfKey& key_a, const PrfKey& key_b,
                                              Rng& dealer_rng) {
  std::vector<DoramReadResult> out;
  out.reserve(indices.size());
  for (uint64_t i : indices) out.push_back(doram_read(masked, i, key_a, key_b, dealer_rng));
  return out;
}

void MaskedDb::save(std::ostream& os) const {
  ByteWriter w;
  w.u32(0x42444b53);  // "SKDB"
  w.u32(1);
  w.u64(n_blocks);
  w.u32(block_bits);
  w.u32(prf_tag);
  w.bytes(data);
  const auto& buf = w.data();
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

MaskedDb MaskedDb::load(std::istream& is) {
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  ByteReader r(buf);
  if (r.u32() != 0x42444b53) throw std::runtime_error("masked db: bad magic");
  if (r.u32() != 1) throw std::runtime_error("masked db: unsupported version");
  MaskedDb db;
  db.n_blocks = r.u64();
  db.block_bits = r.u32();
  db.prf_tag = r.u32();
  db.data = r.bytes(db.n_blocks * db.block_bytes());
  if (!r.done()) throw std::runtime_error("masked db: trailing bytes");
  return db;
}

}  // namespace sknn
