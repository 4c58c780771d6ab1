#include "sknn/dpf.hpp"

#include <stdexcept>

namespace sknn {

namespace {

struct NodeState {
  PrfKey seed;
  uint8_t flag;
};

struct Expanded {
  PrfKey seed_l, seed_r;
  uint8_t t_l, t_r;
};

// Length-doubling PRG: the node seed keys a SipHash counter that yields both
// child seeds and both child flag bits.
Expanded expand(const PrfKey& seed) {
  Expanded e;
  e.seed_l = {siphash24_u64(seed, 0, 0), siphash24_u64(seed, 0, 1)};
  e.seed_r = {siphash24_u64(seed, 1, 0), siphash24_u64(seed, 1, 1)};
  const uint64_t tb = siphash24_u64(seed, 2, 0);
  e.t_l = static_cast<uint8_t>(tb & 1);
  e.t_r = static_cast<uint8_t>((tb >> 1) & 1);
  return e;
}

inline PrfKey xor_key(const PrfKey& a, const PrfKey& b) { return {a[0] ^ b[0], a[1] ^ b[1]}; }

NodeState descend(const NodeState& node, const DpfKey::LevelCw& cw, int bit) {
  const Expanded e = expand(node.seed);
  NodeState next;
  if (bit == 0) {
    next.seed = node.flag ? xor_key(e.seed_l, cw.seed) : e.seed_l;
    next.flag = static_cast<uint8_t>(e.t_l ^ (node.flag & cw.t_left));
  } else {
    next.seed = node.flag ? xor_key(e.seed_r, cw.seed) : e.seed_r;
    next.flag = static_cast<uint8_t>(e.t_r ^ (node.flag & cw.t_right));
  }
  return next;
}

inline uint8_t output_bit(const NodeState& leaf, uint8_t final_cw) {
  return static_cast<uint8_t>((leaf.seed[0] & 1) ^ (leaf.flag & final_cw));
}

}  // namespace

DpfKeyPair dpf_gen(uint64_t index, uint32_t depth, Rng& dealer_rng) {
  if (depth > kDpfMaxDepth) throw std::invalid_argument("dpf_gen: depth exceeds desk-scale bound");
  if (depth < 64 && index >= (1ULL << depth)) throw std::invalid_argument("dpf_gen: index out of domain");

  DpfKeyPair pair;
  pair.a.depth = pair.b.depth = depth;
  pair.a.root_flag = 0;
  pair.b.root_flag = 1;
  pair.a.root_seed = {dealer_rng.u64(), dealer_rng.u64()};
  pair.b.root_seed = {dealer_rng.u64(), dealer_rng.u64()};

  NodeState a{pair.a.root_seed, 0};
  NodeState b{pair.b.root_seed, 1};

  for (uint32_t level = 0; level < depth; ++level) {
    const int bit = static_cast<int>((index >> (depth - 1 - level)) & 1);
    const Expanded ea = expand(a.seed);
    const Expanded eb = expand(b.seed);

    // The off-path child must collapse to identical states; the on-path child
    // keeps differing flags.
    DpfKey::LevelCw cw;
    cw.seed = bit == 0 ? xor_key(ea.seed_r, eb.seed_r) : xor_key(ea.seed_l, eb.seed_l);
    cw.t_left = static_cast<uint8_t>(ea.t_l ^ eb.t_l ^ (bit ^ 1));
    cw.t_right = static_cast<uint8_t>(ea.t_r ^ eb.t_r ^ bit);
    pair.a.levels.push_back(cw);
    pair.b.levels.push_back(cw);

    NodeState na, nb;
    if (bit == 0) {
      na.seed = a.flag ? xor_key(ea.seed_l, cw.seed) : ea.seed_l;
      nb.seed = b.flag ? xor_key(eb.seed_l, cw.seed) : eb.seed_l;
      na.flag = static_cast<uint8_t>(ea.t_l ^ (a.flag & cw.t_left));
      nb.flag = static_cast<uint8_t>(eb.t_l ^ (b.flag & cw.t_left));
    } else {
      na.seed = a.flag ? xor_key(ea.seed_r, cw.seed) : ea.seed_r;
      nb.seed = b.flag ? xor_key(eb.seed_r, cw.seed) : eb.seed_r;
      na.flag = static_cast<uint8_t>(ea.t_r ^ (a.flag & cw.t_right));
      nb.flag = static_cast<uint8_t>(eb.t_r ^ (b.flag & cw.t_right));
    }
    a = na;
    b = nb;
  }

  // On-path leaf flags differ by construction; pick the correction so the
  // reconstructed output bit is exactly 1 there.
  const uint8_t fcw = static_cast<uint8_t>(1 ^ (a.seed[0] & 1) ^ (b.seed[0] & 1));
  pair.a.final_cw = pair.b.final_cw = fcw;
  return pair;
}

uint8_t dpf_eval(const DpfKey& key, uint64_t index) {
  NodeState node{key.root_seed, key.root_flag};
  for (uint32_t level = 0; level < key.depth; ++level) {
    const int bit = static_cast<int>((index >> (key.depth - 1 - level)) & 1);
    node = descend(node, key.levels[level], bit);
  }
  return output_bit(node, key.final_cw);
}

std::vector<uint8_t> dpf_eval_full(const DpfKey& key) {
  std::vector<NodeState> frontier{NodeState{key.root_seed, key.root_flag}};
  for (uint32_t level = 0; level < key.depth; ++level) {
    std::vector<NodeState> next(frontier.size() * 2);
    for (size_t i = 0; i < frontier.size(); ++i) {
      next[2 * i] = descend(frontier[i], key.levels[level], 0);
      next[2 * i + 1] = descend(frontier[i], key.levels[level], 1);
    }
    frontier = std::move(next);
  }
  std::vector<uint8_t> out(frontier.size());
  for (size_t i = 0; i < frontier.size(); ++i) out[i] = output_bit(frontier[i], key.final_cw);
  return out;
}

std::vector<uint8_t> DpfKey::serialize() const {
  ByteWriter w;
  w.u64(root_seed[0]);
  w.u64(root_seed[1]);
  w.u8(root_flag);
  w.u32(depth);
  for (const auto& cw : levels) {
    w.u64(cw.seed[0]);
    w.u64(cw.seed[1]);
    w.u8(cw.t_left);
    w.u8(cw.t_right);
  }
  w.u8(final_cw);
  return w.take();
}

DpfKey DpfKey::deserialize(ByteReader& r) {
  DpfKey k;
  k.root_seed = {r.u64(), r.u64()};
  k.root_flag = r.u8();
  k.depth = r.u32();
  k.levels.resize(k.depth);
  for (auto& cw : k.levels) {
    cw.seed = {r.u64(), r.u64()};
    cw.t_left = r.u8();
    cw.t_right = r.u8();
  }
  k.final_cw = r.u8();
  return k;
}

}  // namespace sknn
