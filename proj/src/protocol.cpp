#include "sknn/protocol.hpp"

#include <chrono>
#include <sstream>
#include <thread>

#include "sknn/bytes.hpp"
#include "sknn/functionalities.hpp"
#include "sknn/packing.hpp"
#include "sknn/shares.hpp"

namespace sknn {

namespace {

constexpr uint8_t kModeLinear = 1;
constexpr uint8_t kModeClustering = 2;

// [FDist] sub-message codes.
constexpr uint8_t kDistUploadPoints = 0;   // server -> dealer, linear setup
constexpr uint8_t kDistQuery = 1;          // client -> dealer, per query
constexpr uint8_t kDistLinearSeeds = 2;    // server -> dealer, per query
constexpr uint8_t kDistGroupSeed = 3;      // server -> dealer, per group per query
constexpr uint8_t kDistSharedClient = 4;   // client -> dealer, retrieved points
constexpr uint8_t kDistSharedServer = 5;   // server -> dealer
constexpr uint8_t kDistStashSeed = 6;      // server -> dealer, per query
constexpr uint8_t kDistUploadIndex = 7;    // server -> dealer, clustering setup

void put_vals32(ByteWriter& w, const std::vector<uint64_t>& vals) {
  for (uint64_t v : vals) w.u32(static_cast<uint32_t>(v));
}

std::vector<uint64_t> get_vals32(ByteReader& r, size_t count) {
  std::vector<uint64_t> out(count);
  for (auto& v : out) v = r.u32();
  return out;
}

void put_coords(ByteWriter& w, const std::vector<uint32_t>& coords) {
  for (uint32_t c : coords) w.u16(static_cast<uint16_t>(c));
}

std::vector<uint32_t> get_coords(ByteReader& r, size_t d) {
  std::vector<uint32_t> out(d);
  for (auto& c : out) c = r.u16();
  return out;
}

struct TopkHeader {
  uint64_t n = 0;
  uint32_t k = 0;
  uint32_t l = 0;
  uint32_t r = 0;
  uint32_t id_bits = 0;
  uint8_t return_val = 0;

  void encode(ByteWriter& w) const {
    w.u64(n);
    w.u32(k);
    w.u32(l);
    w.u32(r);
    w.u32(id_bits);
    w.u8(return_val);
  }
  static TopkHeader decode(ByteReader& r_) {
    TopkHeader h;
    h.n = r_.u64();
    h.k = r_.u32();
    h.l = r_.u32();
    h.r = r_.u32();
    h.id_bits = r_.u32();
    h.return_val = r_.u8();
    return h;
  }
  bool operator==(const TopkHeader&) const = default;
};

struct TopkShareOut {
  std::vector<uint64_t> ids;
  std::vector<uint64_t> vals;  // empty unless return_val
};

// Client half of a F_TOPk / F_aTOPk call.
TopkShareOut party_topk_client(Channel& dealer, uint8_t tag, const TopkHeader& hdr,
                               const std::vector<uint64_t>& a_c,
                               const std::vector<uint64_t>* idlist_c) {
  ByteWriter w;
  hdr.encode(w);
  put_vals32(w, a_c);
  w.u8(idlist_c ? 1 : 0);
  if (idlist_c) put_vals32(w, *idlist_c);
  dealer.send(tag, w.data());
  auto reply = dealer.expect(tag);
  ByteReader r(reply);
  TopkShareOut out;
  out.ids = get_vals32(r, hdr.k);
  if (hdr.return_val) out.vals = get_vals32(r, hdr.k);
  return out;
}

// Server half. idlist == nullptr means the default iota idlist {0,...,n-1}.
TopkShareOut party_topk_server(Channel& dealer, uint8_t tag, const TopkHeader& hdr,
                               const std::vector<uint64_t>& a_s,
                               const std::vector<uint64_t>* idlist_s) {
  ByteWriter w;
  hdr.encode(w);
  put_vals32(w, a_s);
  w.u8(idlist_s ? 1 : 0);
  if (idlist_s) put_vals32(w, *idlist_s);
  dealer.send(tag, w.data());
  auto reply = dealer.expect(tag);
  ByteReader r(reply);
  TopkShareOut out;
  out.ids = get_vals32(r, hdr.k);
  if (hdr.return_val) out.vals = get_vals32(r, hdr.k);
  return out;
}

// Dealer side of one selection call: gather both submissions, evaluate the
// functionality, return masked per-party outputs.
void dealer_topk(Channel& client, Channel& server, uint8_t tag, uint64_t t, Rng& rng) {
  auto creq = client.expect(tag);
  auto sreq = server.expect(tag);
  ByteReader cr(creq);
  ByteReader sr(sreq);
  const TopkHeader ch = TopkHeader::decode(cr);
  const TopkHeader sh = TopkHeader::decode(sr);
  if (!(ch == sh)) throw ProtocolError(stage_of_tag(tag), "selection call headers disagree");

  FTopkRequest req;
  req.t = t;
  req.r = ch.r;
  req.k = ch.k;
  req.id_bits = ch.id_bits;
  req.return_val = ch.return_val != 0;
  req.a_c = get_vals32(cr, ch.n);
  if (cr.u8()) req.idlist_c = get_vals32(cr, ch.n);
  req.a_s = get_vals32(sr, ch.n);
  if (sr.u8()) {
    req.idlist_s = get_vals32(sr, ch.n);
  } else {
    req.idlist_s.resize(ch.n);
    for (uint64_t i = 0; i < ch.n; ++i) req.idlist_s[i] = i;
  }

  const FTopkOutputs out = tag == kTagFATopk ? f_atopk(req, ch.l, rng) : f_topk(req, rng);

  ByteWriter wc, ws;
  put_vals32(wc, out.ids_client);
  put_vals32(ws, out.ids_server);
  if (req.return_val) {
    put_vals32(wc, out.vals_client);
    put_vals32(ws, out.vals_server);
  }
  client.send(tag, wc.data());
  server.send(tag, ws.data());
}

// ---------------------------------------------------------------------------
// B2A over channels.

std::vector<uint64_t> b2a_channels_client(Channel& dealer, Channel& server,
                                          const std::vector<uint8_t>& bits, uint64_t modulus) {
  ByteWriter req;
  req.u64(bits.size());
  req.u64(modulus);
  dealer.send(kTagFB2aMat, req.data());
  auto raw = dealer.expect(kTagFB2aMat);
  ByteReader r(raw);
  std::vector<B2aClientBit> mat(bits.size());
  for (auto& m : mat) {
    m.a = r.u32();
    m.ab_share = r.u32();
  }
  ByteWriter dmsg;
  put_vals32(dmsg, b2a_client_masked(bits, mat, modulus));
  server.send(kTagB2a, dmsg.data());
  auto eraw = server.expect(kTagB2a);
  ByteReader er(eraw);
  const auto e = get_vals32(er, bits.size());
  return b2a_client_bit_shares(bits, e, mat, modulus);
}

std::vector<uint64_t> b2a_channels_server(Channel& dealer, Channel& client,
                                          const std::vector<uint8_t>& bits, uint64_t modulus) {
  ByteWriter req;
  req.u64(bits.size());
  req.u64(modulus);
  dealer.send(kTagFB2aMat, req.data());
  auto raw = dealer.expect(kTagFB2aMat);
  ByteReader r(raw);
  std::vector<B2aServerBit> mat(bits.size());
  for (auto& m : mat) {
    m.b = r.u32();
    m.ab_share = r.u32();
  }
  ByteWriter emsg;
  put_vals32(emsg, b2a_server_masked(bits, mat, modulus));
  client.send(kTagB2a, emsg.data());
  auto draw = client.expect(kTagB2a);
  ByteReader dr(draw);
  const auto d = get_vals32(dr, bits.size());
  return b2a_server_bit_shares(bits, d, mat, modulus);
}

void b2a_channels_dealer(Channel& client, Channel& server, Rng& rng) {
  auto craw = client.expect(kTagFB2aMat);
  auto sraw = server.expect(kTagFB2aMat);
  ByteReader cr(craw), sr(sraw);
  const uint64_t count = cr.u64();
  const uint64_t modulus = cr.u64();
  if (sr.u64() != count || sr.u64() != modulus)
    throw ProtocolError(Stage::B2a, "b2a requests disagree");
  auto [mc, ms] = b2a_dealer_material(count, modulus, rng);
  ByteWriter wc, ws;
  for (const auto& m : mc) {
    wc.u32(static_cast<uint32_t>(m.a));
    wc.u32(static_cast<uint32_t>(m.ab_share));
  }
  for (const auto& m : ms) {
    ws.u32(static_cast<uint32_t>(m.b));
    ws.u32(static_cast<uint32_t>(m.ab_share));
  }
  client.send(kTagFB2aMat, wc.data());
  server.send(kTagFB2aMat, ws.data());
}

// ---------------------------------------------------------------------------
// Distance-stage helpers (packing emulation at the dealer).

// Dealer-side batch inner products: s_j = <q, points[perm[j]]> + r_j mod t.
std::vector<uint64_t> dealer_masked_products(const std::vector<uint32_t>& q,
                                             const std::vector<QuantizedPoint>& points,
                                             const std::vector<uint32_t>* perm, uint64_t mask_seed,
                                             uint32_t N, uint64_t t) {
  const size_t n = points.size();
  const uint32_t d = static_cast<uint32_t>(q.size());
  Rng mask_rng(mask_seed);
  std::vector<uint64_t> out(n);
  const auto f = encode_query(q, N, t);
  std::vector<const QuantizedPoint*> batch;
  batch.reserve(N);
  for (size_t base = 0; base < n; base += N) {
    const size_t bs = std::min<size_t>(N, n - base);
    batch.clear();
    for (size_t j = 0; j < bs; ++j)
      batch.push_back(&points[perm ? (*perm)[base + j] : base + j]);
    const auto g = encode_points(batch, d, N, t);
    const RingElem h = packed_inner_products(f, g, t);
    std::vector<uint64_t> r(N, 0);
    for (size_t j = 0; j < bs; ++j) r[j] = mask_rng.below(t);
    const MaskedResponse mr = masked_response(h, r, t);
    for (size_t j = 0; j < bs; ++j) out[base + j] = mr.client_coeffs[j];
  }
  return out;
}

// Server-side mask stream matching dealer_masked_products: the same r_j
// sequence, consumed in order.
std::vector<uint64_t> server_mask_stream(uint64_t mask_seed, size_t n, uint32_t N, uint64_t t) {
  Rng mask_rng(mask_seed);
  std::vector<uint64_t> r(n);
  size_t produced = 0;
  for (size_t base = 0; base < n; base += N) {
    const size_t bs = std::min<size_t>(N, n - base);
    for (size_t j = 0; j < bs; ++j) r[produced++] = mask_rng.below(t);
  }
  return r;
}

// Client-side distance shares from received coefficients: -2*s_j + ||q||^2.
std::vector<uint64_t> client_dist_shares(const std::vector<uint64_t>& s, uint64_t q_norm,
                                         uint64_t t) {
  std::vector<uint64_t> a(s.size());
  for (size_t j = 0; j < s.size(); ++j)
    a[j] = mod_add(mod_sub(0, mod_mul(2, s[j], t), t), q_norm & (t - 1), t);
  return a;
}

// Server-side distance shares: -2*(-r_j) + norm_j = 2*r_j + norm_j.
std::vector<uint64_t> server_dist_shares(const std::vector<uint64_t>& r,
                                         const std::vector<uint64_t>& norms, uint64_t t) {
  std::vector<uint64_t> a(r.size());
  for (size_t j = 0; j < r.size(); ++j) a[j] = mod_add(mod_mul(2, r[j], t), norms[j] & (t - 1), t);
  return a;
}

// ---------------------------------------------------------------------------
// Handshake.

struct HandshakeResult {
  double lo = 0.0, hi = 0.0;
};

HandshakeResult client_handshake(Channel& server, Channel& dealer, const HyperParams& params,
                                 uint8_t mode, uint32_t num_queries) {
  ByteWriter ws;
  ws.u32(kProtocolVersion);
  ws.u8(mode);
  ws.u64(params.digest());
  ws.u32(num_queries);
  server.send(kTagHandshake, ws.data());

  ByteWriter wd;
  wd.u32(kProtocolVersion);
  wd.u8(mode);
  wd.u32(num_queries);
  wd.str(params.to_config());
  dealer.send(kTagHandshake, wd.data());
  {
    auto ok = dealer.expect(kTagHandshake);
    ByteReader r(ok);
    if (r.u8() != 1) throw ProtocolError(Stage::Handshake, "dealer rejected session");
  }
  auto reply = server.expect(kTagHandshake);
  ByteReader r(reply);
  if (r.u8() != 1) {
    dealer.send(kTagEnd, {});
    throw ProtocolError(Stage::Handshake, "parameter digest mismatch with server");
  }
  HandshakeResult hs;
  hs.lo = r.f64();
  hs.hi = r.f64();
  return hs;
}

// Returns num_queries.
uint32_t server_handshake(Channel& client, Channel& dealer, const HyperParams& params,
                          uint8_t mode, double lo, double hi) {
  auto req = client.expect(kTagHandshake);
  ByteReader r(req);
  const uint32_t version = r.u32();
  const uint8_t req_mode = r.u8();
  const uint64_t digest = r.u64();
  const uint32_t num_queries = r.u32();
  const bool ok = version == kProtocolVersion && req_mode == mode && digest == params.digest();

  ByteWriter wd;
  wd.u32(kProtocolVersion);
  wd.u8(mode);
  wd.u64(params.digest());
  wd.u32(num_queries);
  if (ok) {
    dealer.send(kTagHandshake, wd.data());
  } else {
    dealer.send(kTagEnd, {});
  }

  ByteWriter w;
  w.u8(ok ? 1 : 0);
  w.f64(lo);
  w.f64(hi);
  client.send(kTagHandshake, w.data());
  if (!ok) throw ProtocolError(Stage::Handshake, "parameter digest mismatch with client");
  {
    auto ack = dealer.expect(kTagHandshake);
    ByteReader ar(ack);
    if (ar.u8() != 1) throw ProtocolError(Stage::Handshake, "dealer rejected session");
  }
  return num_queries;
}

struct DealerSession {
  HyperParams params;
  uint8_t mode = 0;
  uint32_t num_queries = 0;
};

// Returns an empty optional when the session was aborted during handshake.
std::optional<DealerSession> dealer_handshake(Channel& client, Channel& server) {
  DealerSession sess;
  {
    Frame f = client.recv();
    if (f.tag == kTagEnd) return std::nullopt;
    if (f.tag != kTagHandshake) throw ProtocolError(Stage::Handshake, "unexpected client frame");
    ByteReader r(f.payload);
    const uint32_t version = r.u32();
    sess.mode = r.u8();
    sess.num_queries = r.u32();
    sess.params = HyperParams::from_config(r.str());
    if (version != kProtocolVersion) {
      ByteWriter w;
      w.u8(0);
      client.send(kTagHandshake, w.data());
      return std::nullopt;
    }
    ByteWriter w;
    w.u8(1);
    client.send(kTagHandshake, w.data());
  }
  {
    Frame f = server.recv();
    if (f.tag == kTagEnd) return std::nullopt;
    if (f.tag != kTagHandshake) throw ProtocolError(Stage::Handshake, "unexpected server frame");
    ByteReader r(f.payload);
    const uint32_t version = r.u32();
    const uint8_t mode = r.u8();
    const uint64_t digest = r.u64();
    const uint32_t num_queries = r.u32();
    ByteWriter w;
    const bool ok = version == kProtocolVersion && mode == sess.mode &&
                    digest == sess.params.digest() && num_queries == sess.num_queries;
    w.u8(ok ? 1 : 0);
    server.send(kTagHandshake, w.data());
    if (!ok) return std::nullopt;
  }
  return sess;
}

}  // namespace

uint64_t linear_query_seed(uint64_t server_seed, uint32_t query_index) {
  return mix_seed(server_seed, 4242, query_index);
}

uint64_t clustering_session_seed(uint64_t server_seed) { return mix_seed(server_seed, 7777); }

void Transcript::add_channel(const Channel& ch) {
  for (size_t s = 0; s < static_cast<size_t>(Stage::kCount); ++s) {
    const auto& c = ch.counters(static_cast<Stage>(s));
    rows[s].bytes_sent += c.bytes_sent;
    rows[s].bytes_received += c.bytes_received;
    rows[s].rounds += c.rounds;
  }
}

std::string Transcript::summary() const {
  std::ostringstream os;
  for (size_t s = 0; s < rows.size(); ++s) {
    const auto& r = rows[s];
    if (r.bytes_sent == 0 && r.bytes_received == 0) continue;
    os << stage_name(static_cast<Stage>(s)) << ": sent=" << r.bytes_sent
       << "B recv=" << r.bytes_received << "B rounds=" << r.rounds << "\n";
  }
  os << "wall_ms=" << wall_ms << "\n";
  return os.str();
}

std::string Transcript::csv() const {
  std::ostringstream os;
  os << "stage,bytes_sent,bytes_received,rounds\n";
  for (size_t s = 0; s < rows.size(); ++s) {
    const auto& r = rows[s];
    os << stage_name(static_cast<Stage>(s)) << ',' << r.bytes_sent << ',' << r.bytes_received << ','
       << r.rounds << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Linear scan.

ClientOutput linear_scan_client(Channel& to_server, Channel& to_dealer, const HyperParams& params,
                                const std::vector<std::vector<double>>& queries) {
  const auto start = std::chrono::steady_clock::now();
  const auto hs = client_handshake(to_server, to_dealer, params,
                                   kModeLinear, static_cast<uint32_t>(queries.size()));
  ClientOutput out;
  for (const auto& raw : queries) {
    const auto q = quantize(raw, params.b_c, hs.lo, hs.hi);
    const uint64_t q_norm = squared_norm(q.data(), params.d);

    ByteWriter w;
    w.u8(kDistQuery);
    w.u32(params.d);
    put_coords(w, q);
    to_dealer.send(kTagFDist, w.data());

    auto sraw = to_dealer.expect(kTagFDist);
    ByteReader sr(sraw);
    const auto s = get_vals32(sr, params.n);
    const auto a_c = client_dist_shares(s, q_norm, params.t);

    TopkHeader hdr{params.n, params.k_nn, params.l_s, params.r_p, params.b_pid, 0};
    const auto sel = party_topk_client(to_dealer, kTagFATopk, hdr, a_c, nullptr);

    auto reveal_raw = to_server.expect(kTagATopk);
    ByteReader rr(reveal_raw);
    const auto reveal = get_vals32(rr, params.k_nn);
    std::vector<uint64_t> ids(params.k_nn);
    for (uint32_t i = 0; i < params.k_nn; ++i) ids[i] = sel.ids[i] ^ reveal[i];
    out.ids.push_back(std::move(ids));
  }
  to_server.send(kTagEnd, {});
  to_dealer.send(kTagEnd, {});
  out.transcript.add_channel(to_server);
  out.transcript.add_channel(to_dealer);
  out.transcript.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void linear_scan_server(Channel& to_client, Channel& to_dealer, const HyperParams& params,
                        const LinearServerInput& input, uint64_t seed) {
  const auto& data = *input.data;
  const uint32_t num_queries =
      server_handshake(to_client, to_dealer, params, kModeLinear, input.lo, input.hi);

  // Upload the (unpermuted) point set once; per-query permutations are sent
  // as seeds.
  {
    ByteWriter w;
    w.u8(kDistUploadPoints);
    w.u64(data.n());
    w.u32(data.d);
    for (const auto& p : data.points) put_coords(w, p.coords);
    to_dealer.send(kTagFDist, w.data());
  }

  std::vector<uint64_t> norms(data.n()), ids(data.n());
  for (size_t i = 0; i < data.n(); ++i) {
    norms[i] = squared_norm(data.points[i].coords.data(), data.d);
    ids[i] = data.points[i].id;
  }

  for (uint32_t qi = 0; qi < num_queries; ++qi) {
    const uint64_t qseed = linear_query_seed(seed, qi);
    const uint64_t mask_seed = mix_seed(qseed, 99);
    const auto perm = derive_perm(qseed, kPermLinear, 0, data.n());

    ByteWriter w;
    w.u8(kDistLinearSeeds);
    w.u64(qseed);
    w.u64(mask_seed);
    to_dealer.send(kTagFDist, w.data());

    const auto r = server_mask_stream(mask_seed, data.n(), params.N, params.t);
    std::vector<uint64_t> perm_norms(data.n()), idlist(data.n());
    for (size_t j = 0; j < data.n(); ++j) {
      perm_norms[j] = norms[perm[j]];
      idlist[j] = ids[perm[j]];
    }
    const auto a_s = server_dist_shares(r, perm_norms, params.t);

    TopkHeader hdr{params.n, params.k_nn, params.l_s, params.r_p, params.b_pid, 0};
    const auto sel = party_topk_server(to_dealer, kTagFATopk, hdr, a_s, &idlist);

    ByteWriter reveal;
    put_vals32(reveal, sel.ids);
    to_client.send(kTagATopk, reveal.data());
  }
  to_client.expect(kTagEnd);
}

// ---------------------------------------------------------------------------
// DORAM read over channels.

std::vector<std::vector<uint8_t>> doram_multi_read_party(Channel& to_dealer, const MaskedDb& replica,
                                                         const std::vector<uint64_t>& index_shares) {
  ByteWriter w;
  w.u64(index_shares.size());
  put_vals32(w, index_shares);
  to_dealer.send(kTagFDromRead, w.data());

  auto raw = to_dealer.expect(kTagFDromRead);
  ByteReader r(raw);
  std::vector<std::vector<uint8_t>> blocks;
  blocks.reserve(index_shares.size());
  for (size_t i = 0; i < index_shares.size(); ++i) {
    const DpfKey key = DpfKey::deserialize(r);
    auto unmask = r.bytes(replica.block_bytes());
    auto share = doram_select(replica, key);
    xor_into(share.data(), unmask.data(), unmask.size());
    blocks.push_back(std::move(share));
  }
  return blocks;
}

void doram_multi_read_dealer(Channel& to_client, Channel& to_server, const PrfKey& key_a,
                             const PrfKey& key_b, uint32_t depth, uint32_t block_bits, Rng& rng) {
  auto craw = to_client.expect(kTagFDromRead);
  auto sraw = to_server.expect(kTagFDromRead);
  ByteReader cr(craw), sr(sraw);
  const uint64_t count = cr.u64();
  if (sr.u64() != count) throw ProtocolError(Stage::Oram, "read batch sizes disagree");
  const auto idx_c = get_vals32(cr, count);
  const auto idx_s = get_vals32(sr, count);

  const uint64_t n_blocks = 1ULL << depth;
  ByteWriter wc, ws;
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t index = (idx_c[i] + idx_s[i]) % n_blocks;
    const DpfKeyPair keys = dpf_gen(index, depth, rng);
    const UnmaskPair unmask = doram_unmask_material(key_a, key_b, index, block_bits, rng);
    wc.bytes(keys.a.serialize());
    wc.bytes(unmask.client);
    ws.bytes(keys.b.serialize());
    ws.bytes(unmask.server);
  }
  to_client.send(kTagFDromRead, wc.data());
  to_server.send(kTagFDromRead, ws.data());
}

// ---------------------------------------------------------------------------
// Clustering protocol.

namespace {

BlockCodec codec_for(const HyperParams& p) { return BlockCodec{p.d, p.b_c, p.b_pid, p.b_d, p.m}; }

Block encode_cluster_block(const Cluster& cluster, const BlockCodec& codec) {
  std::vector<BlockCodec::SlotFields> slots(cluster.slots.size());
  for (size_t s = 0; s < cluster.slots.size(); ++s) {
    const auto& slot = cluster.slots[s];
    slots[s].coords.assign(slot.point.coords.begin(), slot.point.coords.end());
    slots[s].id = slot.point.id;
    slots[s].norm = slot.norm;
    slots[s].flag = slot.dummy ? 1 : 0;
  }
  return codec.encode_slots(slots);
}

// Extract the b2a bit vector for retrieved slots: per slot, coords bits then
// norm bits, LSB first. Client and server must agree exactly.
std::vector<uint8_t> slot_conversion_bits(const std::vector<BlockCodec::SlotFields>& slots,
                                          const BlockCodec& codec) {
  std::vector<uint8_t> bits;
  bits.reserve(slots.size() * (codec.d * codec.b_c + codec.b_d));
  for (const auto& s : slots) {
    for (uint32_t j = 0; j < codec.d; ++j)
      for (uint32_t b = 0; b < codec.b_c; ++b)
        bits.push_back(static_cast<uint8_t>((s.coords[j] >> b) & 1));
    for (uint32_t b = 0; b < codec.b_d; ++b)
      bits.push_back(static_cast<uint8_t>((s.norm >> b) & 1));
  }
  return bits;
}

struct SlotShareVectors {
  std::vector<uint64_t> coords;  // count * d
  std::vector<uint64_t> norms;   // count
};

SlotShareVectors weigh_slot_shares(const std::vector<uint64_t>& bit_shares, size_t slot_count,
                                   const BlockCodec& codec, uint64_t t) {
  SlotShareVectors out;
  out.coords.resize(slot_count * codec.d);
  out.norms.resize(slot_count);
  const size_t per_slot = codec.d * codec.b_c + codec.b_d;
  for (size_t s = 0; s < slot_count; ++s) {
    size_t off = s * per_slot;
    for (uint32_t j = 0; j < codec.d; ++j) {
      out.coords[s * codec.d + j] = b2a_weigh(bit_shares, off, codec.b_c, t);
      off += codec.b_c;
    }
    out.norms[s] = b2a_weigh(bit_shares, off, codec.b_d, t);
  }
  return out;
}

std::vector<uint8_t> xor_id_bits(uint64_t id_share, uint32_t width) {
  std::vector<uint8_t> bits(width);
  for (uint32_t b = 0; b < width; ++b) bits[b] = static_cast<uint8_t>((id_share >> b) & 1);
  return bits;
}

}  // namespace

ClientOutput clustering_client(Channel& to_server, Channel& to_dealer, const HyperParams& params,
                               const std::vector<std::vector<double>>& queries) {
  const auto start = std::chrono::steady_clock::now();
  const auto hs = client_handshake(to_server, to_dealer, params, kModeClustering,
                                   static_cast<uint32_t>(queries.size()));
  const uint64_t t = params.t;
  const BlockCodec codec = codec_for(params);
  const uint32_t depth = params.b_cid;
  const uint64_t max_p = truncated_maxval(params.b_d, params.r_p);

  // Group offsets in the global block numbering.
  std::vector<uint64_t> offsets(params.T, 0);
  for (uint32_t g = 1; g < params.T; ++g) offsets[g] = offsets[g - 1] + params.k_c[g - 1];

  // Setup: receive the masked-database replica.
  MaskedDb replica;
  {
    auto raw = to_server.expect(kTagOram);
    ByteReader r(raw);
    replica.n_blocks = r.u64();
    replica.block_bits = r.u32();
    replica.prf_tag = r.u32();
    replica.data = r.bytes(replica.n_blocks * replica.block_bytes());
  }

  ClientOutput out;
  for (const auto& raw_query : queries) {
    const auto q = quantize(raw_query, params.b_c, hs.lo, hs.hi);
    const uint64_t q_norm = squared_norm(q.data(), params.d);

    // Step: query upload for this round's distance computations.
    {
      ByteWriter w;
      w.u8(kDistQuery);
      w.u32(params.d);
      put_coords(w, q);
      to_dealer.send(kTagFDist, w.data());
    }

    // Step: per group, truncated center distances + approximate selection.
    std::vector<uint64_t> sel_id_shares;  // XOR shares of shuffled positions
    for (uint32_t g = 0; g < params.T; ++g) {
      auto sraw = to_dealer.expect(kTagFDist);
      ByteReader sr(sraw);
      const auto s = get_vals32(sr, params.k_c[g]);
      const auto a_c = client_dist_shares(s, q_norm, t);
      TopkHeader hdr{params.k_c[g], params.u[g], params.l[g], params.r_c, params.b_cid, 0};
      const auto sel = party_topk_client(to_dealer, kTagFATopk, hdr, a_c, nullptr);
      sel_id_shares.insert(sel_id_shares.end(), sel.ids.begin(), sel.ids.end());
    }

    // Step: B2A of the selected cluster indices, then add public group
    // offsets to the client share.
    std::vector<uint8_t> idx_bits;
    idx_bits.reserve(sel_id_shares.size() * params.b_cid);
    for (uint64_t share : sel_id_shares) {
      const auto bits = xor_id_bits(share, params.b_cid);
      idx_bits.insert(idx_bits.end(), bits.begin(), bits.end());
    }
    const uint64_t idx_mod = 1ULL << depth;
    const auto idx_bit_shares = b2a_channels_client(to_dealer, to_server, idx_bits, idx_mod);
    std::vector<uint64_t> idx_shares(params.u_all);
    {
      size_t sel_i = 0;
      for (uint32_t g = 0; g < params.T; ++g) {
        for (uint32_t j = 0; j < params.u[g]; ++j, ++sel_i) {
          uint64_t share = b2a_weigh(idx_bit_shares, sel_i * params.b_cid, params.b_cid, idx_mod);
          idx_shares[sel_i] = mod_add(share, offsets[g], idx_mod);
        }
      }
    }

    // Step: DORAM multi-read of the selected blocks.
    const auto block_shares = doram_multi_read_party(to_dealer, replica, idx_shares);
    std::vector<BlockCodec::SlotFields> slots;
    slots.reserve(params.u_all * params.m);
    for (const auto& block : block_shares)
      for (uint32_t sidx = 0; sidx < params.m; ++sidx) slots.push_back(codec.decode_slot(block, sidx));

    // Step: B2A of retrieved coordinates and norms.
    const auto conv_bits = slot_conversion_bits(slots, codec);
    const auto conv_shares = b2a_channels_client(to_dealer, to_server, conv_bits, t);
    const auto vecs = weigh_slot_shares(conv_shares, slots.size(), codec, t);

    // Step: distance shares for retrieved points, dummies pinned inside the
    // functionality via the XOR-shared flags.
    std::vector<uint64_t> cand_ac;
    {
      ByteWriter w;
      w.u8(kDistSharedClient);
      w.u64(slots.size());
      put_vals32(w, vecs.coords);
      put_vals32(w, vecs.norms);
      for (const auto& s : slots) w.u8(s.flag);
      to_dealer.send(kTagFDist, w.data());
      auto raw = to_dealer.expect(kTagFDist);
      ByteReader r(raw);
      cand_ac = get_vals32(r, slots.size());
    }

    // Step: exact top-k over retrieved candidates (value+id shares back).
    std::vector<uint64_t> cand_ids(slots.size());
    for (size_t i = 0; i < slots.size(); ++i) cand_ids[i] = slots[i].id;
    TopkHeader cand_hdr{slots.size(), params.k_nn, 0, params.r_p, params.b_pid, 1};
    const auto cluster_top = party_topk_client(to_dealer, kTagFTopk, cand_hdr, cand_ac, &cand_ids);

    // Step: stash scan (skipped for an empty stash; sentinels stand in).
    TopkShareOut stash_top;
    if (params.s > 0) {
      auto sraw = to_dealer.expect(kTagFDist);
      ByteReader sr(sraw);
      const auto s = get_vals32(sr, params.s);
      const auto a_c = client_dist_shares(s, q_norm, t);
      TopkHeader hdr{params.s, params.k_nn, params.l_s, params.r_p, params.b_pid, 1};
      stash_top = party_topk_client(to_dealer, kTagFATopk, hdr, a_c, nullptr);
    } else {
      stash_top.ids.assign(params.k_nn, 0);
      stash_top.vals.assign(params.k_nn, max_p);
    }

    // Step: final exact top-k over the 2k candidates, cluster block first.
    std::vector<uint64_t> final_vals = cluster_top.vals;
    final_vals.insert(final_vals.end(), stash_top.vals.begin(), stash_top.vals.end());
    std::vector<uint64_t> final_ids = cluster_top.ids;
    final_ids.insert(final_ids.end(), stash_top.ids.begin(), stash_top.ids.end());
    TopkHeader final_hdr{2ULL * params.k_nn, params.k_nn, 0, 0, params.b_pid, 0};
    const auto final_sel =
        party_topk_client(to_dealer, kTagFTopk, final_hdr, final_vals, &final_ids);

    auto reveal_raw = to_server.expect(kTagTopk);
    ByteReader rr(reveal_raw);
    const auto reveal = get_vals32(rr, params.k_nn);
    std::vector<uint64_t> ids(params.k_nn);
    for (uint32_t i = 0; i < params.k_nn; ++i) ids[i] = final_sel.ids[i] ^ reveal[i];
    out.ids.push_back(std::move(ids));
  }
  to_server.send(kTagEnd, {});
  to_dealer.send(kTagEnd, {});
  out.transcript.add_channel(to_server);
  out.transcript.add_channel(to_dealer);
  out.transcript.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void clustering_server(Channel& to_client, Channel& to_dealer, const HyperParams& params,
                       const ClusterServerInput& input, uint64_t seed) {
  const ClusterIndex& index = *input.index;
  const uint64_t t = params.t;
  const BlockCodec codec = codec_for(params);
  const uint32_t depth = params.b_cid;

  const uint32_t num_queries =
      server_handshake(to_client, to_dealer, params, kModeClustering, input.lo, input.hi);
  const uint64_t session_seed = clustering_session_seed(seed);

  // Session shuffles: one permutation per group of clusters, one for the
  // stash points.
  std::vector<std::vector<uint32_t>> group_perms(params.T);
  for (uint32_t g = 0; g < params.T; ++g)
    group_perms[g] = derive_perm(session_seed, kPermGroup, g, params.k_c[g]);
  const auto stash_perm = derive_perm(session_seed, kPermStash, 0, index.stash.size());

  // DORAM init: blocks in shuffled order with global numbering, padded to the
  // power-of-two domain. Both parties keep a replica; the dealer gets the PRF
  // keys for the trusted unmask step.
  const uint64_t n_blocks = 1ULL << depth;
  MaskedDb replica;
  {
    std::vector<Block> blocks;
    blocks.reserve(n_blocks);
    for (uint32_t g = 0; g < params.T; ++g)
      for (uint32_t j = 0; j < params.k_c[g]; ++j)
        blocks.push_back(encode_cluster_block(index.groups[g].clusters[group_perms[g][j]], codec));
    blocks.resize(n_blocks, Block(codec.block_bytes(), 0));

    Rng key_rng(mix_seed(session_seed, 31));
    const PrfKey key_a{key_rng.u64(), key_rng.u64()};
    const PrfKey key_b{key_rng.u64(), key_rng.u64()};
    replica = doram_init(blocks, codec.block_bits(), key_a, key_b);

    ByteWriter w;
    w.u64(replica.n_blocks);
    w.u32(replica.block_bits);
    w.u32(replica.prf_tag);
    w.bytes(replica.data);
    to_client.send(kTagOram, w.data());

    ByteWriter wd;
    wd.u64(key_a[0]);
    wd.u64(key_a[1]);
    wd.u64(key_b[0]);
    wd.u64(key_b[1]);
    wd.u64(replica.n_blocks);
    wd.u32(replica.block_bits);
    to_dealer.send(kTagFDromInit, wd.data());
  }

  // Upload shuffled centers and stash coordinates for the distance stages.
  {
    ByteWriter w;
    w.u8(kDistUploadIndex);
    w.u32(params.T);
    for (uint32_t g = 0; g < params.T; ++g) {
      w.u64(params.k_c[g]);
      for (uint32_t j = 0; j < params.k_c[g]; ++j)
        put_coords(w, index.groups[g].clusters[group_perms[g][j]].center);
    }
    w.u64(index.stash.size());
    for (size_t i = 0; i < index.stash.size(); ++i)
      put_coords(w, index.stash[stash_perm[i]].coords);
    to_dealer.send(kTagFDist, w.data());
  }

  // Precomputed norms in shuffled order.
  std::vector<std::vector<uint64_t>> center_norms(params.T);
  for (uint32_t g = 0; g < params.T; ++g) {
    center_norms[g].resize(params.k_c[g]);
    for (uint32_t j = 0; j < params.k_c[g]; ++j) {
      const auto& c = index.groups[g].clusters[group_perms[g][j]].center;
      center_norms[g][j] = squared_norm(c.data(), params.d);
    }
  }
  std::vector<uint64_t> stash_norms(index.stash.size()), stash_ids(index.stash.size());
  for (size_t i = 0; i < index.stash.size(); ++i) {
    const auto& p = index.stash[stash_perm[i]];
    stash_norms[i] = squared_norm(p.coords.data(), params.d);
    stash_ids[i] = p.id;
  }

  for (uint32_t qi = 0; qi < num_queries; ++qi) {
    // Step: per-group center distances and cluster selection.
    std::vector<uint64_t> sel_id_shares;
    for (uint32_t g = 0; g < params.T; ++g) {
      const uint64_t mask_seed = mix_seed(session_seed, 50, (static_cast<uint64_t>(qi) << 16) | g);
      ByteWriter w;
      w.u8(kDistGroupSeed);
      w.u32(g);
      w.u64(mask_seed);
      to_dealer.send(kTagFDist, w.data());

      const auto r = server_mask_stream(mask_seed, params.k_c[g], params.N, t);
      const auto a_s = server_dist_shares(r, center_norms[g], t);
      TopkHeader hdr{params.k_c[g], params.u[g], params.l[g], params.r_c, params.b_cid, 0};
      const auto sel = party_topk_server(to_dealer, kTagFATopk, hdr, a_s, nullptr);
      sel_id_shares.insert(sel_id_shares.end(), sel.ids.begin(), sel.ids.end());
    }

    // Step: B2A of index shares (server side adds no offsets).
    std::vector<uint8_t> idx_bits;
    idx_bits.reserve(sel_id_shares.size() * params.b_cid);
    for (uint64_t share : sel_id_shares) {
      const auto bits = xor_id_bits(share, params.b_cid);
      idx_bits.insert(idx_bits.end(), bits.begin(), bits.end());
    }
    const uint64_t idx_mod = 1ULL << depth;
    const auto idx_bit_shares = b2a_channels_server(to_dealer, to_client, idx_bits, idx_mod);
    std::vector<uint64_t> idx_shares(params.u_all);
    for (uint32_t i = 0; i < params.u_all; ++i)
      idx_shares[i] = b2a_weigh(idx_bit_shares, i * params.b_cid, params.b_cid, idx_mod);

    // Step: DORAM multi-read.
    const auto block_shares = doram_multi_read_party(to_dealer, replica, idx_shares);
    std::vector<BlockCodec::SlotFields> slots;
    slots.reserve(params.u_all * params.m);
    for (const auto& block : block_shares)
      for (uint32_t sidx = 0; sidx < params.m; ++sidx) slots.push_back(codec.decode_slot(block, sidx));

    // Step: B2A of retrieved coordinates and norms.
    const auto conv_bits = slot_conversion_bits(slots, codec);
    const auto conv_shares = b2a_channels_server(to_dealer, to_client, conv_bits, t);
    const auto vecs = weigh_slot_shares(conv_shares, slots.size(), codec, t);

    // Step: distance shares for retrieved points.
    std::vector<uint64_t> cand_as;
    {
      ByteWriter w;
      w.u8(kDistSharedServer);
      w.u64(slots.size());
      put_vals32(w, vecs.coords);
      put_vals32(w, vecs.norms);
      for (const auto& s : slots) w.u8(s.flag);
      to_dealer.send(kTagFDist, w.data());
      auto raw = to_dealer.expect(kTagFDist);
      ByteReader r(raw);
      cand_as = get_vals32(r, slots.size());
    }

    // Step: exact top-k over retrieved candidates.
    std::vector<uint64_t> cand_ids(slots.size());
    for (size_t i = 0; i < slots.size(); ++i) cand_ids[i] = slots[i].id;
    TopkHeader cand_hdr{slots.size(), params.k_nn, 0, params.r_p, params.b_pid, 1};
    const auto cluster_top = party_topk_server(to_dealer, kTagFTopk, cand_hdr, cand_as, &cand_ids);

    // Step: stash scan.
    TopkShareOut stash_top;
    if (params.s > 0) {
      const uint64_t mask_seed = mix_seed(session_seed, 60, qi);
      ByteWriter w;
      w.u8(kDistStashSeed);
      w.u64(mask_seed);
      to_dealer.send(kTagFDist, w.data());
      const auto r = server_mask_stream(mask_seed, index.stash.size(), params.N, t);
      const auto a_s = server_dist_shares(r, stash_norms, t);
      TopkHeader hdr{params.s, params.k_nn, params.l_s, params.r_p, params.b_pid, 1};
      stash_top = party_topk_server(to_dealer, kTagFATopk, hdr, a_s, &stash_ids);
    } else {
      stash_top.ids.assign(params.k_nn, 0);
      stash_top.vals.assign(params.k_nn, 0);
    }

    // Step: final selection and reveal of the server id shares.
    std::vector<uint64_t> final_vals = cluster_top.vals;
    final_vals.insert(final_vals.end(), stash_top.vals.begin(), stash_top.vals.end());
    std::vector<uint64_t> final_ids = cluster_top.ids;
    final_ids.insert(final_ids.end(), stash_top.ids.begin(), stash_top.ids.end());
    TopkHeader final_hdr{2ULL * params.k_nn, params.k_nn, 0, 0, params.b_pid, 0};
    const auto final_sel = party_topk_server(to_dealer, kTagFTopk, final_hdr, final_vals, &final_ids);

    ByteWriter reveal;
    put_vals32(reveal, final_sel.ids);
    to_client.send(kTagTopk, reveal.data());
  }
  to_client.expect(kTagEnd);
}

// ---------------------------------------------------------------------------
// Dealer.

void dealer_serve(Channel& to_client, Channel& to_server, uint64_t seed) {
  const auto sess_opt = dealer_handshake(to_client, to_server);
  if (!sess_opt) return;
  const DealerSession& sess = *sess_opt;
  const HyperParams& params = sess.params;
  const uint64_t t = params.t;
  Rng rng(seed);

  if (sess.mode == kModeLinear) {
    // Setup: point upload.
    std::vector<QuantizedPoint> points;
    {
      auto raw = to_server.expect(kTagFDist);
      ByteReader r(raw);
      if (r.u8() != kDistUploadPoints) throw ProtocolError(Stage::Dist, "expected point upload");
      const uint64_t n = r.u64();
      const uint32_t d = r.u32();
      points.resize(n);
      for (auto& p : points) p.coords = get_coords(r, d);
    }

    for (uint32_t qi = 0; qi < sess.num_queries; ++qi) {
      // Query coordinates from the client.
      auto qraw = to_client.expect(kTagFDist);
      ByteReader qr(qraw);
      if (qr.u8() != kDistQuery) throw ProtocolError(Stage::Dist, "expected query upload");
      const uint32_t d = qr.u32();
      const auto q = get_coords(qr, d);

      // Permutation + mask seeds from the server.
      auto sraw = to_server.expect(kTagFDist);
      ByteReader sr(sraw);
      if (sr.u8() != kDistLinearSeeds) throw ProtocolError(Stage::Dist, "expected seed message");
      const uint64_t qseed = sr.u64();
      const uint64_t mask_seed = sr.u64();
      const auto perm = derive_perm(qseed, kPermLinear, 0, points.size());

      const auto s = dealer_masked_products(q, points, &perm, mask_seed, params.N, t);
      ByteWriter w;
      put_vals32(w, s);
      to_client.send(kTagFDist, w.data());

      dealer_topk(to_client, to_server, kTagFATopk, t, rng);
    }
    to_client.expect(kTagEnd);
    return;
  }

  // Clustering mode.
  PrfKey key_a{}, key_b{};
  uint32_t depth = 0;
  uint32_t block_bits = 0;
  {
    auto raw = to_server.expect(kTagFDromInit);
    ByteReader r(raw);
    key_a = {r.u64(), r.u64()};
    key_b = {r.u64(), r.u64()};
    const uint64_t n_blocks = r.u64();
    depth = ceil_log2(n_blocks);
    block_bits = r.u32();
  }
  std::vector<std::vector<QuantizedPoint>> centers;
  std::vector<QuantizedPoint> stash;
  {
    auto raw = to_server.expect(kTagFDist);
    ByteReader r(raw);
    if (r.u8() != kDistUploadIndex) throw ProtocolError(Stage::Dist, "expected index upload");
    const uint32_t T = r.u32();
    centers.resize(T);
    for (uint32_t g = 0; g < T; ++g) {
      const uint64_t kc = r.u64();
      centers[g].resize(kc);
      for (auto& c : centers[g]) c.coords = get_coords(r, params.d);
    }
    const uint64_t s_count = r.u64();
    stash.resize(s_count);
    for (auto& p : stash) p.coords = get_coords(r, params.d);
  }

  for (uint32_t qi = 0; qi < sess.num_queries; ++qi) {
    // Query upload.
    auto qraw = to_client.expect(kTagFDist);
    ByteReader qr(qraw);
    if (qr.u8() != kDistQuery) throw ProtocolError(Stage::Dist, "expected query upload");
    const uint32_t d = qr.u32();
    const auto q = get_coords(qr, d);

    // Per-group distance stage + selection.
    for (uint32_t g = 0; g < params.T; ++g) {
      auto sraw = to_server.expect(kTagFDist);
      ByteReader sr(sraw);
      if (sr.u8() != kDistGroupSeed) throw ProtocolError(Stage::Dist, "expected group seed");
      const uint32_t group = sr.u32();
      const uint64_t mask_seed = sr.u64();
      if (group != g) throw ProtocolError(Stage::Dist, "group order mismatch");
      const auto s = dealer_masked_products(q, centers[g], nullptr, mask_seed, params.N, t);
      ByteWriter w;
      put_vals32(w, s);
      to_client.send(kTagFDist, w.data());
      dealer_topk(to_client, to_server, kTagFATopk, t, rng);
    }

    // Index-share B2A, DORAM read, slot B2A.
    b2a_channels_dealer(to_client, to_server, rng);
    doram_multi_read_dealer(to_client, to_server, key_a, key_b, depth, block_bits, rng);
    b2a_channels_dealer(to_client, to_server, rng);

    // Shared-input distance functionality over retrieved slots.
    {
      auto craw = to_client.expect(kTagFDist);
      auto sraw = to_server.expect(kTagFDist);
      ByteReader cr(craw), sr(sraw);
      if (cr.u8() != kDistSharedClient || sr.u8() != kDistSharedServer)
        throw ProtocolError(Stage::Dist, "expected shared distance submissions");
      FDistSharedRequest req;
      req.t = t;
      req.q = q;
      const uint64_t count = cr.u64();
      if (sr.u64() != count) throw ProtocolError(Stage::Dist, "shared distance sizes disagree");
      req.coords_c = get_vals32(cr, count * params.d);
      req.norms_c = get_vals32(cr, count);
      req.flags_c.resize(count);
      for (auto& f : req.flags_c) f = cr.u8();
      req.coords_s = get_vals32(sr, count * params.d);
      req.norms_s = get_vals32(sr, count);
      req.flags_s.resize(count);
      for (auto& f : req.flags_s) f = sr.u8();

      const auto out = f_dist_shared(req, rng);
      ByteWriter wc, ws;
      put_vals32(wc, out.client);
      put_vals32(ws, out.server);
      to_client.send(kTagFDist, wc.data());
      to_server.send(kTagFDist, ws.data());
    }

    // Exact top-k over candidates.
    dealer_topk(to_client, to_server, kTagFTopk, t, rng);

    // Stash stage.
    if (params.s > 0) {
      auto sraw = to_server.expect(kTagFDist);
      ByteReader sr(sraw);
      if (sr.u8() != kDistStashSeed) throw ProtocolError(Stage::Dist, "expected stash seed");
      const uint64_t mask_seed = sr.u64();
      const auto s = dealer_masked_products(q, stash, nullptr, mask_seed, params.N, t);
      ByteWriter w;
      put_vals32(w, s);
      to_client.send(kTagFDist, w.data());
      dealer_topk(to_client, to_server, kTagFATopk, t, rng);
    }

    // Final selection.
    dealer_topk(to_client, to_server, kTagFTopk, t, rng);
  }
  to_client.expect(kTagEnd);
}

// ---------------------------------------------------------------------------
// In-process harness.

namespace {

InprocResult run_inproc(uint8_t mode, const HyperParams& params, const QuantizedDataset* data,
                        const ClusterIndex* index, const std::vector<std::vector<double>>& queries,
                        uint64_t server_seed, uint64_t dealer_seed, double lo, double hi) {
  auto [client_to_server, server_to_client] = MemChannel::make_pair();
  auto [client_to_dealer, dealer_to_client] = MemChannel::make_pair();
  auto [server_to_dealer, dealer_to_server] = MemChannel::make_pair();

  if (hi == 0.0) hi = static_cast<double>((1ULL << params.b_c) - 1);

  InprocResult result;
  std::exception_ptr client_err, server_err, dealer_err;

  std::thread server_thread([&] {
    try {
      if (mode == kModeLinear) {
        LinearServerInput input{data, lo, hi};
        linear_scan_server(*server_to_client, *server_to_dealer, params, input, server_seed);
      } else {
        ClusterServerInput input{index, lo, hi};
        clustering_server(*server_to_client, *server_to_dealer, params, input, server_seed);
      }
    } catch (...) {
      server_err = std::current_exception();
    }
    result.server_transcript.add_channel(*server_to_client);
    result.server_transcript.add_channel(*server_to_dealer);
  });
  std::thread dealer_thread([&] {
    try {
      dealer_serve(*dealer_to_client, *dealer_to_server, dealer_seed);
    } catch (...) {
      dealer_err = std::current_exception();
    }
  });

  try {
    if (mode == kModeLinear) {
      result.client = linear_scan_client(*client_to_server, *client_to_dealer, params, queries);
    } else {
      result.client = clustering_client(*client_to_server, *client_to_dealer, params, queries);
    }
  } catch (...) {
    client_err = std::current_exception();
  }
  server_thread.join();
  dealer_thread.join();
  if (client_err) std::rethrow_exception(client_err);
  if (server_err) std::rethrow_exception(server_err);
  if (dealer_err) std::rethrow_exception(dealer_err);
  return result;
}

}  // namespace

InprocResult run_linear_scan_inproc(const HyperParams& params, const QuantizedDataset& data,
                                    const std::vector<std::vector<double>>& queries,
                                    uint64_t server_seed, uint64_t dealer_seed, double lo,
                                    double hi) {
  return run_inproc(kModeLinear, params, &data, nullptr, queries, server_seed, dealer_seed, lo, hi);
}

InprocResult run_clustering_inproc(const HyperParams& params, const ClusterIndex& index,
                                   const std::vector<std::vector<double>>& queries,
                                   uint64_t server_seed, uint64_t dealer_seed, double lo,
                                   double hi) {
  return run_inproc(kModeClustering, params, nullptr, &index, queries, server_seed, dealer_seed, lo,
                    hi);
}

}  // namespace sknn
