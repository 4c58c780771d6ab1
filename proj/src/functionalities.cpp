#include "sknn/functionalities.hpp"

#include <stdexcept>

#include "sknn/core.hpp"
#include "sknn/plaintext.hpp"
#include "sknn/shares.hpp"

namespace sknn {

namespace {

std::vector<ScoredId> reconstruct_items(const FTopkRequest& req) {
  const size_t n = req.a_c.size();
  if (req.a_s.size() != n || req.idlist_s.size() != n)
    throw std::invalid_argument("f_topk: array length mismatch");
  if (req.idlist_c && req.idlist_c->size() != n)
    throw std::invalid_argument("f_topk: idlist length mismatch");
  if (req.k == 0) throw std::invalid_argument("f_topk: k must be positive");
  if (req.t == 0 || (req.t & (req.t - 1)) != 0)
    throw std::invalid_argument("f_topk: modulus must be a power of two");

  std::vector<ScoredId> items(n);
  for (size_t i = 0; i < n; ++i) {
    const uint64_t a = mod_add(req.a_c[i], req.a_s[i], req.t);
    const uint64_t id_c = req.idlist_c ? (*req.idlist_c)[i] : 0;
    items[i].value = a >> req.r;
    items[i].id = id_c ^ req.idlist_s[i];
  }
  return items;
}

FTopkOutputs mask_outputs(const std::vector<ScoredId>& top, const FTopkRequest& req, Rng& rng) {
  FTopkOutputs out;
  out.ids_client.resize(top.size());
  out.ids_server.resize(top.size());
  for (size_t i = 0; i < top.size(); ++i) {
    const uint64_t w = rng.bits(req.id_bits);
    out.ids_server[i] = w;
    out.ids_client[i] = top[i].id ^ w;
  }
  if (req.return_val) {
    out.vals_client.resize(top.size());
    out.vals_server.resize(top.size());
    for (size_t i = 0; i < top.size(); ++i) {
      const uint64_t s = rng.below(req.t);
      out.vals_server[i] = s;
      out.vals_client[i] = mod_sub(top[i].value, s, req.t);
    }
  }
  return out;
}

}  // namespace

FTopkOutputs f_topk(const FTopkRequest& req, Rng& rng) {
  const auto items = reconstruct_items(req);
  const uint64_t maxval = (req.t - 1) >> req.r;
  return mask_outputs(naive_topk(items, req.k, maxval), req, rng);
}

FTopkOutputs f_atopk(const FTopkRequest& req, uint32_t l, Rng& rng) {
  const auto items = reconstruct_items(req);
  if (req.k > l) throw std::invalid_argument("f_atopk: k must not exceed l");
  if (static_cast<size_t>(l) > items.size())
    throw std::invalid_argument("f_atopk: l must not exceed n");
  const uint64_t maxval = (req.t - 1) >> req.r;
  return mask_outputs(approx_topk(items, req.k, l, maxval), req, rng);
}

void FDrom::init(std::vector<std::vector<uint8_t>> blocks) { blocks_ = std::move(blocks); }

FDrom::ReadResult FDrom::read(uint64_t i_c, uint64_t i_s, Rng& rng) const {
  if (blocks_.empty()) throw std::logic_error("FDrom: read before init");
  const uint64_t i = (i_c + i_s) % blocks_.size();
  const auto& block = blocks_[i];
  ReadResult res;
  res.server.resize(block.size());
  rng.fill(res.server.data(), res.server.size());
  res.client = block;
  for (size_t b = 0; b < block.size(); ++b) res.client[b] ^= res.server[b];
  return res;
}

FDistOutputs f_dist(const std::vector<uint32_t>& q, const std::vector<std::vector<uint32_t>>& points,
                    uint64_t t, Rng& rng) {
  FDistOutputs out;
  out.client.resize(points.size());
  out.server.resize(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != q.size()) throw std::invalid_argument("f_dist: dimension mismatch");
    const uint64_t dist =
        squared_distance(q.data(), points[i].data(), static_cast<uint32_t>(q.size())) & (t - 1);
    const uint64_t share_c = rng.below(t);
    out.client[i] = share_c;
    out.server[i] = mod_sub(dist, share_c, t);
  }
  return out;
}

FDistOutputs f_dist_shared(const FDistSharedRequest& req, Rng& rng) {
  const size_t count = req.norms_c.size();
  const size_t d = req.q.size();
  if (req.norms_s.size() != count || req.flags_c.size() != count || req.flags_s.size() != count ||
      req.coords_c.size() != count * d || req.coords_s.size() != count * d)
    throw std::invalid_argument("f_dist_shared: length mismatch");
  const uint64_t t = req.t;

  uint64_t q_norm = 0;
  for (uint32_t v : req.q) q_norm += static_cast<uint64_t>(v) * v;

  FDistOutputs out;
  out.client.resize(count);
  out.server.resize(count);
  for (size_t i = 0; i < count; ++i) {
    uint64_t dist;
    if (((req.flags_c[i] ^ req.flags_s[i]) & 1) != 0) {
      dist = t - 1;  // dummy slot: pin to the all-ones distance
    } else {
      uint64_t dot = 0;
      uint64_t norm = mod_add(req.norms_c[i], req.norms_s[i], t);
      for (size_t j = 0; j < d; ++j) {
        const uint64_t coord = mod_add(req.coords_c[i * d + j], req.coords_s[i * d + j], t);
        dot = mod_add(dot, mod_mul(req.q[j], coord, t), t);
      }
      dist = mod_sub(mod_add(q_norm & (t - 1), norm, t), mod_mul(2, dot, t), t);
    }
    const uint64_t share_c = rng.below(t);
    out.client[i] = share_c;
    out.server[i] = mod_sub(dist, share_c, t);
  }
  return out;
}

}  // namespace sknn
