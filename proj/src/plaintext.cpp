#include "sknn/plaintext.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "sknn/bytes.hpp"

namespace sknn {

std::vector<ScoredId> naive_topk(const std::vector<ScoredId>& items, uint32_t k, uint64_t maxval) {
  if (k == 0) throw std::invalid_argument("naive_topk: k must be positive");
  std::vector<ScoredId> window(k, ScoredId{maxval, 0});
  for (const ScoredId& item : items) {
    ScoredId x = item;
    for (uint32_t j = 0; j < k; ++j) {
      if (x.value < window[j].value) std::swap(window[j], x);
    }
  }
  return window;
}

std::vector<ScoredId> approx_topk(const std::vector<ScoredId>& items, uint32_t k, uint32_t l,
                                  uint64_t maxval) {
  if (l == 0) throw std::invalid_argument("approx_topk: l must be positive");
  if (k > l) throw std::invalid_argument("approx_topk: k must not exceed l");
  const size_t n = items.size();
  const size_t chunk = n == 0 ? 1 : (n + l - 1) / l;
  // Each non-empty bin's minimum chain is seeded from its first element
  // (size-1 pairwise comparisons); empty bins contribute a MAXVAL sentinel.
  std::vector<ScoredId> minima(l, ScoredId{maxval, 0});
  for (uint32_t b = 0; b < l; ++b) {
    const size_t begin = static_cast<size_t>(b) * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) continue;
    minima[b] = items[begin];
    for (size_t i = begin + 1; i < end; ++i) {
      if (items[i].value < minima[b].value) minima[b] = items[i];
    }
  }
  return naive_topk(minima, k, maxval);
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double point_center_dist2(const QuantizedPoint& p, const std::vector<double>& c) {
  double acc = 0.0;
  for (size_t j = 0; j < c.size(); ++j) {
    const double diff = static_cast<double>(p.coords[j]) - c[j];
    acc += diff * diff;
  }
  return acc;
}

// argmin over centers using ||x||^2 - 2<x,c> + ||c||^2; the x-norm is common
// and dropped.
uint32_t nearest_center(const QuantizedPoint& p, const std::vector<std::vector<double>>& centers,
                        const std::vector<double>& center_norms, double* best_out) {
  uint32_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  const size_t d = p.coords.size();
  for (size_t c = 0; c < centers.size(); ++c) {
    const double* cc = centers[c].data();
    double dot = 0.0;
    for (size_t j = 0; j < d; ++j) dot += static_cast<double>(p.coords[j]) * cc[j];
    const double score = center_norms[c] - 2.0 * dot;
    if (score < best_score) {
      best_score = score;
      best = static_cast<uint32_t>(c);
    }
  }
  if (best_out) *best_out = best_score;
  return best;
}

std::vector<double> norms_of(const std::vector<std::vector<double>>& centers) {
  std::vector<double> out(centers.size());
  for (size_t c = 0; c < centers.size(); ++c) {
    double acc = 0.0;
    for (double v : centers[c]) acc += v * v;
    out[c] = acc;
  }
  return out;
}

}  // namespace

KmeansResult kmeans(const std::vector<const QuantizedPoint*>& points, uint32_t k, Rng& rng,
                    const KmeansOptions& opts) {
  const size_t n = points.size();
  if (k == 0 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= n");
  const size_t d = points[0]->coords.size();

  KmeansResult res;
  res.centers.reserve(k);

  // k-means++ seeding.
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  {
    const size_t first = static_cast<size_t>(rng.below(n));
    res.centers.emplace_back(points[first]->coords.begin(), points[first]->coords.end());
    for (size_t i = 0; i < n; ++i) min_d2[i] = point_center_dist2(*points[i], res.centers[0]);
    while (res.centers.size() < k) {
      double total = std::accumulate(min_d2.begin(), min_d2.end(), 0.0);
      size_t pick = 0;
      if (total > 0.0) {
        double target = rng.real01() * total;
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
          acc += min_d2[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<size_t>(rng.below(n));
      }
      res.centers.emplace_back(points[pick]->coords.begin(), points[pick]->coords.end());
      const auto& nc = res.centers.back();
      for (size_t i = 0; i < n; ++i)
        min_d2[i] = std::min(min_d2[i], point_center_dist2(*points[i], nc));
    }
  }

  res.assign.assign(n, 0);
  std::vector<double> center_norms = norms_of(res.centers);
  std::vector<uint32_t> counts(k, 0);

  for (uint32_t it = 0; it < opts.iters; ++it) {
    // Assignment.
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      const uint32_t c = nearest_center(*points[i], res.centers, center_norms, nullptr);
      if (c != res.assign[i]) {
        res.assign[i] = c;
        changed = true;
      }
    }

    // Update.
    for (auto& c : res.centers) std::fill(c.begin(), c.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < n; ++i) {
      auto& c = res.centers[res.assign[i]];
      for (size_t j = 0; j < d; ++j) c[j] += static_cast<double>(points[i]->coords[j]);
      ++counts[res.assign[i]];
    }
    for (uint32_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (size_t j = 0; j < d; ++j) res.centers[c][j] /= counts[c];
    }
    center_norms = norms_of(res.centers);

    // Re-seed any empty cluster at the point farthest from its own center.
    for (uint32_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      double worst = -1.0;
      size_t worst_i = 0;
      for (size_t i = 0; i < n; ++i) {
        const double dd = point_center_dist2(*points[i], res.centers[res.assign[i]]);
        if (dd > worst) {
          worst = dd;
          worst_i = i;
        }
      }
      res.centers[c].assign(points[worst_i]->coords.begin(), points[worst_i]->coords.end());
      counts[c] = 1;
      res.assign[worst_i] = c;
      center_norms[c] = 0.0;
      for (double v : res.centers[c]) center_norms[c] += v * v;
      changed = true;
    }

    if (opts.track_history) {
      double obj = 0.0;
      for (size_t i = 0; i < n; ++i)
        obj += point_center_dist2(*points[i], res.centers[res.assign[i]]);
      res.objective_history.push_back(obj);
    }
    if (!changed) break;
  }

  // Final assignment pass so assignments match the returned centers.
  res.objective = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double score;
    res.assign[i] = nearest_center(*points[i], res.centers, center_norms, &score);
    res.objective += point_center_dist2(*points[i], res.centers[res.assign[i]]);
  }
  if (opts.track_history) res.objective_history.push_back(res.objective);
  return res;
}

// ---------------------------------------------------------------------------
// Balanced clustering

namespace {

struct ProbeResult {
  bool ok = false;
  KmeansResult km;
};

ProbeResult probe_k(const std::vector<const QuantizedPoint*>& pts, uint32_t k, uint32_t m,
                    double alpha, uint64_t seed, uint32_t iters) {
  Rng rng(seed);
  KmeansOptions opts;
  opts.iters = iters;
  ProbeResult res;
  res.km = kmeans(pts, k, rng, opts);
  std::vector<uint32_t> sizes(k, 0);
  for (uint32_t a : res.km.assign) ++sizes[a];
  uint64_t in_big = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    if (sizes[res.km.assign[i]] > m) ++in_big;
  res.ok = static_cast<double>(in_big) <= alpha * static_cast<double>(pts.size());
  return res;
}

}  // namespace

RawGroups balance_clusters(const QuantizedDataset& data, uint32_t m, double alpha, uint64_t seed,
                           const BalanceOptions& opts) {
  if (m == 0 || m > data.n()) throw std::invalid_argument("balance_clusters: need 1 <= m <= n");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("balance_clusters: bad alpha");

  RawGroups groups;
  std::vector<uint32_t> working(data.n());
  std::iota(working.begin(), working.end(), 0);

  const uint32_t max_levels =
      static_cast<uint32_t>(std::ceil(std::log(static_cast<double>(std::max<size_t>(2, data.n()))) /
                                      std::log(1.0 / alpha))) +
      opts.extra_levels;

  uint32_t level = 0;
  while (!working.empty()) {
    if (level >= max_levels) {
      // Termination guard: chop the remainder into chunks of m.
      std::vector<RawCluster> forced;
      for (size_t off = 0; off < working.size(); off += m) {
        RawCluster c;
        const size_t end = std::min(working.size(), off + m);
        c.members.assign(working.begin() + off, working.begin() + end);
        c.center.assign(data.d, 0.0);
        for (uint32_t idx : c.members)
          for (uint32_t j = 0; j < data.d; ++j)
            c.center[j] += static_cast<double>(data.points[idx].coords[j]);
        for (uint32_t j = 0; j < data.d; ++j) c.center[j] /= static_cast<double>(c.members.size());
        forced.push_back(std::move(c));
      }
      groups.push_back(std::move(forced));
      break;
    }

    std::vector<const QuantizedPoint*> pts(working.size());
    for (size_t i = 0; i < working.size(); ++i) pts[i] = &data.points[working[i]];
    const size_t n_work = working.size();

    // Smallest k with <= alpha-fraction of the working set in oversized
    // clusters. Any valid k satisfies k*m >= (1-alpha)*n, which prunes the
    // doubling phase; binary search finishes the job.
    const uint32_t k_floor = std::max<uint32_t>(
        1, static_cast<uint32_t>(std::ceil((1.0 - alpha) * static_cast<double>(n_work) / m)));
    uint32_t k_hi = std::min<uint32_t>(static_cast<uint32_t>(n_work), k_floor);
    uint32_t k_lo_fail = 0;  // largest k known to fail
    ProbeResult hit;
    while (true) {
      ProbeResult pr = probe_k(pts, k_hi, m, alpha, mix_seed(seed, 11, (uint64_t(level) << 32) | k_hi),
                               opts.kmeans_iters);
      if (pr.ok) {
        hit = std::move(pr);
        break;
      }
      k_lo_fail = k_hi;
      if (k_hi >= n_work) {
        // k == n makes every cluster a singleton; with m >= 1 this cannot
        // fail, but keep the guard.
        hit = std::move(pr);
        break;
      }
      k_hi = std::min<uint32_t>(static_cast<uint32_t>(n_work), k_hi * 2);
    }
    uint32_t k_best = k_hi;
    uint32_t lo = k_lo_fail + 1, hi = k_hi;
    while (lo < hi) {
      const uint32_t mid = lo + (hi - lo) / 2;
      ProbeResult pr = probe_k(pts, mid, m, alpha, mix_seed(seed, 11, (uint64_t(level) << 32) | mid),
                               opts.kmeans_iters);
      if (pr.ok) {
        hi = mid;
        k_best = mid;
        hit = std::move(pr);
      } else {
        lo = mid + 1;
      }
    }

    // Partition into kept clusters (size <= m) and the recursion set.
    std::vector<uint32_t> sizes(k_best, 0);
    for (uint32_t a : hit.km.assign) ++sizes[a];
    std::vector<RawCluster> kept;
    std::vector<uint32_t> next;
    std::vector<int32_t> cluster_slot(k_best, -1);
    for (uint32_t c = 0; c < k_best; ++c) {
      if (sizes[c] > 0 && sizes[c] <= m) {
        cluster_slot[c] = static_cast<int32_t>(kept.size());
        RawCluster rc;
        rc.center = hit.km.centers[c];
        kept.push_back(std::move(rc));
      }
    }
    for (size_t i = 0; i < n_work; ++i) {
      const uint32_t c = hit.km.assign[i];
      if (cluster_slot[c] >= 0)
        kept[static_cast<size_t>(cluster_slot[c])].members.push_back(working[i]);
      else
        next.push_back(working[i]);
    }
    if (!kept.empty()) groups.push_back(std::move(kept));
    working = std::move(next);
    ++level;
  }
  return groups;
}

size_t ClusterGroup::point_count() const {
  size_t total = 0;
  for (const auto& c : clusters) total += c.real_count;
  return total;
}

uint64_t ClusterIndex::total_clusters() const {
  uint64_t total = 0;
  for (const auto& g : groups) total += g.clusters.size();
  return total;
}

void ClusterIndex::validate() const {
  std::unordered_set<uint64_t> seen;
  seen.reserve(params.n);
  for (const auto& g : groups) {
    for (const auto& c : g.clusters) {
      if (c.slots.size() != params.m) throw std::runtime_error("index: cluster not padded to m");
      if (c.real_count > params.m) throw std::runtime_error("index: cluster larger than m");
      if (c.center.size() != params.d) throw std::runtime_error("index: bad center dimension");
      for (uint32_t s = 0; s < c.slots.size(); ++s) {
        const auto& slot = c.slots[s];
        if (slot.dummy != (s >= c.real_count)) throw std::runtime_error("index: dummy marker mismatch");
        if (slot.dummy) continue;
        if (!seen.insert(slot.point.id).second) throw std::runtime_error("index: coverage violation");
      }
    }
  }
  for (const auto& p : stash) {
    if (!seen.insert(p.id).second) throw std::runtime_error("index: coverage violation (stash)");
  }
  if (seen.size() != params.n) throw std::runtime_error("index: not all points covered");
  if (stash.size() != params.s) throw std::runtime_error("index: stash size mismatch");
  if (groups.size() != params.T) throw std::runtime_error("index: group count mismatch");
  for (size_t i = 0; i < groups.size(); ++i)
    if (groups[i].clusters.size() != params.k_c[i]) throw std::runtime_error("index: k_c mismatch");
}

ClusterIndex build_stash(const QuantizedDataset& data, const RawGroups& raw, uint64_t s_target,
                         const HyperParams& base_params) {
  std::vector<size_t> group_sizes(raw.size(), 0);
  for (size_t g = 0; g < raw.size(); ++g)
    for (const auto& c : raw[g]) group_sizes[g] += c.members.size();

  size_t kept = raw.size();
  uint64_t collapsed = 0;
  while (kept > 1 && collapsed + group_sizes[kept - 1] <= s_target) {
    collapsed += group_sizes[kept - 1];
    --kept;
  }

  ClusterIndex index;
  index.params = base_params;
  index.params.n = data.n();
  index.params.d = data.d;
  index.params.T = static_cast<uint32_t>(kept);
  index.params.k_c.clear();
  index.params.s = collapsed;

  const uint64_t code_max = (1ULL << base_params.b_c) - 1;
  auto quantize_center = [&](const std::vector<double>& c) {
    std::vector<uint32_t> out(c.size());
    for (size_t j = 0; j < c.size(); ++j) {
      double v = std::floor(c[j] + 0.5);
      if (v < 0.0) v = 0.0;
      if (v > static_cast<double>(code_max)) v = static_cast<double>(code_max);
      out[j] = static_cast<uint32_t>(v);
    }
    return out;
  };

  for (size_t g = 0; g < kept; ++g) {
    ClusterGroup group;
    for (const auto& rc : raw[g]) {
      Cluster cluster;
      cluster.center = quantize_center(rc.center);
      cluster.real_count = static_cast<uint32_t>(rc.members.size());
      cluster.slots.resize(base_params.m);
      for (size_t s = 0; s < base_params.m; ++s) {
        auto& slot = cluster.slots[s];
        if (s < rc.members.size()) {
          slot.point = data.points[rc.members[s]];
          slot.norm = squared_norm(slot.point.coords.data(), data.d);
          slot.dummy = false;
        } else {
          slot.point.coords.assign(data.d, 0);
          slot.point.id = 0;
          slot.norm = 0;
          slot.dummy = true;
        }
      }
      group.clusters.push_back(std::move(cluster));
    }
    index.params.k_c.push_back(static_cast<uint32_t>(group.clusters.size()));
    index.groups.push_back(std::move(group));
  }
  for (size_t g = kept; g < raw.size(); ++g)
    for (const auto& rc : raw[g])
      for (uint32_t idx : rc.members) index.stash.push_back(data.points[idx]);

  index.params.derive();
  return index;
}

ClusterIndex build_cluster_index(const QuantizedDataset& data, const HyperParams& params,
                                 uint64_t seed, const BalanceOptions& opts) {
  RawGroups raw = balance_clusters(data, params.m, params.alpha, seed, opts);
  return build_stash(data, raw, params.s, params);
}

// ---------------------------------------------------------------------------
// Index serialization: magic, version, params config text, then fixed-width
// little-endian payload.

namespace {
constexpr uint32_t kIndexMagic = 0x58494b53;  // "SKIX"
constexpr uint32_t kIndexVersion = 1;
}  // namespace

void ClusterIndex::save(std::ostream& os) const {
  ByteWriter w;
  w.u32(kIndexMagic);
  w.u32(kIndexVersion);
  w.str(params.to_config());
  w.f64(lo);
  w.f64(hi);
  for (const auto& g : groups) {
    for (const auto& c : g.clusters) {
      for (uint32_t v : c.center) w.u32(v);
      w.u32(c.real_count);
      for (const auto& slot : c.slots) {
        for (uint32_t v : slot.point.coords) w.u32(v);
        w.u64(slot.point.id);
        w.u64(slot.norm);
        w.u8(slot.dummy ? 1 : 0);
      }
    }
  }
  for (const auto& p : stash) {
    for (uint32_t v : p.coords) w.u32(v);
    w.u64(p.id);
  }
  const auto& buf = w.data();
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

ClusterIndex ClusterIndex::load(std::istream& is) {
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  ByteReader r(buf);
  if (r.u32() != kIndexMagic) throw std::runtime_error("index file: bad magic");
  if (r.u32() != kIndexVersion) throw std::runtime_error("index file: unsupported version");
  ClusterIndex index;
  index.params = HyperParams::from_config(r.str());
  index.lo = r.f64();
  index.hi = r.f64();
  const auto& p = index.params;
  index.groups.resize(p.T);
  for (uint32_t g = 0; g < p.T; ++g) {
    index.groups[g].clusters.resize(p.k_c[g]);
    for (auto& c : index.groups[g].clusters) {
      c.center.resize(p.d);
      for (auto& v : c.center) v = r.u32();
      c.real_count = r.u32();
      c.slots.resize(p.m);
      for (auto& slot : c.slots) {
        slot.point.coords.resize(p.d);
        for (auto& v : slot.point.coords) v = r.u32();
        slot.point.id = r.u64();
        slot.norm = r.u64();
        slot.dummy = r.u8() != 0;
      }
    }
  }
  index.stash.resize(p.s);
  for (auto& pt : index.stash) {
    pt.coords.resize(p.d);
    for (auto& v : pt.coords) v = r.u32();
    pt.id = r.u64();
  }
  if (!r.done()) throw std::runtime_error("index file: trailing bytes");
  return index;
}

// ---------------------------------------------------------------------------
// Queries

std::vector<uint32_t> derive_perm(uint64_t seed, uint32_t domain_tag, uint32_t index, size_t size) {
  Rng rng(mix_seed(seed, domain_tag, index));
  return random_permutation(size, rng);
}

std::vector<uint64_t> plaintext_linear_scan(const QuantizedPoint& q, const QuantizedDataset& data,
                                            const HyperParams& params, uint64_t shuffle_seed) {
  const auto perm = derive_perm(shuffle_seed, kPermLinear, 0, data.n());
  const uint64_t maxval = truncated_maxval(params.b_d, params.r_p);
  std::vector<ScoredId> scored(data.n());
  for (size_t i = 0; i < data.n(); ++i) {
    const auto& p = data.points[perm[i]];
    scored[i].value = squared_distance(q, p) >> params.r_p;
    scored[i].id = p.id;
  }
  auto top = approx_topk(scored, params.k_nn, params.l_s, maxval);
  std::vector<uint64_t> ids(top.size());
  for (size_t i = 0; i < top.size(); ++i) ids[i] = top[i].id;
  return ids;
}

std::vector<uint64_t> plaintext_clustering_knns(const QuantizedPoint& q, const ClusterIndex& index,
                                                const HyperParams& params, uint64_t shuffle_seed) {
  const uint64_t max_c = truncated_maxval(params.b_d, params.r_c);
  const uint64_t max_p = truncated_maxval(params.b_d, params.r_p);

  // Stage 1: per group, pick u[i] clusters by truncated center distance.
  std::vector<const Cluster*> retrieved;
  for (uint32_t g = 0; g < params.T; ++g) {
    const auto& clusters = index.groups[g].clusters;
    const auto perm = derive_perm(shuffle_seed, kPermGroup, g, clusters.size());
    std::vector<ScoredId> scored(clusters.size());
    for (size_t j = 0; j < clusters.size(); ++j) {
      const auto& center = clusters[perm[j]].center;
      scored[j].value = squared_distance(q.coords.data(), center.data(), params.d) >> params.r_c;
      scored[j].id = j;  // shuffled position, as in the secure protocol
    }
    auto sel = approx_topk(scored, params.u[g], params.l[g], max_c);
    for (const auto& s : sel) retrieved.push_back(&clusters[perm[s.id]]);
  }

  // Stage 2: exact top-k over all retrieved slots (dummies pinned at MAXVAL).
  std::vector<ScoredId> cand;
  cand.reserve(retrieved.size() * params.m);
  for (const Cluster* c : retrieved) {
    for (const auto& slot : c->slots) {
      ScoredId s;
      if (slot.dummy) {
        s.value = max_p;
        s.id = 0;
      } else {
        s.value = squared_distance(q, slot.point) >> params.r_p;
        s.id = slot.point.id;
      }
      cand.push_back(s);
    }
  }
  auto from_clusters = naive_topk(cand, params.k_nn, max_p);

  // Stage 3: stash linear scan with bin-min selection. An empty stash yields
  // sentinel candidates that can never win the final selection.
  std::vector<ScoredId> from_stash(params.k_nn, ScoredId{max_p, 0});
  if (!index.stash.empty()) {
    const auto stash_perm = derive_perm(shuffle_seed, kPermStash, 0, index.stash.size());
    std::vector<ScoredId> stash_scored(index.stash.size());
    for (size_t i = 0; i < index.stash.size(); ++i) {
      const auto& p = index.stash[stash_perm[i]];
      stash_scored[i].value = squared_distance(q, p) >> params.r_p;
      stash_scored[i].id = p.id;
    }
    from_stash = approx_topk(stash_scored, params.k_nn, params.l_s, max_p);
  }

  // Stage 4: merge, cluster candidates first.
  std::vector<ScoredId> final_cand = from_clusters;
  final_cand.insert(final_cand.end(), from_stash.begin(), from_stash.end());
  auto top = naive_topk(final_cand, params.k_nn, max_p);
  std::vector<uint64_t> ids(top.size());
  for (size_t i = 0; i < top.size(); ++i) ids[i] = top[i].id;
  return ids;
}

std::vector<uint64_t> brute_force_knn(const QuantizedPoint& q, const QuantizedDataset& data,
                                      uint32_t k) {
  std::vector<ScoredId> scored(data.n());
  for (size_t i = 0; i < data.n(); ++i) {
    scored[i].value = squared_distance(q, data.points[i]);
    scored[i].id = data.points[i].id;
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
    return a.value != b.value ? a.value < b.value : a.id < b.id;
  });
  const size_t take = std::min<size_t>(k, scored.size());
  std::vector<uint64_t> ids(take);
  for (size_t i = 0; i < take; ++i) ids[i] = scored[i].id;
  return ids;
}

}  // namespace sknn
