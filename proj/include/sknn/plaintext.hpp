#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sknn/core.hpp"
#include "sknn/rng.hpp"

namespace sknn {

// (value, id) pair flowing through the selection operators. `value` may be a
// truncated distance.
struct ScoredId {
  uint64_t value = 0;
  uint64_t id = 0;
  bool operator==(const ScoredId&) const = default;
};

inline uint64_t truncated_maxval(uint32_t b_d, uint32_t r) { return ((1ULL << b_d) >> r) - 1; }

// Exact top-k by the compare-and-swap sweep: a sorted window of the current k
// minima is maintained and every element is inserted with k comparators.
// Strict '<' comparison, so on ties the earlier list position wins. If
// k > |items| the result is padded with (maxval, 0) sentinels.
std::vector<ScoredId> naive_topk(const std::vector<ScoredId>& items, uint32_t k,
                                 uint64_t maxval = UINT64_MAX);

// Bin-min approximate top-k: the (caller-shuffled) list is split into l
// contiguous chunks of ceil(n/l); per-bin minima feed naive_topk. Requires
// k <= l.
std::vector<ScoredId> approx_topk(const std::vector<ScoredId>& items, uint32_t k, uint32_t l,
                                  uint64_t maxval = UINT64_MAX);

// ---------------------------------------------------------------------------
// k-means

struct KmeansResult {
  std::vector<std::vector<double>> centers;
  std::vector<uint32_t> assign;            // per input point
  std::vector<double> objective_history;   // objective after each iteration
  double objective = 0.0;
};

struct KmeansOptions {
  uint32_t iters = 25;
  bool track_history = false;
};

// Lloyd iterations from k-means++ seeding; empty clusters are re-seeded at the
// point currently farthest from its center.
KmeansResult kmeans(const std::vector<const QuantizedPoint*>& points, uint32_t k, Rng& rng,
                    const KmeansOptions& opts = {});

// ---------------------------------------------------------------------------
// Balanced clustering with stash

struct ClusterSlot {
  QuantizedPoint point;   // coords + id; zeroed when dummy
  uint64_t norm = 0;
  bool dummy = false;
};

struct Cluster {
  std::vector<uint32_t> center;  // quantized to b_c bits
  std::vector<ClusterSlot> slots;  // exactly m entries
  uint32_t real_count = 0;
};

struct ClusterGroup {
  std::vector<Cluster> clusters;
  size_t point_count() const;
};

struct ClusterIndex {
  HyperParams params;  // n, d, T, k_c, m, s filled from the build
  double lo = 0.0, hi = 0.0;  // quantization bounds of the underlying data
  std::vector<ClusterGroup> groups;
  std::vector<QuantizedPoint> stash;

  uint64_t total_clusters() const;
  void validate() const;  // coverage, size bounds, padding

  void save(std::ostream& os) const;
  static ClusterIndex load(std::istream& is);
};

struct BalanceOptions {
  uint32_t kmeans_iters = 12;
  uint32_t extra_levels = 5;  // recursion guard beyond ceil(log_{1/alpha} n)
};

// Raw groups before padding/stash: per group, clusters as (center, members).
struct RawCluster {
  std::vector<double> center;
  std::vector<uint32_t> members;  // indices into the dataset
};
using RawGroups = std::vector<std::vector<RawCluster>>;

// Recursive rebalancing: find the smallest k such that k-means leaves at most
// an alpha-fraction of the working set in clusters larger than m; keep the
// small clusters as a group and recurse on the rest. A level cap forces an
// arbitrary split into chunks of m if the geometry refuses to cooperate.
RawGroups balance_clusters(const QuantizedDataset& data, uint32_t m, double alpha, uint64_t seed,
                           const BalanceOptions& opts = {});

// Collapse trailing groups (smallest last) into the stash while the collapsed
// total stays <= s_target and more than one group would remain.
ClusterIndex build_stash(const QuantizedDataset& data, const RawGroups& groups, uint64_t s_target,
                         const HyperParams& base_params);

// Convenience: balance + stash + padding, returning a query-ready index whose
// params carry the realized T, k_c, s.
ClusterIndex build_cluster_index(const QuantizedDataset& data, const HyperParams& params,
                                 uint64_t seed, const BalanceOptions& opts = {});

// ---------------------------------------------------------------------------
// Query algorithms

// Permutation streams shared with the secure protocol so that seeded runs of
// both produce identical output.
std::vector<uint32_t> derive_perm(uint64_t seed, uint32_t domain_tag, uint32_t index, size_t size);
inline constexpr uint32_t kPermLinear = 1;
inline constexpr uint32_t kPermGroup = 2;
inline constexpr uint32_t kPermStash = 3;

// Linear scan: shuffle, truncated distances, bin-min selection.
std::vector<uint64_t> plaintext_linear_scan(const QuantizedPoint& q, const QuantizedDataset& data,
                                            const HyperParams& params, uint64_t shuffle_seed);

// Clustering search over a built index. `shuffle_seed` drives the per-group
// center shuffles and the stash shuffle.
std::vector<uint64_t> plaintext_clustering_knns(const QuantizedPoint& q, const ClusterIndex& index,
                                                const HyperParams& params, uint64_t shuffle_seed);

// Exact oracle: full sort by (distance, id).
std::vector<uint64_t> brute_force_knn(const QuantizedPoint& q, const QuantizedDataset& data,
                                      uint32_t k);

}  // namespace sknn
