#include <algorithm>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "sknn/bench.hpp"
#include "sknn/dataset_io.hpp"
#include "sknn/protocol.hpp"

using namespace sknn;

TEST_SUITE_BEGIN("protocol");

namespace {

struct TestWorld {
  QuantizedWithBounds qb;
  RawDataset raw;
  std::vector<std::vector<double>> queries;
};

TestWorld make_world(uint64_t n, uint32_t d, uint32_t num_queries, uint64_t seed) {
  TestWorld world;
  SyntheticOptions gen;
  gen.n = n;
  gen.d = d;
  gen.blobs = 16;
  gen.spread = 2.0;
  gen.box = 256.0;
  gen.min_sep = 10.0 * gen.spread * std::sqrt(static_cast<double>(d));
  gen.seed = seed;
  world.raw = gen_synthetic(gen);
  world.qb = quantize_dataset(world.raw, 8);
  Rng rng(seed + 1);
  world.queries.resize(num_queries);
  for (auto& q : world.queries) {
    const auto& base = world.raw.rows[rng.below(n)];
    q.resize(d);
    for (uint32_t j = 0; j < d; ++j) q[j] = base[j] + rng.gaussian();
  }
  return world;
}

HyperParams linear_params(uint64_t n, uint32_t d) {
  HyperParams p;
  p.n = n;
  p.d = d;
  p.k_nn = 10;
  p.b_c = 8;
  p.l_s = 128;
  p.r_p = 2;
  p.N = 512;
  p.derive();
  p.validate();
  return p;
}

ClusterIndex cluster_index_for(const QuantizedDataset& data, uint64_t seed) {
  HyperParams p;
  p.n = data.n();
  p.d = data.d;
  p.k_nn = 10;
  p.b_c = 8;
  p.m = 32;
  p.alpha = 0.56;
  p.s = 120;
  p.derive();
  BalanceOptions bopts;
  bopts.kmeans_iters = 5;
  ClusterIndex index = build_cluster_index(data, p, seed, bopts);
  TuneOptions topts;
  topts.k_nn = 10;
  topts.r_c = 3;
  topts.r_p = 2;
  topts.retrieve_frac = 0.15;
  index.params = fit_query_params(index, topts);
  index.validate();
  return index;
}

}  // namespace

TEST_CASE("linear protocol equals the plaintext scan on seeded runs") {
  const uint64_t n = 1 << 10;
  auto world = make_world(n, 8, 100, 2001);
  const auto params = linear_params(n, 8);
  const uint64_t server_seed = 555;

  const auto res =
      run_linear_scan_inproc(params, world.qb.data, world.queries, server_seed, 77, world.qb.lo,
                             world.qb.hi);
  REQUIRE(res.client.ids.size() == world.queries.size());
  for (size_t qi = 0; qi < world.queries.size(); ++qi) {
    QuantizedPoint q{quantize(world.queries[qi], 8, world.qb.lo, world.qb.hi), 0};
    const auto want =
        plaintext_linear_scan(q, world.qb.data, params, linear_query_seed(server_seed, qi));
    REQUIRE(res.client.ids[qi] == want);
  }
}

TEST_CASE("clustering protocol equals the plaintext algorithm on seeded runs") {
  const uint64_t n = 1 << 10;
  auto world = make_world(n, 8, 100, 2002);
  const auto index = cluster_index_for(world.qb.data, 31);
  const uint64_t server_seed = 556;

  const auto res = run_clustering_inproc(index.params, index, world.queries, server_seed, 78,
                                         world.qb.lo, world.qb.hi);
  const uint64_t session_seed = clustering_session_seed(server_seed);
  for (size_t qi = 0; qi < world.queries.size(); ++qi) {
    QuantizedPoint q{quantize(world.queries[qi], 8, world.qb.lo, world.qb.hi), 0};
    const auto want = plaintext_clustering_knns(q, index, index.params, session_seed);
    REQUIRE(res.client.ids[qi] == want);
  }
}

TEST_CASE("clustering protocol with full retrieval and empty stash is exact") {
  const uint64_t n = 512;
  auto world = make_world(n, 6, 20, 2003);
  HyperParams p;
  p.n = n;
  p.d = 6;
  p.k_nn = 5;
  p.b_c = 8;
  p.m = 24;
  p.alpha = 0.56;
  p.s = 0;  // no stash
  p.derive();
  BalanceOptions bopts;
  bopts.kmeans_iters = 4;
  ClusterIndex index = build_cluster_index(world.qb.data, p, 41, bopts);
  index.params.u = index.params.k_c;
  index.params.l = index.params.k_c;
  index.params.r_c = 0;
  index.params.r_p = 0;
  index.params.k_nn = 5;
  index.params.l_s = 5;
  index.params.derive();
  index.params.validate();
  index.validate();

  const auto res =
      run_clustering_inproc(index.params, index, world.queries, 999, 79, world.qb.lo, world.qb.hi);
  auto distances_of = [&](const std::vector<uint64_t>& ids, const QuantizedPoint& q) {
    std::vector<uint64_t> out;
    for (uint64_t id : ids) out.push_back(squared_distance(q, world.qb.data.points[id]));
    std::sort(out.begin(), out.end());
    return out;
  };
  for (size_t qi = 0; qi < world.queries.size(); ++qi) {
    QuantizedPoint q{quantize(world.queries[qi], 8, world.qb.lo, world.qb.hi), 0};
    const auto& got = res.client.ids[qi];
    const auto want = brute_force_knn(q, world.qb.data, 5);
    REQUIRE(distances_of(got, q) == distances_of(want, q));
  }
}

TEST_CASE("handshake rejects mismatched parameters") {
  const uint64_t n = 256;
  auto world = make_world(n, 6, 2, 2004);
  const auto params = linear_params(n, 6);

  auto [c2s, s2c] = MemChannel::make_pair();
  auto [c2d, d2c] = MemChannel::make_pair();
  auto [s2d, d2s] = MemChannel::make_pair();

  HyperParams client_params = params;
  client_params.b_c = 9;  // disagrees with the server
  client_params.derive();

  std::exception_ptr server_err;
  std::thread server([&] {
    try {
      LinearServerInput input{&world.qb.data, world.qb.lo, world.qb.hi};
      linear_scan_server(*s2c, *s2d, params, input, 1);
    } catch (...) {
      server_err = std::current_exception();
    }
  });
  std::thread dealer([&] { dealer_serve(*d2c, *d2s, 2); });

  CHECK_THROWS_AS(linear_scan_client(*c2s, *c2d, client_params, world.queries), ProtocolError);
  server.join();
  dealer.join();
  CHECK(server_err != nullptr);
}

TEST_CASE("handshake digest is stable across runs") {
  const auto p1 = load_preset("sift");
  const auto p2 = load_preset("sift");
  CHECK(p1.digest() == p2.digest());
  auto p3 = p1;
  p3.b_c = 9;
  p3.derive();
  CHECK(p3.digest() != p1.digest());
}

TEST_CASE("transcript stage byte counts are deterministic given params and n") {
  const uint64_t n = 512;
  auto w1 = make_world(n, 6, 3, 3001);
  auto w2 = make_world(n, 6, 3, 4002);  // different data, same shape
  const auto params = linear_params(n, 6);

  const auto r1 = run_linear_scan_inproc(params, w1.qb.data, w1.queries, 10, 20, w1.qb.lo, w1.qb.hi);
  const auto r2 = run_linear_scan_inproc(params, w2.qb.data, w2.queries, 30, 40, w2.qb.lo, w2.qb.hi);
  for (size_t s = 0; s < r1.client.transcript.rows.size(); ++s) {
    CHECK(r1.client.transcript.rows[s].bytes_sent == r2.client.transcript.rows[s].bytes_sent);
    CHECK(r1.client.transcript.rows[s].bytes_received ==
          r2.client.transcript.rows[s].bytes_received);
  }

  const auto index1 = cluster_index_for(w1.qb.data, 51);
  const auto index2 = cluster_index_for(w2.qb.data, 51);
  if (index1.params.to_config() == index2.params.to_config()) {
    const auto c1 =
        run_clustering_inproc(index1.params, index1, w1.queries, 10, 20, w1.qb.lo, w1.qb.hi);
    const auto c2 =
        run_clustering_inproc(index2.params, index2, w2.queries, 30, 40, w2.qb.lo, w2.qb.hi);
    for (size_t s = 0; s < c1.client.transcript.rows.size(); ++s)
      CHECK(c1.client.transcript.rows[s].bytes_sent == c2.client.transcript.rows[s].bytes_sent);
  }
}

TEST_CASE("clustering oram stage stays within the round budget") {
  const uint64_t n = 1 << 10;
  auto world = make_world(n, 8, 4, 2005);
  const auto index = cluster_index_for(world.qb.data, 61);

  const auto res =
      run_clustering_inproc(index.params, index, world.queries, 777, 80, world.qb.lo, world.qb.hi);
  const auto& oram = res.client.transcript.row(Stage::Oram);
  const uint64_t budget_per_query = index.params.b_cid + 2;
  // Setup adds at most one round on top of one request/response per query.
  CHECK(oram.rounds <= world.queries.size() * budget_per_query + 1);
  CHECK(oram.bytes_received > 0);
}

TEST_CASE("client-received masked payloads look uniform") {
  // Chi-square smoke test at width 8 over the dist-stage coefficients and the
  // selection-stage id masks received by the client while server inputs vary.
  const uint64_t n = 64;
  const uint32_t d = 4;
  HyperParams params;
  params.n = n;
  params.d = d;
  params.k_nn = 8;
  params.b_c = 8;
  params.l_s = 16;
  params.r_p = 0;
  params.N = 64;
  params.derive();
  params.validate();

  std::vector<uint32_t> dist_counts(256, 0), id_counts(256, 0);
  uint64_t dist_samples = 0, id_samples = 0;

  Rng world_rng(6100);
  for (int run = 0; run < 200; ++run) {
    QuantizedDataset data;
    data.d = d;
    data.points.resize(n);
    for (size_t i = 0; i < n; ++i) {
      data.points[i].coords.resize(d);
      for (auto& c : data.points[i].coords) c = static_cast<uint32_t>(world_rng.bits(8));
      data.points[i].id = i;
    }
    std::vector<std::vector<double>> queries{{10.0, 20.0, 30.0, 40.0}};

    auto [c2s, s2c] = MemChannel::make_pair();
    auto [c2d, d2c] = MemChannel::make_pair();
    auto [s2d, d2s] = MemChannel::make_pair();
    c2d->set_recv_hook([&](const Frame& f) {
      if (f.tag == kTagFDist) {
        ByteReader r(f.payload);
        for (size_t i = 0; i < n; ++i) {
          ++dist_counts[r.u32() & 0xff];
          ++dist_samples;
        }
      } else if (f.tag == kTagFATopk) {
        ByteReader r(f.payload);
        for (uint32_t i = 0; i < params.k_nn; ++i) {
          ++id_counts[r.u32() & 0xff];
          ++id_samples;
        }
      }
    });

    std::thread server([&] {
      LinearServerInput input{&data, 0.0, 255.0};
      linear_scan_server(*s2c, *s2d, params, input, world_rng.u64());
    });
    std::thread dealer([&] { dealer_serve(*d2c, *d2s, world_rng.u64()); });
    linear_scan_client(*c2s, *c2d, params, queries);
    server.join();
    dealer.join();
  }

  auto chi = [](const std::vector<uint32_t>& counts, uint64_t total) {
    const double expected = static_cast<double>(total) / 256.0;
    double stat = 0.0;
    for (uint32_t c : counts) {
      const double diff = c - expected;
      stat += diff * diff / expected;
    }
    return stat;
  };
  // df=255 at significance 0.001.
  CHECK(chi(dist_counts, dist_samples) < 330.5);
  CHECK(chi(id_counts, id_samples) < 330.5);
}

TEST_SUITE_END();
