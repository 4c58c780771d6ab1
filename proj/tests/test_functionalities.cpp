#include "doctest.h"
#include "sknn/core.hpp"
#include "sknn/functionalities.hpp"
#include "sknn/plaintext.hpp"
#include "sknn/shares.hpp"

using namespace sknn;

TEST_SUITE_BEGIN("functionalities");

namespace {

constexpr uint64_t kT = 1ULL << 23;

struct SharedInput {
  FTopkRequest req;
  std::vector<ScoredId> plain;
};

// Builds a request whose reconstruction equals `values`/`ids`.
SharedInput make_request(const std::vector<uint64_t>& values, const std::vector<uint64_t>& ids,
                         uint32_t k, uint32_t r, uint32_t id_bits, bool return_val, Rng& rng,
                         bool client_ids) {
  SharedInput in;
  in.req.t = kT;
  in.req.k = k;
  in.req.r = r;
  in.req.id_bits = id_bits;
  in.req.return_val = return_val;
  const size_t n = values.size();
  in.req.a_c.resize(n);
  in.req.a_s.resize(n);
  in.req.idlist_s.resize(n);
  if (client_ids) in.req.idlist_c.emplace(n, 0);
  in.plain.resize(n);
  for (size_t i = 0; i < n; ++i) {
    auto [c, s] = share_arith(values[i], kT, rng);
    in.req.a_c[i] = c.value;
    in.req.a_s[i] = s.value;
    if (client_ids) {
      auto [xc, xs] = share_xor(ids[i], id_bits, rng);
      (*in.req.idlist_c)[i] = xc.bits;
      in.req.idlist_s[i] = xs.bits;
    } else {
      in.req.idlist_s[i] = ids[i];
    }
    in.plain[i] = ScoredId{values[i] >> r, ids[i]};
  }
  return in;
}

}  // namespace

TEST_CASE("f_topk reconstructs the exact selection") {
  Rng rng(1);
  const auto in = make_request({5, 3, 9}, {10, 11, 12}, 1, 0, 16, false, rng, false);
  const auto out = f_topk(in.req, rng);
  CHECK((out.ids_client[0] ^ out.ids_server[0]) == 11);
}

TEST_CASE("f_topk degenerate truncation collapses to the sentinel window") {
  Rng rng(2);
  // r = b_d: every value truncates to 0, which is exactly MAXVAL of the
  // zero-width domain. Under the strict '<' rule of the selection sweep no
  // entry displaces the sentinel window, so the output reconstructs to the
  // sentinel id 0 in every slot. One bit of slack (r = b_d - 1) restores the
  // first-k-by-position behavior for all-equal inputs.
  const auto in = make_request({100, 7, 42, 9}, {5, 6, 7, 8}, 2, 23, 16, false, rng, true);
  const auto out = f_topk(in.req, rng);
  CHECK((out.ids_client[0] ^ out.ids_server[0]) == 0);
  CHECK((out.ids_client[1] ^ out.ids_server[1]) == 0);

  const auto in2 = make_request({100, 7, 42, 9}, {5, 6, 7, 8}, 2, 22, 16, false, rng, true);
  const auto out2 = f_topk(in2.req, rng);
  CHECK((out2.ids_client[0] ^ out2.ids_server[0]) == 5);
  CHECK((out2.ids_client[1] ^ out2.ids_server[1]) == 6);
}

TEST_CASE("f_topk returnVal hands back value shares of the sorted top-k") {
  Rng rng(3);
  const auto in = make_request({900, 20, 500, 20, 70}, {1, 2, 3, 4, 5}, 3, 2, 16, true, rng, true);
  const auto out = f_topk(in.req, rng);
  REQUIRE(out.vals_client.size() == 3);
  std::vector<uint64_t> vals(3);
  for (size_t i = 0; i < 3; ++i) vals[i] = mod_add(out.vals_client[i], out.vals_server[i], kT);
  CHECK(vals == std::vector<uint64_t>{5, 5, 17});  // 20>>2, 20>>2, 70>>2
  CHECK((out.ids_client[0] ^ out.ids_server[0]) == 2);
  CHECK((out.ids_client[1] ^ out.ids_server[1]) == 4);
  CHECK((out.ids_client[2] ^ out.ids_server[2]) == 5);
}

TEST_CASE("f_topk differential against naive_topk") {
  Rng rng(4);
  for (int rep = 0; rep < 10000; ++rep) {
    const size_t n = 1 + rng.below(40);
    const uint32_t k = 1 + static_cast<uint32_t>(rng.below(8));
    const uint32_t r = static_cast<uint32_t>(rng.below(6));
    std::vector<uint64_t> values(n), ids(n);
    for (size_t i = 0; i < n; ++i) {
      values[i] = rng.bits(23);
      ids[i] = i;
    }
    const auto in = make_request(values, ids, k, r, 16, true, rng, rep % 2 == 0);
    const auto out = f_topk(in.req, rng);
    const auto want = naive_topk(in.plain, k, (kT - 1) >> r);
    for (uint32_t i = 0; i < k; ++i) {
      CHECK((out.ids_client[i] ^ out.ids_server[i]) == want[i].id);
      CHECK(mod_add(out.vals_client[i], out.vals_server[i], kT) == want[i].value);
    }
  }
}

TEST_CASE("f_atopk differential against approx_topk") {
  Rng rng(5);
  for (int rep = 0; rep < 10000; ++rep) {
    const size_t n = 4 + rng.below(60);
    const uint32_t k = 1 + static_cast<uint32_t>(rng.below(4));
    const uint32_t l = k + static_cast<uint32_t>(rng.below(n - k + 1));
    const uint32_t r = static_cast<uint32_t>(rng.below(5));
    std::vector<uint64_t> values(n), ids(n);
    for (size_t i = 0; i < n; ++i) {
      values[i] = rng.bits(23);
      ids[i] = i;
    }
    const auto in = make_request(values, ids, k, r, 16, false, rng, false);
    const auto out = f_atopk(in.req, l, rng);
    const auto want = approx_topk(in.plain, k, l, (kT - 1) >> r);
    for (uint32_t i = 0; i < k; ++i)
      CHECK((out.ids_client[i] ^ out.ids_server[i]) == want[i].id);
  }
}

TEST_CASE("f_atopk with l = n equals f_topk") {
  Rng rng(6);
  std::vector<uint64_t> values(32), ids(32);
  for (size_t i = 0; i < 32; ++i) {
    values[i] = rng.bits(23);
    ids[i] = i;
  }
  const auto in1 = make_request(values, ids, 4, 1, 16, false, rng, false);
  const auto out_a = f_atopk(in1.req, 32, rng);
  const auto out_t = f_topk(in1.req, rng);
  for (uint32_t i = 0; i < 4; ++i)
    CHECK((out_a.ids_client[i] ^ out_a.ids_server[i]) ==
          (out_t.ids_client[i] ^ out_t.ids_server[i]));

  // k = 1 returns the global minimum's id.
  const auto out1 = f_atopk(in1.req, 8, rng);
  size_t best = 0;
  for (size_t i = 1; i < 32; ++i)
    if ((values[i] >> 1) < (values[best] >> 1)) best = i;
  CHECK((out1.ids_client[0] ^ out1.ids_server[0]) == ids[best]);
}

TEST_CASE("functionality outputs are masked fresh per call") {
  Rng rng(7);
  std::vector<uint64_t> values{10, 20, 30, 40};
  std::vector<uint64_t> ids{1, 2, 3, 4};
  const auto in = make_request(values, ids, 2, 0, 16, true, rng, false);
  const auto o1 = f_topk(in.req, rng);
  const auto o2 = f_topk(in.req, rng);
  CHECK((o1.ids_client[0] ^ o1.ids_server[0]) == (o2.ids_client[0] ^ o2.ids_server[0]));
  // Same reconstruction; different masks with overwhelming probability.
  CHECK((o1.ids_server != o2.ids_server || o1.vals_server != o2.vals_server));
}

TEST_CASE("f_topk rejects malformed requests") {
  Rng rng(8);
  FTopkRequest req;
  req.t = kT;
  req.k = 1;
  req.id_bits = 8;
  req.a_c = {1, 2};
  req.a_s = {3};
  req.idlist_s = {0, 1};
  CHECK_THROWS(f_topk(req, rng));
  req.a_s = {3, 4};
  req.idlist_s = {0};
  CHECK_THROWS(f_topk(req, rng));
}

TEST_CASE("f_drom read reconstructs every block") {
  Rng rng(9);
  FDrom drom;
  std::vector<std::vector<uint8_t>> blocks(1024, std::vector<uint8_t>(12));
  for (auto& b : blocks) rng.fill(b.data(), b.size());
  drom.init(blocks);

  for (uint64_t i = 0; i < 1024; ++i) {
    const uint64_t i_c = rng.below(1024);
    const uint64_t i_s = (i - i_c) % 1024;
    const auto out = drom.read(i_c, i_s, rng);
    std::vector<uint8_t> got = out.client;
    for (size_t b = 0; b < got.size(); ++b) got[b] ^= out.server[b];
    REQUIRE(got == blocks[i]);
  }

  // Index shares reconstruct modulo n: (i_c + 1, i_s - 1) reads the same
  // block.
  const auto a = drom.read(5, 10, rng);
  const auto b = drom.read(6, 9, rng);
  std::vector<uint8_t> ra = a.client, rb = b.client;
  for (size_t i = 0; i < ra.size(); ++i) {
    ra[i] ^= a.server[i];
    rb[i] ^= b.server[i];
  }
  CHECK(ra == rb);
}

TEST_CASE("f_dist matches squared distances") {
  Rng rng(10);
  const uint32_t d = 10;
  for (int rep = 0; rep < 10000; ++rep) {
    std::vector<uint32_t> q(d);
    for (auto& v : q) v = static_cast<uint32_t>(rng.bits(8));
    std::vector<std::vector<uint32_t>> pts(3, std::vector<uint32_t>(d));
    for (auto& p : pts)
      for (auto& v : p) v = static_cast<uint32_t>(rng.bits(8));
    const auto out = f_dist(q, pts, kT, rng);
    for (size_t i = 0; i < pts.size(); ++i) {
      const uint64_t want = squared_distance(q.data(), pts[i].data(), d) & (kT - 1);
      CHECK(mod_add(out.client[i], out.server[i], kT) == want);
    }
  }
  // q = p reconstructs zero.
  std::vector<uint32_t> q(d, 7);
  const auto out = f_dist(q, {q}, kT, rng);
  CHECK(mod_add(out.client[0], out.server[0], kT) == 0);
}

TEST_CASE("f_dist_shared reconstructs distances and pins dummies") {
  Rng rng(11);
  const uint32_t d = 6;
  for (int rep = 0; rep < 2000; ++rep) {
    std::vector<uint32_t> q(d);
    for (auto& v : q) v = static_cast<uint32_t>(rng.bits(8));
    const size_t count = 4;
    FDistSharedRequest req;
    req.t = kT;
    req.q = q;
    std::vector<uint64_t> want(count);
    for (size_t i = 0; i < count; ++i) {
      std::vector<uint32_t> p(d);
      for (auto& v : p) v = static_cast<uint32_t>(rng.bits(8));
      const bool dummy = (rep + i) % 4 == 0;
      const uint64_t norm = squared_norm(p.data(), d);
      want[i] = dummy ? kT - 1 : squared_distance(q.data(), p.data(), d);
      for (uint32_t j = 0; j < d; ++j) {
        auto [c, s] = share_arith(p[j], kT, rng);
        req.coords_c.push_back(c.value);
        req.coords_s.push_back(s.value);
      }
      auto [nc, ns] = share_arith(norm, kT, rng);
      req.norms_c.push_back(nc.value);
      req.norms_s.push_back(ns.value);
      auto [fc, fs] = share_xor(dummy ? 1 : 0, 1, rng);
      req.flags_c.push_back(static_cast<uint8_t>(fc.bits));
      req.flags_s.push_back(static_cast<uint8_t>(fs.bits));
    }
    const auto out = f_dist_shared(req, rng);
    for (size_t i = 0; i < count; ++i)
      CHECK(mod_add(out.client[i], out.server[i], kT) == (want[i] & (kT - 1)));
  }
}

TEST_SUITE_END();
