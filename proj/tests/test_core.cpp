#include "doctest.h"
#include "sknn/core.hpp"
#include "sknn/rng.hpp"

using namespace sknn;

TEST_SUITE_BEGIN("core");

TEST_CASE("quantize maps bounds and midpoint") {
  // Lower bound -> 0, upper bound -> max code.
  auto lo = quantize({-3.0}, 8, -3.0, 5.0);
  CHECK(lo[0] == 0);
  auto hi = quantize({5.0}, 8, -3.0, 5.0);
  CHECK(hi[0] == 255);
  // Midpoint scales to 127.5 and rounds half up.
  auto mid = quantize({1.0}, 8, -3.0, 5.0);
  CHECK(mid[0] == 128);
}

TEST_CASE("quantize clamps and rejects bad input") {
  auto clamped = quantize({100.0, -100.0}, 8, 0.0, 10.0);
  CHECK(clamped[0] == 255);
  CHECK(clamped[1] == 0);
  CHECK_THROWS(quantize({std::numeric_limits<double>::quiet_NaN()}, 8, 0.0, 1.0));
  CHECK_THROWS(quantize({1.0}, 8, 1.0, 1.0));
  CHECK_THROWS(quantize({1.0}, 0, 0.0, 1.0));
}

TEST_CASE("quantize is monotone") {
  Rng rng(7);
  for (int rep = 0; rep < 2000; ++rep) {
    const double x = rng.real01() * 20.0 - 10.0;
    const double y = x + rng.real01() * 5.0;
    auto qx = quantize({x}, 8, -10.0, 10.0);
    auto qy = quantize({y}, 8, -10.0, 10.0);
    CHECK(qx[0] <= qy[0]);
  }
}

TEST_CASE("squared_distance basic values") {
  QuantizedPoint p{{0, 0}, 0}, q{{3, 4}, 1};
  CHECK(squared_distance(p, q) == 25);
  CHECK(squared_distance(p, p) == 0);
  QuantizedPoint r{{1, 2, 3}, 2};
  CHECK_THROWS(squared_distance(p, r));
}

TEST_CASE("squared_distance fits the b_d bound at full spread") {
  // 128 coordinates, all-0 vs all-255: d * 255^2 = 8323200 < 2^23.
  QuantizedPoint a, b;
  a.coords.assign(128, 0);
  b.coords.assign(128, 255);
  b.id = 1;
  CHECK(squared_distance(a, b) == 8323200ULL);
  CHECK(squared_distance(a, b) < (1ULL << 23));

  HyperParams p;
  p.n = 100;
  p.d = 128;
  p.b_c = 8;
  p.l_s = 10;
  p.derive();
  CHECK(p.b_d == 23);
  CHECK(p.max_distance() < p.t);
}

TEST_CASE("presets carry the published constants") {
  const auto sift = load_preset("sift");
  CHECK(sift.m == 20);
  CHECK(sift.T == 4);
  CHECK(sift.alpha == doctest::Approx(0.56));
  CHECK(sift.r_c == 5);
  CHECK(sift.r_p == 8);
  CHECK(sift.b_c == 8);
  CHECK(sift.s == 31412);
  CHECK(sift.l_s == 262);
  CHECK(sift.u == std::vector<uint32_t>{50, 31, 19, 13});
  CHECK(sift.l == std::vector<uint32_t>{458, 270, 178, 84});
  CHECK(sift.k_c == std::vector<uint32_t>{50810, 25603, 9968, 4227});
  CHECK(sift.t == (1ULL << 23));

  const auto amazon = load_preset("amazon");
  CHECK(amazon.b_c == 9);
  CHECK(amazon.r_p == 6);
  CHECK(amazon.t == (1ULL << 24));

  const auto deep10m = load_preset("deep1b-10m");
  CHECK(deep10m.T == 6);
  CHECK(deep10m.m == 48);

  const auto sift_ls = load_preset("sift-ls");
  CHECK(sift_ls.l_s == 8334);
  CHECK(sift_ls.r_p == 8);
  CHECK(sift_ls.T == 0);

  CHECK_THROWS(load_preset("mnist"));
}

TEST_CASE("preset params validate") {
  for (const auto& name : preset_names()) {
    auto p = load_preset(name);
    CHECK_NOTHROW(p.validate());
  }
}

TEST_CASE("config round trip preserves the digest") {
  auto p = load_preset("sift");
  const auto text = p.to_config();
  auto q = HyperParams::from_config(text);
  CHECK(q.to_config() == text);
  CHECK(q.digest() == p.digest());
  CHECK_THROWS(HyperParams::from_config("bogus_key=1\n"));
}

TEST_CASE("derived fields and validation") {
  HyperParams p;
  p.n = 1000;
  p.d = 30;
  p.b_c = 8;
  p.l_s = 50;
  p.derive();
  CHECK(p.b_d == 2 * 8 + 5);
  CHECK(p.t == (1ULL << 21));
  CHECK(p.b_pid == 16);  // ceil(log2 1000)=10 rounded to whole bytes
  CHECK_NOTHROW(p.validate());

  p.r_p = p.b_d + 1;
  CHECK_THROWS(p.validate());
}

TEST_SUITE_END();
