#include "sknn/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace sknn {

uint32_t ceil_log2(uint64_t x) {
  if (x <= 1) return 0;
  uint32_t bits = 0;
  uint64_t v = x - 1;
  while (v) {
    ++bits;
    v >>= 1;
  }
  return bits;
}

void QuantizedDataset::validate(uint32_t b_c) const {
  const uint64_t limit = 1ULL << b_c;
  std::unordered_set<uint64_t> ids;
  ids.reserve(points.size());
  for (const auto& p : points) {
    if (p.coords.size() != d) throw std::invalid_argument("dataset: dimension mismatch");
    for (uint32_t c : p.coords)
      if (c >= limit) throw std::invalid_argument("dataset: coordinate exceeds b_c bits");
    if (!ids.insert(p.id).second) throw std::invalid_argument("dataset: duplicate point id");
  }
}

void HyperParams::derive() {
  b_d = 2 * b_c + ceil_log2(d);
  t = 1ULL << b_d;
  u_all = 0;
  for (uint32_t ui : u) u_all += ui;
  uint64_t total_clusters = 0;
  for (uint32_t kc : k_c) total_clusters += kc;
  b_cid = total_clusters > 0 ? std::max<uint32_t>(1, ceil_log2(total_clusters)) : 0;
  if (b_pid == 0 && n > 0) {
    uint32_t raw = std::max<uint32_t>(1, ceil_log2(n));
    b_pid = ((raw + 7) / 8) * 8;  // whole bytes
  }
}

void HyperParams::validate() const {
  if (d == 0 || n == 0) throw std::invalid_argument("params: n and d must be positive");
  if (b_c == 0 || b_c > 14) throw std::invalid_argument("params: b_c out of range");
  if (b_d != 2 * b_c + ceil_log2(d)) throw std::invalid_argument("params: b_d != 2*b_c + ceil(log2 d)");
  if (b_d > 30) throw std::invalid_argument("params: b_d too wide");
  if (t != (1ULL << b_d)) throw std::invalid_argument("params: t != 2^b_d");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("params: alpha outside (0,1)");
  if (r_c > b_d || r_p > b_d) throw std::invalid_argument("params: truncation exceeds b_d");
  if (max_distance() >= t) throw std::invalid_argument("params: max distance does not fit b_d bits");
  if (k_c.size() != T || u.size() != T || l.size() != T)
    throw std::invalid_argument("params: group vectors must have T entries");
  uint32_t usum = 0;
  for (size_t i = 0; i < T; ++i) {
    if (u[i] == 0 || u[i] > l[i] || l[i] > k_c[i])
      throw std::invalid_argument("params: need u <= l <= k_c per group");
    usum += u[i];
  }
  if (usum != u_all) throw std::invalid_argument("params: u_all != sum(u)");
  if (T > 0 && m == 0) throw std::invalid_argument("params: m must be positive with clusters");
  if (b_pid == 0 || b_pid > 32) throw std::invalid_argument("params: b_pid out of range");
  if (k_nn == 0) throw std::invalid_argument("params: k_nn must be positive");
  if (l_s < k_nn) throw std::invalid_argument("params: need l_s >= k_nn");
  if (T == 0 && l_s > n) throw std::invalid_argument("params: need l_s <= n for the linear scan");
  if (T > 0 && s > 0 && l_s > s) throw std::invalid_argument("params: need l_s <= s");
}

uint64_t HyperParams::max_distance() const {
  const uint64_t c = (1ULL << b_c) - 1;
  return static_cast<uint64_t>(d) * c * c;
}

namespace {

std::string join_u32(const std::vector<uint32_t>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

std::vector<uint32_t> split_u32(const std::string& s) {
  std::vector<uint32_t> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(static_cast<uint32_t>(std::stoul(tok)));
  }
  return out;
}

}  // namespace

std::string HyperParams::to_config() const {
  std::ostringstream os;
  os << "n=" << n << "\n";
  os << "d=" << d << "\n";
  os << "k_nn=" << k_nn << "\n";
  os << "T=" << T << "\n";
  os << "k_c=" << join_u32(k_c) << "\n";
  os << "m=" << m << "\n";
  os << "u=" << join_u32(u) << "\n";
  os << "u_all=" << u_all << "\n";
  os << "l=" << join_u32(l) << "\n";
  os << "alpha=" << alpha << "\n";
  os << "s=" << s << "\n";
  os << "l_s=" << l_s << "\n";
  os << "b_c=" << b_c << "\n";
  os << "b_d=" << b_d << "\n";
  os << "b_cid=" << b_cid << "\n";
  os << "b_pid=" << b_pid << "\n";
  os << "r_c=" << r_c << "\n";
  os << "r_p=" << r_p << "\n";
  os << "N=" << N << "\n";
  os << "t=" << t << "\n";
  return os.str();
}

HyperParams HyperParams::from_config(const std::string& text) {
  HyperParams p;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: missing '=' in line: " + line);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "n") p.n = std::stoull(val);
    else if (key == "d") p.d = static_cast<uint32_t>(std::stoul(val));
    else if (key == "k_nn") p.k_nn = static_cast<uint32_t>(std::stoul(val));
    else if (key == "T") p.T = static_cast<uint32_t>(std::stoul(val));
    else if (key == "k_c") p.k_c = split_u32(val);
    else if (key == "m") p.m = static_cast<uint32_t>(std::stoul(val));
    else if (key == "u") p.u = split_u32(val);
    else if (key == "u_all") p.u_all = static_cast<uint32_t>(std::stoul(val));
    else if (key == "l") p.l = split_u32(val);
    else if (key == "alpha") p.alpha = std::stod(val);
    else if (key == "s") p.s = std::stoull(val);
    else if (key == "l_s") p.l_s = static_cast<uint32_t>(std::stoul(val));
    else if (key == "b_c") p.b_c = static_cast<uint32_t>(std::stoul(val));
    else if (key == "b_d") p.b_d = static_cast<uint32_t>(std::stoul(val));
    else if (key == "b_cid") p.b_cid = static_cast<uint32_t>(std::stoul(val));
    else if (key == "b_pid") p.b_pid = static_cast<uint32_t>(std::stoul(val));
    else if (key == "r_c") p.r_c = static_cast<uint32_t>(std::stoul(val));
    else if (key == "r_p") p.r_p = static_cast<uint32_t>(std::stoul(val));
    else if (key == "N") p.N = static_cast<uint32_t>(std::stoul(val));
    else if (key == "t") p.t = std::stoull(val);
    else throw std::invalid_argument("config: unknown key: " + key);
  }
  return p;
}

uint64_t HyperParams::digest() const {
  const std::string text = to_config();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

HyperParams make_preset(uint64_t n, uint32_t d, uint32_t T, std::vector<uint32_t> k_c, uint32_t m,
                        std::vector<uint32_t> u, std::vector<uint32_t> l, uint64_t s, uint32_t l_s,
                        uint32_t b_c, uint32_t r_c, uint32_t r_p) {
  HyperParams p;
  p.n = n;
  p.d = d;
  p.k_nn = 10;
  p.T = T;
  p.k_c = std::move(k_c);
  p.m = m;
  p.u = std::move(u);
  p.l = std::move(l);
  p.alpha = 0.56;
  p.s = s;
  p.l_s = l_s;
  p.b_c = b_c;
  p.r_c = r_c;
  p.r_p = r_p;
  p.N = 8192;
  p.derive();
  return p;
}

}  // namespace

HyperParams load_preset(std::string_view name) {
  // Clustering presets.
  if (name == "sift")
    return make_preset(1000000, 128, 4, {50810, 25603, 9968, 4227}, 20, {50, 31, 19, 13},
                       {458, 270, 178, 84}, 31412, 262, 8, 5, 8);
  if (name == "deep1b-1m")
    return make_preset(1000000, 96, 5, {44830, 25867, 11795, 5607, 2611}, 22, {46, 31, 19, 13, 7},
                       {458, 270, 178, 84, 84}, 25150, 210, 8, 5, 8);
  if (name == "deep1b-10m")
    return make_preset(10000000, 96, 6, {209727, 107417, 39132, 14424, 5796, 2394}, 48,
                       {88, 46, 25, 13, 7, 7}, {924, 458, 178, 93, 84, 84}, 50649, 423, 8, 5, 8);
  if (name == "amazon")
    return make_preset(1048576, 50, 5, {41293, 24143, 9708, 3516, 1156}, 25, {37, 37, 22, 10, 7},
                       {364, 364, 178, 84, 84}, 8228, 84, 9, 4, 6);
  // Linear-scan presets (no clustering fields).
  if (name == "sift-ls") return make_preset(1000000, 128, 0, {}, 0, {}, {}, 0, 8334, 8, 0, 8);
  if (name == "deep1b-1m-ls") return make_preset(1000000, 96, 0, {}, 0, {}, {}, 0, 8334, 8, 0, 8);
  if (name == "deep1b-10m-ls") return make_preset(10000000, 96, 0, {}, 0, {}, {}, 0, 83, 8, 0, 9);
  if (name == "amazon-ls") return make_preset(1048576, 50, 0, {}, 0, {}, {}, 0, 8739, 9, 0, 7);
  throw std::invalid_argument("load_preset: unknown tag: " + std::string(name));
}

std::vector<std::string> preset_names() {
  return {"sift", "deep1b-1m", "deep1b-10m", "amazon", "sift-ls", "deep1b-1m-ls", "deep1b-10m-ls",
          "amazon-ls"};
}

std::vector<uint32_t> quantize(const std::vector<double>& raw, uint32_t b_c, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("quantize: need hi > lo");
  if (b_c == 0) throw std::invalid_argument("quantize: need b_c >= 1");
  const double max_code = static_cast<double>((1ULL << b_c) - 1);
  std::vector<uint32_t> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const double x = raw[i];
    if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite coordinate");
    // Round half up, then clamp.
    double scaled = (x - lo) / (hi - lo) * max_code;
    double rounded = std::floor(scaled + 0.5);
    if (rounded < 0.0) rounded = 0.0;
    if (rounded > max_code) rounded = max_code;
    out[i] = static_cast<uint32_t>(rounded);
  }
  return out;
}

uint64_t squared_distance(const uint32_t* a, const uint32_t* b, uint32_t d) {
  uint64_t acc = 0;
  for (uint32_t j = 0; j < d; ++j) {
    const int64_t diff = static_cast<int64_t>(a[j]) - static_cast<int64_t>(b[j]);
    acc += static_cast<uint64_t>(diff * diff);
  }
  return acc;
}

uint64_t squared_distance(const QuantizedPoint& p, const QuantizedPoint& q) {
  if (p.coords.size() != q.coords.size())
    throw std::invalid_argument("squared_distance: dimension mismatch");
  return squared_distance(p.coords.data(), q.coords.data(), static_cast<uint32_t>(p.coords.size()));
}

uint64_t squared_norm(const uint32_t* coords, uint32_t d) {
  uint64_t acc = 0;
  for (uint32_t j = 0; j < d; ++j) acc += static_cast<uint64_t>(coords[j]) * coords[j];
  return acc;
}

}  // namespace sknn
