#include "sknn/selection.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace sknn {

namespace {

uint64_t approx_comparators(uint64_t n, uint32_t k, uint32_t l) {
  const uint64_t chunk = n == 0 ? 1 : (n + l - 1) / l;
  uint64_t total = 0;
  for (uint32_t b = 0; b < l; ++b) {
    const uint64_t begin = static_cast<uint64_t>(b) * chunk;
    const uint64_t end = std::min<uint64_t>(n, begin + chunk);
    if (end > begin) total += end - begin - 1;
  }
  return total + static_cast<uint64_t>(l) * k;
}

}  // namespace

SelectionNetwork build_network(NetworkKind kind, uint64_t n, uint32_t k, uint32_t l, uint32_t width) {
  if (n == 0 || k == 0) throw std::invalid_argument("build_network: need n >= 1, k >= 1");
  if (width == 0 || width > 64) throw std::invalid_argument("build_network: bad width");
  SelectionNetwork net;
  net.kind = kind;
  net.n = n;
  net.k = k;
  net.width = width;
  if (kind == NetworkKind::Naive) {
    net.l = 0;
    net.comparators = n * k;
  } else {
    if (!(k <= l && l <= n)) throw std::invalid_argument("build_network: approx needs k <= l <= n");
    net.l = l;
    net.comparators = approx_comparators(n, k, l);
    if (n % l == 0 && net.comparators != (n - l) + static_cast<uint64_t>(l) * k)
      throw std::logic_error("build_network: comparator formula mismatch");
  }
  net.and_gates = net.comparators * kAndGatesPerComparatorBit * width;
  return net;
}

std::vector<ScoredId> evaluate(const SelectionNetwork& net, const std::vector<uint64_t>& values,
                               const std::vector<uint64_t>& ids) {
  if (values.size() != net.n || ids.size() != net.n)
    throw std::invalid_argument("evaluate: input length mismatch");
  const uint64_t maxval = net.maxval();
  for (uint64_t v : values)
    if (v > maxval) throw std::invalid_argument("evaluate: value exceeds network width");

  uint64_t used = 0;

  // The k-minima window shared by both network kinds (Algorithm-1 sweep).
  std::vector<ScoredId> window(net.k, ScoredId{maxval, 0});
  auto insert = [&](ScoredId x) {
    for (uint32_t j = 0; j < net.k; ++j) {
      ++used;  // one comparator: less-than plus two MUXes
      if (x.value < window[j].value) std::swap(window[j], x);
    }
  };

  if (net.kind == NetworkKind::Naive) {
    for (size_t i = 0; i < values.size(); ++i) insert(ScoredId{values[i], ids[i]});
  } else {
    const size_t n = values.size();
    const size_t chunk = n == 0 ? 1 : (n + net.l - 1) / net.l;
    for (uint32_t b = 0; b < net.l; ++b) {
      const size_t begin = static_cast<size_t>(b) * chunk;
      const size_t end = std::min(n, begin + chunk);
      ScoredId m{maxval, 0};
      if (begin < end) {
        m = ScoredId{values[begin], ids[begin]};
        for (size_t i = begin + 1; i < end; ++i) {
          ++used;  // pairwise min comparator
          if (values[i] < m.value) m = ScoredId{values[i], ids[i]};
        }
      }
      insert(m);
    }
  }

  if (used != net.comparators) throw std::logic_error("evaluate: comparator count mismatch");
  return window;
}

uint64_t truncate_shares_model(uint64_t value, uint32_t r, uint32_t b_d) {
  if (r > b_d) throw std::invalid_argument("truncate: r exceeds b_d");
  if (b_d < 64 && value >= (1ULL << b_d)) throw std::invalid_argument("truncate: value exceeds b_d bits");
  return r >= 64 ? 0 : value >> r;
}

std::string csv_header_gate_report() { return "kind,n,k,l,w,comparators,and_gates"; }

std::string csv_row(const SelectionNetwork& net) {
  std::ostringstream os;
  os << (net.kind == NetworkKind::Naive ? "naive" : "approx") << ',' << net.n << ',' << net.k << ','
     << net.l << ',' << net.width << ',' << net.comparators << ',' << net.and_gates;
  return os.str();
}

}  // namespace sknn
