#include "sknn/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "sknn/prf.hpp"
#include "sknn/rng.hpp"
#include "sknn/selection.hpp"

namespace sknn {

double eval_accuracy(const std::vector<std::vector<uint64_t>>& results,
                     const std::vector<std::vector<uint64_t>>& ground_truth, uint32_t k_nn) {
  if (results.size() != ground_truth.size() || results.empty())
    throw std::invalid_argument("eval_accuracy: query count mismatch");
  double total = 0.0;
  for (size_t q = 0; q < results.size(); ++q) {
    std::unordered_set<uint64_t> truth(ground_truth[q].begin(), ground_truth[q].end());
    uint32_t hits = 0;
    for (uint64_t id : results[q]) hits += truth.count(id) ? 1 : 0;
    total += static_cast<double>(hits) / k_nn;
  }
  return total / static_cast<double>(results.size());
}

TheoremResult run_theorem_suite(TheoremSuite which, uint64_t n, uint32_t k, double delta,
                                uint32_t trials, uint64_t seed) {
  TheoremResult res;
  res.which = which;
  res.n = n;
  res.k = k;
  res.delta = delta;
  res.trials = trials;
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("theorem suite: bad delta");
  const double l_real = which == TheoremSuite::Expectation
                            ? static_cast<double>(k) / delta
                            : static_cast<double>(k) * k / delta;
  if (l_real > static_cast<double>(n))
    throw std::invalid_argument("theorem suite: l = " + std::to_string(l_real) +
                                " exceeds n; pick a larger delta");
  res.l = static_cast<uint32_t>(std::llround(l_real));

  // Value i carries id i, so the exact top-k ids are 0..k-1.
  std::vector<ScoredId> items(n);
  Rng rng(seed);
  uint64_t exact_hits = 0;
  double intersection_sum = 0.0;
  res.per_trial.reserve(trials);
  for (uint32_t trial = 0; trial < trials; ++trial) {
    for (uint64_t i = 0; i < n; ++i) items[i] = ScoredId{i, i};
    shuffle_in_place(items, rng);
    const auto out = approx_topk(items, k, res.l);

    if (which == TheoremSuite::Expectation) {
      uint32_t inter = 0;
      for (const auto& s : out) inter += s.id < k ? 1 : 0;
      intersection_sum += inter;
      res.per_trial.push_back(inter);
    } else {
      bool exact = true;
      for (uint32_t i = 0; i < k && exact; ++i) exact = out[i].value == i && out[i].id == i;
      exact_hits += exact ? 1 : 0;
      res.per_trial.push_back(exact ? 1.0 : 0.0);
    }
  }

  if (which == TheoremSuite::Expectation) {
    res.mean_intersection = intersection_sum / trials;
    res.threshold = (1.0 - delta) * k;
    res.pass = res.mean_intersection >= res.threshold;
  } else {
    res.exact_frequency = static_cast<double>(exact_hits) / trials;
    res.threshold = 1.0 - delta - 0.05;  // sampling slack
    res.pass = res.exact_frequency >= res.threshold;
  }
  return res;
}

std::string TheoremResult::csv() const {
  std::ostringstream os;
  os << "trial," << (which == TheoremSuite::Expectation ? "intersection" : "exact") << "\n";
  for (size_t i = 0; i < per_trial.size(); ++i) os << i << ',' << per_trial[i] << "\n";
  return os.str();
}

std::string TheoremResult::summary() const {
  std::ostringstream os;
  if (which == TheoremSuite::Expectation) {
    os << "expectation suite: n=" << n << " k=" << k << " delta=" << delta << " l=" << l
       << " trials=" << trials << " mean_intersection=" << mean_intersection
       << " threshold=" << threshold << (pass ? " PASS" : " FAIL");
  } else {
    os << "whp suite: n=" << n << " k=" << k << " delta=" << delta << " l=" << l
       << " trials=" << trials << " exact_frequency=" << exact_frequency
       << " threshold=" << threshold << (pass ? " PASS" : " FAIL");
  }
  return os.str();
}

std::string report_costs(uint64_t n, uint32_t k, uint32_t l, uint32_t width) {
  std::ostringstream os;
  os << csv_header_gate_report() << "\n";
  os << csv_row(build_network(NetworkKind::Naive, n, k, 0, width)) << "\n";
  os << csv_row(build_network(NetworkKind::Approx, n, k, l, width)) << "\n";
  os << "cipher,out_bits,and_gates,and_per_bit\n";
  for (const auto& row : prf_cost_table()) {
    std::ostringstream apb;
    apb.precision(2);
    apb << std::fixed << static_cast<double>(row.and_gates) / static_cast<double>(row.out_bits);
    os << row.cipher << ',' << row.out_bits << ',' << row.and_gates << ',' << apb.str() << "\n";
  }
  return os.str();
}

HyperParams fit_query_params(const ClusterIndex& index, const TuneOptions& opts) {
  HyperParams p = index.params;
  p.k_nn = opts.k_nn;
  p.r_c = opts.r_c;
  p.r_p = opts.r_p;
  p.u.assign(p.T, 0);
  p.l.assign(p.T, 0);
  for (uint32_t g = 0; g < p.T; ++g) {
    const uint32_t kc = p.k_c[g];
    uint32_t u = std::max<uint32_t>(opts.min_u,
                                    static_cast<uint32_t>(std::ceil(kc * opts.retrieve_frac)));
    u = std::min(u, kc);
    // Bins sized for roughly (1-delta)-expected overlap at delta ~ 1/8.
    uint32_t l = std::min<uint32_t>(kc, std::max<uint32_t>(u, 8 * u));
    p.u[g] = u;
    p.l[g] = l;
  }
  if (opts.l_s > 0) {
    p.l_s = opts.l_s;
  } else if (p.s > 0) {
    p.l_s = std::max<uint32_t>(p.k_nn, std::min<uint64_t>(p.s, std::max<uint64_t>(p.s / 16, 8 * p.k_nn)));
  } else {
    p.l_s = p.k_nn;
  }
  // The realized stash can be smaller than the requested bin count.
  if (p.s > 0) p.l_s = std::max<uint32_t>(p.k_nn, std::min<uint64_t>(p.l_s, p.s));
  p.derive();
  p.validate();
  return p;
}

}  // namespace sknn
