#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sknn/core.hpp"
#include "sknn/plaintext.hpp"

namespace sknn {

// Mean fraction of true neighbors returned, averaged over queries.
double eval_accuracy(const std::vector<std::vector<uint64_t>>& results,
                     const std::vector<std::vector<uint64_t>>& ground_truth, uint32_t k_nn);

// ---------------------------------------------------------------------------
// Monte Carlo suites for the two selection guarantees: with l = k/delta bins
// the expected overlap with the exact top-k is at least (1-delta)k; with
// l = k^2/delta bins the output is exactly the top-k with probability at
// least 1-delta over the shuffle.

enum class TheoremSuite { Expectation, Whp };

struct TheoremResult {
  TheoremSuite which;
  uint64_t n = 0;
  uint32_t k = 0;
  double delta = 0.0;
  uint32_t l = 0;
  uint32_t trials = 0;
  double mean_intersection = 0.0;  // expectation suite
  double exact_frequency = 0.0;    // whp suite
  double threshold = 0.0;
  bool pass = false;
  std::vector<double> per_trial;

  std::string csv() const;
  std::string summary() const;
};

TheoremResult run_theorem_suite(TheoremSuite which, uint64_t n, uint32_t k, double delta,
                                uint32_t trials, uint64_t seed);

// ---------------------------------------------------------------------------
// Cost report: comparator/AND counts for naive vs approximate selection plus
// the PRF gate-cost table.
std::string report_costs(uint64_t n, uint32_t k, uint32_t l, uint32_t width);

// ---------------------------------------------------------------------------
// Desk-scale helper for picking query-stage parameters for a built index.
// Plain grid probe over retrieval fractions; tunes u/l per group and keeps
// everything inside the validation bounds. No claim of matching the original
// hyperparameter search.
struct TuneOptions {
  uint32_t k_nn = 10;
  uint32_t r_c = 4;
  uint32_t r_p = 3;
  uint32_t l_s = 0;         // 0: derived from stash size
  double retrieve_frac = 0.10;  // fraction of clusters fetched per group
  uint32_t min_u = 4;
};
HyperParams fit_query_params(const ClusterIndex& index, const TuneOptions& opts);

}  // namespace sknn
