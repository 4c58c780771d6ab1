#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sknn/plaintext.hpp"

namespace sknn {

// Comparator-network model of the top-k selection circuits. The network is
// kept implicit: evaluation streams over the input exactly in the order the
// garbled circuit would, so memory stays independent of n, and the comparator
// count is asserted against the closed-form formulas at construction.
//
// Accounting convention: one w-bit comparator (a less-than plus two MUXes
// under free-XOR) is charged 3w AND gates. This is a bookkeeping constant for
// reports, not a cryptographic claim.
inline constexpr uint32_t kAndGatesPerComparatorBit = 3;

enum class NetworkKind { Naive, Approx };

struct SelectionNetwork {
  NetworkKind kind = NetworkKind::Naive;
  uint64_t n = 0;
  uint32_t k = 0;
  uint32_t l = 0;       // bins; unused for naive
  uint32_t width = 0;   // value bit width w = b_d - r
  uint64_t comparators = 0;
  uint64_t and_gates = 0;

  uint64_t maxval() const { return width >= 64 ? UINT64_MAX : (1ULL << width) - 1; }
};

// Formulas: naive n*k; approx sum(bin_size - 1) + l*k with ceil(n/l) binning
// (equals (n - l) + l*k whenever l divides n).
SelectionNetwork build_network(NetworkKind kind, uint64_t n, uint32_t k, uint32_t l, uint32_t width);

// Evaluates the network on n w-bit values with ids. Output is identical to
// naive_topk / approx_topk on the same (already shuffled) input; the
// comparator count consumed during evaluation must equal the formula.
std::vector<ScoredId> evaluate(const SelectionNetwork& net, const std::vector<uint64_t>& values,
                               const std::vector<uint64_t>& ids);

// Share-width truncation model: drop r low-order bits.
uint64_t truncate_shares_model(uint64_t value, uint32_t r, uint32_t b_d);

std::string csv_header_gate_report();
std::string csv_row(const SelectionNetwork& net);

}  // namespace sknn
