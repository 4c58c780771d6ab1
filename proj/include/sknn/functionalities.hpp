#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sknn/rng.hpp"

namespace sknn {

// Trusted-party realizations of the selection, read and distance
// functionalities. They reconstruct from both parties' shares, run the exact
// plaintext operator, and return freshly masked per-party outputs.
//
// Deliberately NOT done here: shuffling. The input order is whatever the
// caller supplied; the protocol layer is responsible for the server-side
// random permutation the approximate selection relies on.

// Request for the exact top-k functionality. Value arrays are additive shares
// mod t; id arrays are XOR shares of id_bits-bit strings. An absent client
// idlist stands for all-zero shares (server-only ids).
struct FTopkRequest {
  std::vector<uint64_t> a_c;
  std::vector<uint64_t> a_s;
  std::optional<std::vector<uint64_t>> idlist_c;
  std::vector<uint64_t> idlist_s;
  uint64_t t = 0;
  uint32_t r = 0;        // truncation bits
  uint32_t k = 0;
  uint32_t id_bits = 0;
  bool return_val = false;
};

struct FTopkOutputs {
  // XOR shares of the k selected ids (client = c XOR w, server = w).
  std::vector<uint64_t> ids_client;
  std::vector<uint64_t> ids_server;
  // Present when return_val: additive shares mod t of the k truncated values
  // (client = b - s, server = s).
  std::vector<uint64_t> vals_client;
  std::vector<uint64_t> vals_server;
};

FTopkOutputs f_topk(const FTopkRequest& req, Rng& rng);

// Approximate variant: identical contract plus the bin count l.
FTopkOutputs f_atopk(const FTopkRequest& req, uint32_t l, Rng& rng);

// Distributed read: stores the block array at Init; Read reconstructs the
// index additively mod n and returns fresh XOR shares of the block.
class FDrom {
 public:
  void init(std::vector<std::vector<uint8_t>> blocks);
  struct ReadResult {
    std::vector<uint8_t> client;
    std::vector<uint8_t> server;
  };
  ReadResult read(uint64_t i_c, uint64_t i_s, Rng& rng) const;
  uint64_t size() const { return blocks_.size(); }

 private:
  std::vector<std::vector<uint8_t>> blocks_;
};

// Distance functionality, plain-input form: the client contributes the
// query, the server its points; output is a fresh additive sharing of the
// exact squared distances mod t.
struct FDistOutputs {
  std::vector<uint64_t> client;
  std::vector<uint64_t> server;
};
FDistOutputs f_dist(const std::vector<uint32_t>& q, const std::vector<std::vector<uint32_t>>& points,
                    uint64_t t, Rng& rng);

// Shared-input form (points arrive as additive coordinate/norm shares, e.g.
// after a DORAM read plus B2A). Slots whose XOR-shared dummy flag
// reconstructs to 1 are forced to the all-ones distance t-1, which truncates
// to the MAXVAL sentinel downstream.
struct FDistSharedRequest {
  std::vector<uint32_t> q;
  std::vector<uint64_t> coords_c, coords_s;  // count * d entries
  std::vector<uint64_t> norms_c, norms_s;    // count entries
  std::vector<uint8_t> flags_c, flags_s;     // count entries, XOR shares
  uint64_t t = 0;
};
FDistOutputs f_dist_shared(const FDistSharedRequest& req, Rng& rng);

}  // namespace sknn
