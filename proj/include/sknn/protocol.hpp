#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sknn/core.hpp"
#include "sknn/doram.hpp"
#include "sknn/plaintext.hpp"
#include "sknn/transport.hpp"

namespace sknn {

inline constexpr uint32_t kProtocolVersion = 1;

enum class Role { Client, Server, Dealer };

// Abort carrying the stage at which the run failed.
struct ProtocolError : std::runtime_error {
  ProtocolError(Stage st, const std::string& msg)
      : std::runtime_error(std::string(stage_name(st)) + ": " + msg), stage(st) {}
  Stage stage;
};

// Per-stage communication accounting, aggregated over a party's channels.
struct Transcript {
  struct Row {
    uint64_t bytes_sent = 0;
    uint64_t bytes_received = 0;
    uint64_t rounds = 0;
  };
  std::array<Row, static_cast<size_t>(Stage::kCount)> rows{};
  double wall_ms = 0.0;

  Row& row(Stage s) { return rows[static_cast<size_t>(s)]; }
  const Row& row(Stage s) const { return rows[static_cast<size_t>(s)]; }
  void add_channel(const Channel& ch);
  std::string summary() const;
  std::string csv() const;  // stage,bytes_sent,bytes_received,rounds
};

// ---------------------------------------------------------------------------
// Linear-scan protocol.

struct LinearServerInput {
  const QuantizedDataset* data = nullptr;
  double lo = 0.0, hi = 255.0;  // quantization bounds announced at handshake
};

struct ClientOutput {
  std::vector<std::vector<uint64_t>> ids;  // per query
  Transcript transcript;
};

// Client role: raw queries are quantized with the handshake bounds.
ClientOutput linear_scan_client(Channel& to_server, Channel& to_dealer, const HyperParams& params,
                                const std::vector<std::vector<double>>& queries);
void linear_scan_server(Channel& to_client, Channel& to_dealer, const HyperParams& params,
                        const LinearServerInput& input, uint64_t seed);

// ---------------------------------------------------------------------------
// Clustering protocol.

struct ClusterServerInput {
  const ClusterIndex* index = nullptr;
  double lo = 0.0, hi = 255.0;
};

ClientOutput clustering_client(Channel& to_server, Channel& to_dealer, const HyperParams& params,
                               const std::vector<std::vector<double>>& queries);
void clustering_server(Channel& to_client, Channel& to_dealer, const HyperParams& params,
                       const ClusterServerInput& input, uint64_t seed);

// Dealer endpoint: hosts the ideal functionalities, the distance-stage
// packing emulation, B2A material and DPF key generation for one session of
// either protocol (the client handshake announces which).
void dealer_serve(Channel& to_client, Channel& to_server, uint64_t seed);

// ---------------------------------------------------------------------------
// In-process harness: runs the three roles on memory channels.

struct InprocResult {
  ClientOutput client;
  Transcript server_transcript;
};

InprocResult run_linear_scan_inproc(const HyperParams& params, const QuantizedDataset& data,
                                    const std::vector<std::vector<double>>& queries,
                                    uint64_t server_seed, uint64_t dealer_seed, double lo = 0.0,
                                    double hi = 0.0);

InprocResult run_clustering_inproc(const HyperParams& params, const ClusterIndex& index,
                                   const std::vector<std::vector<double>>& queries,
                                   uint64_t server_seed, uint64_t dealer_seed, double lo = 0.0,
                                   double hi = 0.0);

// The per-query shuffle seed the server derives; exposed so differential
// tests can run the plaintext algorithms on identical permutations.
uint64_t linear_query_seed(uint64_t server_seed, uint32_t query_index);
uint64_t clustering_session_seed(uint64_t server_seed);

// Standalone DORAM multi-read over channels (client + server vs dealer);
// used by the clustering protocol and by the round-count checks.
std::vector<std::vector<uint8_t>> doram_multi_read_party(Channel& to_dealer, const MaskedDb& replica,
                                                         const std::vector<uint64_t>& index_shares);
void doram_multi_read_dealer(Channel& to_client, Channel& to_server, const PrfKey& key_a,
                             const PrfKey& key_b, uint32_t depth, uint32_t block_bits, Rng& rng);

}  // namespace sknn
