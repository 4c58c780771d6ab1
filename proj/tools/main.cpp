// Command-line front end: dataset generation, index building, the two-party
// query protocols (serve/query over TCP), plaintext evaluation, the
// selection-guarantee Monte Carlo suites, circuit cost reports and the
// acceptance self-test.
//
// Exit codes: 0 success, 1 runtime error, 2 acceptance failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sknn/acceptance.hpp"
#include "sknn/bench.hpp"
#include "sknn/core.hpp"
#include "sknn/dataset_io.hpp"
#include "sknn/plaintext.hpp"
#include "sknn/protocol.hpp"
#include "sknn/transport.hpp"

namespace {

using namespace sknn;

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

HyperParams params_from_arg(const std::string& arg) {
  for (const auto& name : preset_names())
    if (arg == name) return load_preset(arg);
  auto p = HyperParams::from_config(slurp(arg));
  p.derive();
  return p;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
}

ClusterIndex load_index(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return ClusterIndex::load(is);
}

std::string default_addr(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SKNN_BIND_ADDR")) return env;
  return "127.0.0.1:7215";
}

// Role hello so the dealer can tell its two peers apart, sent before the
// protocol handshake in TCP mode.
constexpr uint8_t kRoleClient = 1;
constexpr uint8_t kRoleServer = 2;

int cmd_gen(const SyntheticOptions& opts, const std::string& out) {
  save_fvecs(out, gen_synthetic(opts));
  std::cout << "wrote " << opts.n << " x " << opts.d << " vectors to " << out << "\n";
  return 0;
}

int cmd_build_index(const std::string& data_path, const std::string& format,
                    const std::string& params_arg, uint64_t seed, const std::string& out,
                    const std::string& params_out) {
  auto params = params_from_arg(params_arg);
  const auto raw = load_vecs(data_path, format_from_name(format));
  const auto qb = quantize_dataset(raw, params.b_c);
  params.n = qb.data.n();
  params.d = qb.data.d;
  params.derive();

  ClusterIndex index = build_cluster_index(qb.data, params, seed);
  TuneOptions topts;
  topts.k_nn = params.k_nn;
  topts.r_c = params.r_c;
  topts.r_p = params.r_p;
  topts.l_s = params.l_s;
  index.params = fit_query_params(index, topts);
  index.lo = qb.lo;
  index.hi = qb.hi;
  index.validate();

  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + out);
  index.save(os);
  if (!params_out.empty()) write_file(params_out, index.params.to_config());
  std::cout << "index: T=" << index.params.T << " clusters=" << index.total_clusters()
            << " stash=" << index.stash.size() << " -> " << out << "\n";
  return 0;
}

int cmd_serve(const std::string& role, const std::string& addr, const std::string& data_path,
              const std::string& index_path, const std::string& format,
              const std::string& params_arg, uint64_t seed, bool linear, bool once) {
  const auto [host, port] = parse_addr(default_addr(addr));

  if (role == "dealer") {
    TcpListener listener(host, port);
    std::cout << "dealer listening on " << host << ":" << port << "\n";
    do {
      auto a = listener.accept();
      auto b = listener.accept();
      const uint8_t role_a = a->recv().payload.at(0);
      const uint8_t role_b = b->recv().payload.at(0);
      Channel* client = role_a == kRoleClient ? a.get() : b.get();
      Channel* server = role_a == kRoleClient ? b.get() : a.get();
      if (role_a == role_b) throw std::runtime_error("dealer: duplicate role hello");
      dealer_serve(*client, *server, seed);
      std::cout << "dealer: session complete\n";
    } while (!once);
    return 0;
  }
  if (role != "server") throw std::runtime_error("serve role must be server or dealer");

  std::string dealer_addr = host + ":" + std::to_string(port + 1);
  if (const char* env = std::getenv("SKNN_DEALER_ADDR")) dealer_addr = env;
  const auto [dhost, dport] = parse_addr(dealer_addr);

  TcpListener listener(host, port);
  std::cout << "server listening on " << host << ":" << port << ", dealer at " << dhost << ":"
            << dport << "\n";

  if (linear) {
    auto params = params_from_arg(params_arg);
    const auto raw = load_vecs(data_path, format_from_name(format));
    const auto qb = quantize_dataset(raw, params.b_c);
    params.n = qb.data.n();
    params.d = qb.data.d;
    params.derive();
    params.validate();
    do {
      auto client = listener.accept();
      auto dealer = TcpChannel::connect(dhost, dport);
      dealer->send(kTagHandshake, {kRoleServer});
      LinearServerInput input{&qb.data, qb.lo, qb.hi};
      linear_scan_server(*client, *dealer, params, input, seed);
      std::cout << "server: linear session complete\n";
    } while (!once);
    return 0;
  }

  const ClusterIndex index = load_index(index_path);
  index.validate();
  do {
    auto client = listener.accept();
    auto dealer = TcpChannel::connect(dhost, dport);
    dealer->send(kTagHandshake, {kRoleServer});
    ClusterServerInput input{&index, index.lo, index.hi};
    clustering_server(*client, *dealer, index.params, input, seed);
    std::cout << "server: clustering session complete\n";
  } while (!once);
  return 0;
}

int cmd_query(const std::string& addr, const std::string& dealer_addr_flag,
              const std::string& params_arg, const std::string& queries_path,
              const std::string& format, uint32_t k, bool linear, const std::string& out) {
  auto params = params_from_arg(params_arg);
  if (k > 0) params.k_nn = k;
  params.validate();
  const auto queries = load_vecs(queries_path, format_from_name(format)).rows;

  const auto [host, port] = parse_addr(default_addr(addr));
  std::string dealer_addr =
      dealer_addr_flag.empty() ? host + ":" + std::to_string(port + 1) : dealer_addr_flag;
  if (const char* env = std::getenv("SKNN_DEALER_ADDR"); env && dealer_addr_flag.empty())
    dealer_addr = env;
  const auto [dhost, dport] = parse_addr(dealer_addr);

  auto server = TcpChannel::connect(host, port);
  auto dealer = TcpChannel::connect(dhost, dport);
  dealer->send(kTagHandshake, {kRoleClient});

  const ClientOutput res = linear
                               ? linear_scan_client(*server, *dealer, params, queries)
                               : clustering_client(*server, *dealer, params, queries);

  std::ostringstream csv;
  csv << "query,ids\n";
  for (size_t i = 0; i < res.ids.size(); ++i) {
    csv << i << ',';
    for (size_t j = 0; j < res.ids[i].size(); ++j) csv << (j ? " " : "") << res.ids[i][j];
    csv << "\n";
  }
  if (!out.empty())
    write_file(out, csv.str());
  else
    std::cout << csv.str();
  std::cout << res.transcript.summary();
  return 0;
}

int cmd_theorems(const std::string& which, uint64_t n, uint32_t k, double delta, uint32_t trials,
                 uint64_t seed, const std::string& out) {
  const auto suite = which == "expectation" ? TheoremSuite::Expectation : TheoremSuite::Whp;
  const auto res = run_theorem_suite(suite, n, k, delta, trials, seed);
  std::cout << res.summary() << "\n";
  if (!out.empty()) write_file(out, res.csv());
  return res.pass ? 0 : 2;
}

int cmd_costs(uint64_t n, uint32_t k, uint32_t l, uint32_t width, const std::string& out) {
  const auto report = report_costs(n, k, l, width);
  std::cout << report;
  if (!out.empty()) write_file(out, report);
  return 0;
}

int cmd_eval(const std::string& data_path, const std::string& format,
             const std::string& queries_path, const std::string& params_arg,
             const std::string& index_path, uint32_t k, uint64_t seed, uint32_t max_queries,
             const std::string& algo, bool protocol, const std::string& out) {
  auto params = params_from_arg(params_arg);
  const auto raw = load_vecs(data_path, format_from_name(format));
  const auto qb = quantize_dataset(raw, params.b_c);
  params.n = qb.data.n();
  params.d = qb.data.d;
  if (k > 0) params.k_nn = k;
  params.derive();

  auto queries = load_vecs(queries_path, format_from_name(format)).rows;
  if (max_queries > 0 && queries.size() > max_queries) queries.resize(max_queries);

  std::vector<std::vector<uint64_t>> truth(queries.size());
  for (size_t i = 0; i < queries.size(); ++i) {
    QuantizedPoint q{quantize(queries[i], params.b_c, qb.lo, qb.hi), 0};
    truth[i] = brute_force_knn(q, qb.data, params.k_nn);
  }

  std::ostringstream csv;
  csv << "algo,mode,n,d,k_nn,queries,accuracy,wall_ms,bytes_sent,bytes_received\n";
  auto emit = [&](const std::string& name, const std::string& mode,
                  const std::vector<std::vector<uint64_t>>& ids, double wall_ms,
                  const Transcript* tr) {
    const double acc = eval_accuracy(ids, truth, params.k_nn);
    uint64_t sent = 0, recv = 0;
    if (tr)
      for (const auto& row : tr->rows) {
        sent += row.bytes_sent;
        recv += row.bytes_received;
      }
    csv << name << ',' << mode << ',' << params.n << ',' << params.d << ',' << params.k_nn << ','
        << queries.size() << ',' << acc << ',' << wall_ms << ',' << sent << ',' << recv << "\n";
    std::cout << name << " (" << mode << "): accuracy=" << acc << "\n";
  };

  if (algo == "linear" || algo == "both") {
    HyperParams lp = params;
    lp.T = 0;
    lp.k_c.clear();
    lp.u.clear();
    lp.l.clear();
    lp.m = 0;
    lp.s = 0;
    lp.derive();
    lp.validate();
    if (protocol) {
      const auto res = run_linear_scan_inproc(lp, qb.data, queries, seed, seed + 1, qb.lo, qb.hi);
      emit("linear", "protocol", res.client.ids, res.client.transcript.wall_ms,
           &res.client.transcript);
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<std::vector<uint64_t>> ids(queries.size());
      for (size_t i = 0; i < queries.size(); ++i) {
        QuantizedPoint q{quantize(queries[i], lp.b_c, qb.lo, qb.hi), 0};
        ids[i] = plaintext_linear_scan(q, qb.data, lp, linear_query_seed(seed, i));
      }
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      emit("linear", "plaintext", ids, ms, nullptr);
    }
  }

  if (algo == "cluster" || algo == "both") {
    ClusterIndex index;
    if (!index_path.empty()) {
      index = load_index(index_path);
    } else {
      index = build_cluster_index(qb.data, params, seed);
      TuneOptions topts;
      topts.k_nn = params.k_nn;
      topts.r_c = params.r_c;
      topts.r_p = params.r_p;
      topts.l_s = params.l_s;
      index.params = fit_query_params(index, topts);
      index.lo = qb.lo;
      index.hi = qb.hi;
    }
    index.validate();
    if (protocol) {
      const auto res =
          run_clustering_inproc(index.params, index, queries, seed, seed + 1, qb.lo, qb.hi);
      emit("cluster", "protocol", res.client.ids, res.client.transcript.wall_ms,
           &res.client.transcript);
      std::cout << res.client.transcript.summary();
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      const uint64_t session_seed = clustering_session_seed(seed);
      std::vector<std::vector<uint64_t>> ids(queries.size());
      for (size_t i = 0; i < queries.size(); ++i) {
        QuantizedPoint q{quantize(queries[i], index.params.b_c, qb.lo, qb.hi), 0};
        ids[i] = plaintext_clustering_knns(q, index, index.params, session_seed);
      }
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      emit("cluster", "plaintext", ids, ms, nullptr);
    }
  }

  if (!out.empty()) write_file(out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secure approximate k-nearest-neighbor engine"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a synthetic fvecs dataset");
  SyntheticOptions gopts;
  std::string gen_out = "data.fvecs";
  gen->add_option("--n", gopts.n)->required();
  gen->add_option("--d", gopts.d)->required();
  gen->add_option("--blobs", gopts.blobs);
  gen->add_option("--spread", gopts.spread);
  gen->add_option("--box", gopts.box);
  gen->add_option("--min-sep", gopts.min_sep);
  gen->add_option("--seed", gopts.seed);
  gen->add_option("--out", gen_out);

  auto* build = app.add_subcommand("build-index", "build a balanced cluster index");
  std::string b_data, b_format = "fvecs", b_params, b_out = "index.bin", b_params_out;
  uint64_t b_seed = 1;
  build->add_option("--data", b_data)->required();
  build->add_option("--format", b_format);
  build->add_option("--params", b_params)->required();
  build->add_option("--seed", b_seed);
  build->add_option("--out", b_out);
  build->add_option("--params-out", b_params_out);

  auto* serve = app.add_subcommand("serve", "run the server or dealer role over TCP");
  std::string s_role = "server", s_addr, s_data, s_index, s_format = "fvecs", s_params;
  uint64_t s_seed = 1;
  bool s_linear = false, s_once = false;
  serve->add_option("--role", s_role)->check(CLI::IsMember({"server", "dealer"}));
  serve->add_option("--addr", s_addr);
  serve->add_option("--data", s_data);
  serve->add_option("--index", s_index);
  serve->add_option("--format", s_format);
  serve->add_option("--params", s_params);
  serve->add_option("--seed", s_seed);
  serve->add_flag("--linear", s_linear);
  serve->add_flag("--once", s_once);

  auto* query = app.add_subcommand("query", "run queries against a server as the client role");
  std::string c_addr, c_dealer_addr, c_params, c_queries, c_format = "fvecs", c_out;
  uint32_t c_k = 0;
  bool c_linear = false;
  query->add_option("--addr", c_addr);
  query->add_option("--dealer-addr", c_dealer_addr);
  query->add_option("--params", c_params)->required();
  query->add_option("--queries", c_queries)->required();
  query->add_option("--format", c_format);
  query->add_option("--k", c_k);
  query->add_flag("--linear", c_linear);
  query->add_option("--out", c_out);

  auto* eval = app.add_subcommand("eval", "evaluate accuracy (plaintext or in-process protocol)");
  std::string e_data, e_format = "fvecs", e_queries, e_params, e_index, e_out, e_algo = "both";
  uint32_t e_k = 0, e_max = 0;
  uint64_t e_seed = 1;
  bool e_protocol = false;
  eval->add_option("--data", e_data)->required();
  eval->add_option("--format", e_format);
  eval->add_option("--queries", e_queries)->required();
  eval->add_option("--params", e_params)->required();
  eval->add_option("--index", e_index);
  eval->add_option("--k", e_k);
  eval->add_option("--seed", e_seed);
  eval->add_option("--max-queries", e_max);
  eval->add_option("--algo", e_algo)->check(CLI::IsMember({"linear", "cluster", "both"}));
  eval->add_flag("--protocol", e_protocol);
  eval->add_option("--out", e_out);

  auto* theorems = app.add_subcommand("theorems", "Monte Carlo suites for the selection guarantees");
  std::string t_which = "expectation", t_out;
  uint64_t t_n = 100000, t_seed = 1;
  uint32_t t_k = 50, t_trials = 200;
  double t_delta = 0.1;
  theorems->add_option("--which", t_which)->check(CLI::IsMember({"expectation", "whp"}));
  theorems->add_option("--n", t_n);
  theorems->add_option("--k", t_k);
  theorems->add_option("--delta", t_delta);
  theorems->add_option("--trials", t_trials);
  theorems->add_option("--seed", t_seed);
  theorems->add_option("--out", t_out);

  auto* costs = app.add_subcommand("costs", "comparator and PRF gate-cost report");
  uint64_t n_costs = 1000000;
  uint32_t k_costs = 10, l_costs = 1000, w_costs = 24;
  std::string costs_out;
  costs->add_option("--n", n_costs);
  costs->add_option("--k", k_costs);
  costs->add_option("--l", l_costs);
  costs->add_option("--w", w_costs);
  costs->add_option("--out", costs_out);

  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gopts, gen_out);
    if (build->parsed())
      return cmd_build_index(b_data, b_format, b_params, b_seed, b_out, b_params_out);
    if (serve->parsed())
      return cmd_serve(s_role, s_addr, s_data, s_index, s_format, s_params, s_seed, s_linear,
                       s_once);
    if (query->parsed())
      return cmd_query(c_addr, c_dealer_addr, c_params, c_queries, c_format, c_k, c_linear, c_out);
    if (eval->parsed())
      return cmd_eval(e_data, e_format, e_queries, e_params, e_index, e_k, e_seed, e_max, e_algo,
                      e_protocol, e_out);
    if (theorems->parsed())
      return cmd_theorems(t_which, t_n, t_k, t_delta, t_trials, t_seed, t_out);
    if (costs->parsed()) return cmd_costs(n_costs, k_costs, l_costs, w_costs, costs_out);
    if (selftest->parsed()) {
      const int failures = run_acceptance(std::cout);
      return failures == 0 ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
