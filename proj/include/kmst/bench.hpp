// bench.hpp - workload generation, experiment execution, CSV reporting.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kmst/graphstore.hpp"

namespace kmst::bench {

using i64 = std::int64_t;
using Vertex = eulertour::Vertex;
using graphstore::WeightedEdge;

struct ConstraintViolation : std::runtime_error {
  explicit ConstraintViolation(const std::string& what) : std::runtime_error(what) {}
};

struct Update {
  bool insert = true;
  Vertex u = 0, v = 0;
  i64 w = 0;
};

struct Workload {
  std::string generator;
  i64 seed = 0;
  i64 n = 0;
  std::vector<WeightedEdge> initial;
  std::vector<std::vector<Update>> batches;
  std::optional<Vertex> focus_vertex;  // hub whose host's inbound words get reported
};

// Reproducible stream of valid batches over a random initial graph.
Workload gen_random_stream(i64 n, int k, i64 m0, i64 batches, i64 batch_size, i64 seed);

struct HardInstanceParams {
  i64 b = 0;
  std::vector<int> X, Y;  // b bits each; X_i | Y_i must be 1
};

// The (b+2)-vertex family: hubs u=b and w=b+1 wired to v_i = i-1 by the bit
// strings; weights strictly below `below_w`, descending in listing order.
std::vector<WeightedEdge> gen_hard_instance(const HardInstanceParams& p, i64 below_w);

// k clearing batches over a chosen vertex set, then k insert/delete pairs of
// fresh hard instances at globally minimal weights: 3k batches total.
Workload gen_lower_bound_schedule(int k, double delta, i64 cap, i64 seed);

// Every update valid at its point (inserts absent, deletes present, no key
// repeated within a batch); returns the first offending batch.
std::optional<size_t> referee(const Workload& w);

struct RunOptions {
  int k = 4;
  i64 seed = 1;  // partition seed
  bool check_oracle = true;
  std::string solver = "boruvka";
};

struct RunReport {
  std::string csv;
  int exit_code = 0;  // 0 ok, 1 oracle divergence
  i64 init_rounds = 0;
  i64 total_rounds = 0;
};

// initialize(), then one CSV row per batch. Batches larger than k are split
// into sub-batches of at most k (deletions first, then insertions).
RunReport run(const Workload& w, const RunOptions& opt);

inline const char* csv_header() {
  return "batch_id,kind,size,rounds,max_link_words,total_words,peak_machine_words,"
         "mst_weight,oracle_ok,focus_words\n";
}

// Update stream file: "+ u v w" / "- u v" lines, "--" closes a batch,
// '#' starts a comment.
std::string format_stream(const Workload& w);
std::vector<std::vector<Update>> parse_stream(const std::string& text);

}  // namespace kmst::bench
