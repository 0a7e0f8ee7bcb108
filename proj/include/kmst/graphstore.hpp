// graphstore.hpp - distributed graph state under the random vertex partition.
//
// An edge lives on the machines of both endpoints (one copy if co-hosted).
// Updates arrive only at those machines and cost no communication. Each
// machine meters its logical word footprint; the suite-wide bound is
// C_SPACE * max(m/k + max_degree, k).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "kmst/eulertour.hpp"
#include "kmst/netsim.hpp"

namespace kmst::graphstore {

using i64 = std::int64_t;
using Vertex = eulertour::Vertex;
using EdgeKey = eulertour::EdgeKey;
using netsim::MachineId;

inline constexpr i64 C_SPACE = 64;

struct DuplicateEdge : std::runtime_error {
  DuplicateEdge(Vertex u, Vertex v)
      : std::runtime_error("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")") {}
};
struct SelfLoop : std::runtime_error {
  explicit SelfLoop(Vertex u) : std::runtime_error("self loop at " + std::to_string(u)) {}
};
struct UnknownEdge : std::runtime_error {
  UnknownEdge(Vertex u, Vertex v)
      : std::runtime_error("unknown edge (" + std::to_string(u) + "," + std::to_string(v) + ")") {}
};

// Strict total order on edges: (w, u, v). Makes the MSF unique.
struct WeightKey {
  i64 w = 0;
  Vertex u = 0, v = 0;
  friend auto operator<=>(const WeightKey&, const WeightKey&) = default;
  std::array<i64, 3> as_array() const { return {w, u, v}; }
};

struct WeightedEdge {
  Vertex u = 0, v = 0;  // u < v
  i64 w = 0;
  bool in_forest = false;
  WeightKey key() const { return {w, u, v}; }
  EdgeKey ekey() const { return {u, v}; }
  friend bool operator==(const WeightedEdge& a, const WeightedEdge& b) = default;
};

struct Partition {
  int k = 2;
  i64 seed = 0;
  std::vector<MachineId> machine_of;
  MachineId operator()(Vertex v) const { return machine_of.at((size_t)v); }
};

// Each vertex drawn independently and uniformly; reproducible from the seed.
Partition make_partition(i64 n, int k, i64 seed);

// One stored hint: some current forest edge incident to a neighbor vertex,
// or an explicit isolated marker.
struct HintEntry {
  bool isolated = true;
  eulertour::EulerLabel rec;
};

struct MachineState {
  MachineId id = 0;
  std::vector<Vertex> hosted;  // sorted
  std::map<EdgeKey, WeightedEdge> edges;
  std::map<EdgeKey, eulertour::EulerLabel> labels;  // incident forest edges
  std::map<Vertex, HintEntry> hints;                // per neighbor of this machine

  i64 peak_words = 0;

  bool hosts(Vertex v) const;
  i64 words() const;              // current logical footprint
  void touch();                   // fold current words into the peak
  void note_scratch(i64 extra);   // transient retention (received sets, tables)

  // incident forest-edge views for a hosted vertex
  std::vector<const eulertour::EulerLabel*> incident_labels(Vertex v) const;
  std::optional<eulertour::EulerLabel> min_incident_label(Vertex v) const;
  eulertour::EndpointState endpoint_state(Vertex v) const;
};

struct Cluster {
  Partition part;
  netsim::Fabric fabric;
  std::vector<MachineState> machines;
  i64 n = 0;

  Cluster(i64 n, int k, i64 seed);
  Cluster(i64 n, Partition p);

  int k() const { return fabric.k(); }
  MachineId host(Vertex v) const { return part(v); }

  void load_edges(const std::vector<WeightedEdge>& es);
  // local state change at <= 2 machines, zero rounds
  void ingest_insert(Vertex u, Vertex v, i64 w);
  void ingest_delete(Vertex u, Vertex v);
  bool has_edge(Vertex u, Vertex v) const;

  // global views (test / oracle side)
  std::vector<WeightedEdge> all_edges() const;
  std::vector<WeightedEdge> forest_edges() const;
  std::vector<eulertour::EulerLabel> all_labels() const;  // checks copy consistency
  std::optional<std::string> validate_forest() const;     // every tree + every hint

  struct MemoryReport {
    std::vector<i64> current;
    std::vector<i64> peak;
  };
  MemoryReport memory_report() const;
  i64 peak_words() const;

  // convenience: one dependency set of broadcasts, every machine retains the
  // result (metered)
  std::vector<netsim::Word> broadcast_set(const std::vector<netsim::BroadcastReq>& reqs);
};

// Endpoint broadcast payload: the tracked values (tree, size, outgoing label)
// plus the vertex's min-label incident edge, which doubles as a hint refresh
// for every machine keeping a slot for it.
netsim::Word endpoint_word(const Cluster& cl, i64 seq, Vertex x);
eulertour::EndpointState decode_endpoint_word(const netsim::Word& w);
void refresh_hint_from_endpoint(Cluster& cl, const netsim::Word& w);

// Parses "n m" header then "u v w" lines; '#' starts a comment.
struct GraphFile {
  i64 n = 0;
  std::vector<WeightedEdge> edges;
};
GraphFile parse_graph_file(const std::string& text);
std::string format_graph_file(const GraphFile& g);

}  // namespace kmst::graphstore
