// dynmst.hpp - exact dynamic MSF maintenance, one update at a time, plus
// distributed initialization (Boruvka phases scheduled through the rerouted
// broadcast machinery, tours built by the k-way merge replay).

#pragma once

#include <cstdint>
#include <vector>

#include "kmst/graphstore.hpp"

namespace kmst::dynmst {

using i64 = std::int64_t;
using Vertex = eulertour::Vertex;
using graphstore::WeightedEdge;

struct UpdateResult {
  std::vector<WeightedEdge> added;    // edges that entered the forest
  std::vector<WeightedEdge> removed;  // edges that left it
  i64 rounds = 0;
};

class Engine {
 public:
  explicit Engine(graphstore::Cluster& cl) : cl_(cl) {}

  // Boruvka component merging: per phase one min-outgoing converge-cast and
  // one winner broadcast per component, chosen edges applied k at a time.
  // Returns rounds used; bounded by C_INIT * (n/k + log2 n).
  i64 initialize();

  UpdateResult insert_edge(Vertex u, Vertex v, i64 w);
  UpdateResult delete_edge(Vertex u, Vertex v);

  static constexpr i64 C_INIT = 32;          // initialization round constant
  static constexpr i64 SINGLE_UPDATE_CAP = 40;  // worst-case rounds per update

 private:
  graphstore::Cluster& cl_;
};

}  // namespace kmst::dynmst
