// oracle.hpp - sequential ground truth. Never touches the fabric.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "kmst/graphstore.hpp"

namespace kmst::oracle {

using i64 = std::int64_t;
using Vertex = eulertour::Vertex;
using EdgeKey = eulertour::EdgeKey;
using graphstore::WeightedEdge;

struct UnionFind {
  std::map<Vertex, Vertex> parent;
  Vertex find(Vertex x);
  bool unite(Vertex a, Vertex b);  // false if already joined
};

// Unique MSF under the (w, u, v) order; input order does not matter.
std::vector<WeightedEdge> kruskal(std::vector<WeightedEdge> edges);

std::set<EdgeKey> edge_set(const std::vector<WeightedEdge>& es);

// Explicit-traversal referee for the label predicates.
struct TreeOracle {
  Vertex root = -1;
  std::map<Vertex, Vertex> parent;        // root maps to -1
  std::map<Vertex, EdgeKey> parent_edge;  // first-entry edge per non-root vertex

  explicit TreeOracle(const std::vector<EdgeKey>& tree_edges);

  bool on_root_path(Vertex s, const EdgeKey& e) const;  // e on the path root -> s
  std::set<Vertex> cut_side(const EdgeKey& c) const;    // vertices separated from the root
  std::optional<EdgeKey> parent_of(Vertex s) const;
};

// Single batch applied to an edge list; n kept small so sub-checks can be
// exhaustive.
struct BatchOutcome {
  std::vector<WeightedEdge> new_edges;   // graph after the batch
  std::vector<WeightedEdge> new_forest;  // its MSF
  std::set<EdgeKey> removed;             // old forest edges that fell out
  std::set<EdgeKey> added;               // edges that entered the forest
};
struct BatchUpdate {
  bool insert = true;
  Vertex u = 0, v = 0;
  i64 w = 0;
};
BatchOutcome brute_force_batch(const std::vector<WeightedEdge>& graph,
                               const std::vector<BatchUpdate>& batch);

// Replays an update stream against a running forest reporter; returns the
// first diverging step, if any.
struct Transcript {
  std::vector<WeightedEdge> initial;
  std::vector<std::vector<BatchUpdate>> batches;
  std::vector<std::set<EdgeKey>> reported_forests;  // one per batch
};
std::optional<size_t> validate_run(const Transcript& t);

}  // namespace kmst::oracle
