// eulertour.hpp - Euler tour edge labels over a spanning forest.
//
// A tree with t vertices carries tour_size = 2*(t-1) directed traversals,
// labeled 0 .. tour_size-1. Each forest edge stores its two labels (the
// smaller is label_in), which endpoint the label_in traversal points toward,
// the tour size of its tree, and the tree id (the tour's root vertex).
// Isolated vertices have tour size 0 and no labels.
//
// All structural updates are label arithmetic driven by a handful of
// broadcast values, so every machine can maintain its own slice of the
// forest without seeing the rest.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kmst::graphstore {
struct Cluster;
}

namespace kmst::eulertour {

using i64 = std::int64_t;
using Vertex = i64;

struct NotATree : std::runtime_error {
  NotATree() : std::runtime_error("input is not a tree") {}
};
struct NotForestEdge : std::runtime_error {
  NotForestEdge() : std::runtime_error("edge is not in the forest") {}
};
struct SameTree : std::runtime_error {
  SameTree() : std::runtime_error("endpoints already in one tree") {}
};
struct CycleCreated : std::runtime_error {
  CycleCreated() : std::runtime_error("forest addition would close a cycle") {}
};
struct IsRoot : std::runtime_error {
  IsRoot() : std::runtime_error("root vertex has no parent edge") {}
};

struct EulerLabel {
  Vertex u = 0, v = 0;     // u < v
  i64 label_in = 0;        // smaller label
  i64 label_out = 0;       // larger label
  bool in_toward_v = true; // label_in traversal points toward v (else toward u)
  i64 tour_size = 0;       // traversal count of this edge's tree
  Vertex tree = 0;         // tour root vertex

  Vertex in_target() const { return in_toward_v ? v : u; }
  Vertex out_target() const { return in_toward_v ? u : v; }
  // label of the traversal departing x (x must be an endpoint)
  i64 departing(Vertex x) const { return in_target() == x ? label_out : label_in; }
  i64 arriving(Vertex x) const { return in_target() == x ? label_in : label_out; }

  friend bool operator==(const EulerLabel& a, const EulerLabel& b) = default;
};

using EdgeKey = std::pair<Vertex, Vertex>;
inline EdgeKey edge_key(Vertex a, Vertex b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// ---- offline construction (oracle / test plumbing) ----

// DFS labeling rooted at the smallest vertex id, neighbors visited in
// ascending id order. Throws NotATree.
std::vector<EulerLabel> build_tour(const std::vector<EdgeKey>& tree_edges);

// ---- predicates ----

// e lies strictly inside the subtree cut off by c (away from the root).
inline bool is_separated(const EulerLabel& e, const EulerLabel& c) {
  return e.label_in > c.label_in && e.label_out < c.label_out;
}

// e lies on the path from the root to the vertex whose parent edge is p.
inline bool on_path(const EulerLabel& e, const EulerLabel& p) {
  return e.label_in <= p.label_in && e.label_out >= p.label_out;
}

// Parent edge of s: the incident edge carrying both s's smallest and largest
// labels. Throws IsRoot when s owns the tour start.
EulerLabel parent_edge(Vertex s, const std::vector<EulerLabel>& incident);

// ---- pure transforms over whole-tree label collections ----

// Cyclic shift by d (a label departing the new root): w -> (w - d) mod size.
std::vector<EulerLabel> reroot(const std::vector<EulerLabel>& tree, i64 d);

struct SplitResult {
  std::vector<EulerLabel> root_side;  // keeps the old tree id
  std::vector<EulerLabel> detached;   // rooted at the deleted edge's inner endpoint
  Vertex detached_root = 0;
  i64 root_size = 0, detached_size = 0;
};
SplitResult split(const EulerLabel& deleted, const std::vector<EulerLabel>& tree);

std::vector<EulerLabel> merge(Vertex u, Vertex v, i64 a, i64 b,
                              const std::vector<EulerLabel>& tree_u,
                              const std::vector<EulerLabel>& tree_v);

// ---- validation ----

// Decodes the labels into a walk and checks every invariant: labels form a
// permutation of 0..size-1, consecutive traversals chain, each edge is used
// once per direction, and the walk closes at the recorded root.
std::optional<std::string> validate_tour(const std::vector<EulerLabel>& tree);

// ---- the broadcast-driven replay used by every distributed update ----

// Values tracked per endpoint of a pending forest addition.
struct EndpointState {
  Vertex vertex = 0;
  Vertex tree = 0;
  i64 size = 0;
  i64 outgoing = 0;  // minimum label departing the vertex
  bool isolated = false;
};

struct ForestAdd {
  Vertex u = 0, v = 0;
  EndpointState su, sv;
};

// Applies one merge step to a single label record; returns true if touched.
bool apply_merge(EulerLabel& rec, const ForestAdd& add, i64 new_size);
// Applies one split step; classifies rec against the deleted edge's interval.
bool apply_split(EulerLabel& rec, const EulerLabel& deleted, Vertex detached_root);

// Replays an ordered list of additions over any set of records (labels,
// hints, tracked values all use the same arithmetic). `mine` is the record
// table being maintained; `adds` get their tracked endpoint states updated in
// place as the replay advances. Returns the new-edge records in order.
std::vector<EulerLabel> replay_adds(std::vector<ForestAdd>& adds,
                                    std::vector<EulerLabel*> mine);

// Same for deletions: `dels` carry the deleted edges' current records and are
// updated in place; records equal to a deleted edge must have been removed
// from `mine` by the caller beforehand.
void replay_dels(std::vector<EulerLabel>& dels, std::vector<EulerLabel*> mine);

// ---- distributed k-way update ----

struct UpdateList {
  std::vector<EdgeKey> additions;  // must be current graph edges, acyclic
  std::vector<EdgeKey> deletions;  // must be current forest edges
};

// Broadcasts the three tracked values per update, then every machine replays
// the batch in order; hint repairs for deletions broadcast at the end.
// At most k additions or k deletions per call; O(1) rounds.
void k_way_update(kmst::graphstore::Cluster& cl, const UpdateList& updates);

}  // namespace kmst::eulertour
