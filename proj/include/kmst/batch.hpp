// batch.hpp - up to k updates per batch. Insertions go through the O(k) path
// decomposition of the forest; deletions reduce to a contracted MST instance
// over the bracket components, solved by a pluggable clique solver.

#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <vector>

#include "kmst/graphstore.hpp"

namespace kmst::batch {

using i64 = std::int64_t;
using Vertex = eulertour::Vertex;
using EdgeKey = eulertour::EdgeKey;
using eulertour::EulerLabel;
using graphstore::WeightedEdge;

struct BatchTooLarge : std::runtime_error {
  BatchTooLarge(size_t got, int k)
      : std::runtime_error("batch of " + std::to_string(got) + " exceeds k=" + std::to_string(k)) {}
};
struct UnbalancedBrackets : std::runtime_error {
  UnbalancedBrackets() : std::runtime_error("deleted-edge label intervals cross") {}
};

// ---- path decomposition (insertions) ----

struct PathDecomposition {
  std::set<Vertex> A;  // endpoints of the new edges
  std::set<Vertex> B;  // branching vertices of the shortest-path forest
  std::vector<std::vector<EdgeKey>> paths;
  std::vector<EdgeKey> set0;  // edges on no cycle
};

// Pure form over the whole forest; the distributed insert runs the same label
// arithmetic from broadcast state.
PathDecomposition decompose_paths(const std::vector<EulerLabel>& forest,
                                  const std::vector<WeightedEdge>& new_edges);

// ---- bracket components (deletions) ----

struct ComponentLabeling {
  Vertex tree = 0;
  std::vector<EulerLabel> intervals;  // deleted edges, sorted by label_in
  int comps() const { return (int)intervals.size() + 1; }
  // component of a non-bracket label value (0 = outside every interval)
  int comp_of_label(i64 lab) const;
  // component of vertex x judged from one incident forest edge; boundary
  // labels resolved by traversal direction
  int comp_of(const EulerLabel& rec, Vertex x) const;
};
ComponentLabeling label_components(Vertex tree, std::vector<EulerLabel> deleted);

// ---- contracted solver plug-in ----

struct CandidateEdge {
  i64 ci = 0, cj = 0;  // global component indices, ci < cj
  WeightedEdge e;
};

// Contract: given the distributed contracted graph (machine m holds every
// kept edge touching the components it owns), return the exact MST edge set,
// made globally known, charging only fabric rounds.
class ContractedSolver {
 public:
  virtual ~ContractedSolver() = default;
  virtual std::string name() const = 0;
  virtual std::vector<CandidateEdge> solve(graphstore::Cluster& cl, i64 ncomps,
                                           const std::vector<std::vector<CandidateEdge>>& held) = 0;
};

// Deterministic Boruvka over the component graph; at most
// SOLVER_C1 * log2(ncomps + 1) + SOLVER_C2 rounds.
class BoruvkaCliqueSolver : public ContractedSolver {
 public:
  std::string name() const override { return "boruvka"; }
  std::vector<CandidateEdge> solve(graphstore::Cluster& cl, i64 ncomps,
                                   const std::vector<std::vector<CandidateEdge>>& held) override;
  static constexpr i64 SOLVER_C1 = 16;
  static constexpr i64 SOLVER_C2 = 24;
};

std::unique_ptr<ContractedSolver> make_solver(const std::string& name);

// ---- batched updates ----

struct BatchResult {
  std::vector<WeightedEdge> added, removed;
  i64 rounds = 0;
  i64 reduction_rounds = 0;  // deletions: everything before the solver
  i64 solver_rounds = 0;
};

// Steps 1-8 of the insertion round plan; every phase is padded to its fixed
// synchronous budget, so full batches cost the same rounds for every k and n.
BatchResult batch_insert(graphstore::Cluster& cl, const std::vector<WeightedEdge>& new_edges);

BatchResult batch_delete(graphstore::Cluster& cl, const std::vector<EdgeKey>& deletions,
                         ContractedSolver& solver);

}  // namespace kmst::batch
