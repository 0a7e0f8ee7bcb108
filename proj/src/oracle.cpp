#include "kmst/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace kmst::oracle {

Vertex UnionFind::find(Vertex x) {
  auto it = parent.find(x);
  if (it == parent.end()) {
    parent[x] = x;
    return x;
  }
  if (it->second == x) return x;
  return it->second = find(it->second);
}

bool UnionFind::unite(Vertex a, Vertex b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (b < a) std::swap(a, b);  // smaller id stays the representative
  parent[b] = a;
  return true;
}

std::vector<WeightedEdge> kruskal(std::vector<WeightedEdge> edges) {
  std::sort(edges.begin(), edges.end(),
            [](const WeightedEdge& a, const WeightedEdge& b) { return a.key() < b.key(); });
  UnionFind uf;
  std::vector<WeightedEdge> forest;
  for (auto e : edges) {
    if (uf.unite(e.u, e.v)) {
      e.in_forest = true;
      forest.push_back(e);
    }
  }
  return forest;
}

std::set<EdgeKey> edge_set(const std::vector<WeightedEdge>& es) {
  std::set<EdgeKey> s;
  for (const auto& e : es) s.insert(e.ekey());
  return s;
}

TreeOracle::TreeOracle(const std::vector<EdgeKey>& tree_edges) {
  std::map<Vertex, std::vector<Vertex>> adj;
  for (auto& e : tree_edges) {
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }
  if (adj.empty()) return;
  root = adj.begin()->first;
  parent[root] = -1;
  std::vector<Vertex> stack{root};
  while (!stack.empty()) {
    Vertex x = stack.back();
    stack.pop_back();
    for (Vertex y : adj[x]) {
      if (parent.count(y)) continue;
      parent[y] = x;
      parent_edge[y] = eulertour::edge_key(x, y);
      stack.push_back(y);
    }
  }
  if (parent.size() != adj.size()) throw std::invalid_argument("not a tree");
}

bool TreeOracle::on_root_path(Vertex s, const EdgeKey& e) const {
  for (Vertex x = s; x != root; x = parent.at(x)) {
    if (parent_edge.at(x) == e) return true;
  }
  return false;
}

std::set<Vertex> TreeOracle::cut_side(const EdgeKey& c) const {
  // the child endpoint of c heads the detached subtree
  Vertex child = parent.at(c.second) == c.first ? c.second : c.first;
  std::set<Vertex> side{child};
  bool grew = true;
  while (grew) {
    grew = false;
    for (auto& [v, p] : parent) {
      if (p >= 0 && side.count(p) && !side.count(v) &&
          !(eulertour::edge_key(v, p) == c)) {
        side.insert(v);
        grew = true;
      }
    }
  }
  return side;
}

std::optional<EdgeKey> TreeOracle::parent_of(Vertex s) const {
  auto it = parent_edge.find(s);
  if (it == parent_edge.end()) return std::nullopt;
  return it->second;
}

BatchOutcome brute_force_batch(const std::vector<WeightedEdge>& graph,
                               const std::vector<BatchUpdate>& batch) {
  BatchOutcome out;
  std::map<EdgeKey, WeightedEdge> es;
  for (auto e : graph) es[e.ekey()] = e;
  auto old_forest = edge_set(kruskal(graph));
  for (const auto& up : batch) {
    auto k = eulertour::edge_key(up.u, up.v);
    if (up.insert) {
      if (es.count(k)) throw graphstore::DuplicateEdge(k.first, k.second);
      es[k] = {k.first, k.second, up.w, false};
    } else {
      if (!es.erase(k)) throw graphstore::UnknownEdge(k.first, k.second);
    }
  }
  for (auto& [k, e] : es) out.new_edges.push_back(e);
  out.new_forest = kruskal(out.new_edges);
  auto nf = edge_set(out.new_forest);
  for (auto& k : old_forest)
    if (!nf.count(k)) out.removed.insert(k);
  for (auto& k : nf)
    if (!old_forest.count(k)) out.added.insert(k);
  return out;
}

std::optional<size_t> validate_run(const Transcript& t) {
  std::map<EdgeKey, WeightedEdge> es;
  for (auto e : t.initial) es[e.ekey()] = e;
  for (size_t b = 0; b < t.batches.size(); ++b) {
    for (const auto& up : t.batches[b]) {
      auto k = eulertour::edge_key(up.u, up.v);
      if (up.insert) {
        if (es.count(k)) return b;
        es[k] = {k.first, k.second, up.w, false};
      } else {
        if (!es.erase(k)) return b;
      }
    }
    std::vector<WeightedEdge> cur;
    for (auto& [k, e] : es) cur.push_back(e);
    if (b < t.reported_forests.size() && edge_set(kruskal(cur)) != t.reported_forests[b])
      return b;
  }
  return std::nullopt;
}

}  // namespace kmst::oracle
