#include "kmst/batch.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>

#include "kmst/oracle.hpp"

namespace kmst::batch {

using eulertour::EndpointState;
using graphstore::Cluster;
using graphstore::MachineState;
using graphstore::WeightKey;
using netsim::AggMode;
using netsim::BroadcastReq;
using netsim::Keyed;
using netsim::MachineId;
using netsim::Tag;
using netsim::Word;

namespace {

inline i64 pos_mod(i64 x, i64 m) { return ((x % m) + m) % m; }
inline i64 ceil_div(i64 a, i64 b) { return (a + b - 1) / b; }
inline i64 sched_budget(i64 max_units, i64 k) { return 2 * ceil_div(std::max<i64>(max_units, 1), k) + 3; }

// fixed synchronous budgets: a phase may finish early, never late
struct PhaseGuard {
  netsim::Fabric& f;
  i64 begin, budget;
  PhaseGuard(netsim::Fabric& f_, i64 b) : f(f_), begin(f_.rounds()), budget(b) {}
  void close() {
    i64 used = f.rounds() - begin;
    if (used > budget) throw std::logic_error("phase exceeded its round budget");
    f.idle_rounds(budget - used);
  }
};

std::pair<i64, i64> shifted_pair(const EulerLabel& rec, i64 d) {
  i64 a = pos_mod(rec.label_in - d, rec.tour_size);
  i64 b = pos_mod(rec.label_out - d, rec.tour_size);
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

i64 min_departing(Vertex x, const std::vector<const EulerLabel*>& incident) {
  i64 best = -1;
  for (auto* rec : incident) {
    i64 dep = rec->departing(x);
    if (best < 0 || dep < best) best = dep;
  }
  return best;
}

// parent edge of a vertex whose incident list this is, with the tour
// virtually rerooted by shift d
template <typename RecRange>
const EulerLabel* parent_under(Vertex /*y*/, i64 d, const RecRange& incident) {
  const EulerLabel* best = nullptr;
  i64 best_in = 0;
  for (const EulerLabel* rec : incident) {
    i64 lo = shifted_pair(*rec, d).first;
    if (!best || lo < best_in) {
      best = rec;
      best_in = lo;
    }
  }
  return best;
}

// ---- shortest-path membership / path systems ----

// A-member data for one tree holding at least two of them.
struct MemberSet {
  Vertex tree = 0;
  i64 size = 0;
  std::map<Vertex, i64> a_shift;          // member -> broadcast outgoing label
  std::set<Vertex> b_members;
  std::map<EdgeKey, EulerLabel> edges;    // member-incident shortest-path edges
};

std::vector<const EulerLabel*> incident_of(const std::map<EdgeKey, EulerLabel>& edges, Vertex y) {
  std::vector<const EulerLabel*> out;
  for (auto& [k_, rec] : edges)
    if (rec.u == y || rec.v == y) out.push_back(&rec);
  return out;
}

// is e on the shortest path between some two A-members of its tree?
bool on_some_path(const EulerLabel& e, const MemberSet& ms) {
  for (auto& [x, dx] : ms.a_shift) {
    auto se = shifted_pair(e, dx);
    for (auto& [y, dy] : ms.a_shift) {
      if (x == y) continue;
      auto py = parent_under(y, dx, incident_of(ms.edges, y));
      if (!py) continue;
      auto sp = shifted_pair(*py, dx);
      if (se.first <= sp.first && se.second >= sp.second) return true;
    }
  }
  return false;
}

struct PathSystem {
  Vertex tree = 0;
  i64 size = 0;
  Vertex rho = 0;
  i64 d_rho = 0;
  std::vector<Vertex> order;                      // path children, tour order
  std::map<Vertex, std::pair<i64, i64>> ival;     // member -> parent interval
  std::map<Vertex, Vertex> parent;                // member -> parent member
};

PathSystem build_path_system(const MemberSet& ms) {
  PathSystem ps;
  ps.tree = ms.tree;
  ps.size = ms.size;
  ps.rho = ms.a_shift.begin()->first;  // smallest A-member anchors the reroot
  ps.d_rho = ms.a_shift.at(ps.rho);
  std::set<Vertex> members;
  for (auto& [x, d] : ms.a_shift) members.insert(x);
  for (Vertex b : ms.b_members) members.insert(b);
  for (Vertex s : members) {
    if (s == ps.rho) continue;
    auto p = parent_under(s, ps.d_rho, incident_of(ms.edges, s));
    assert(p != nullptr);
    ps.ival[s] = shifted_pair(*p, ps.d_rho);
  }
  for (auto& [s, is] : ps.ival) {
    Vertex best = ps.rho;
    i64 best_in = -1;
    for (auto& [t, it] : ps.ival) {
      if (t == s) continue;
      if (it.first <= is.first && it.second >= is.second && it.first > best_in) {
        best = t;
        best_in = it.first;
      }
    }
    ps.parent[s] = best;
  }
  for (auto& [s, is] : ps.ival) ps.order.push_back(s);
  std::sort(ps.order.begin(), ps.order.end(),
            [&](Vertex a, Vertex b) { return ps.ival.at(a).first < ps.ival.at(b).first; });
  return ps;
}

bool edge_in_path(const PathSystem& ps, const EulerLabel& e, Vertex child) {
  auto se = shifted_pair(e, ps.d_rho);
  auto is = ps.ival.at(child);
  if (!(se.first <= is.first && se.second >= is.second)) return false;
  Vertex par = ps.parent.at(child);
  if (par == ps.rho) return true;
  auto ip = ps.ival.at(par);
  return !(se.first <= ip.first && se.second >= ip.second);
}

// assemble MemberSets omnisciently from a full forest (the pure route used
// by decompose_paths); the distributed insert builds the same sets from
// broadcast words
std::map<Vertex, MemberSet> member_sets_from_forest(const std::vector<EulerLabel>& forest,
                                                    const std::vector<WeightedEdge>& new_edges) {
  std::map<Vertex, std::vector<EulerLabel>> by_tree;
  for (auto& rec : forest) by_tree[rec.tree].push_back(rec);
  std::set<Vertex> a;
  for (auto& e : new_edges) {
    a.insert(e.u);
    a.insert(e.v);
  }
  std::map<Vertex, MemberSet> sets;
  for (auto& [tree, recs] : by_tree) {
    std::map<Vertex, std::vector<const EulerLabel*>> inc;
    for (auto& rec : recs) {
      inc[rec.u].push_back(&rec);
      inc[rec.v].push_back(&rec);
    }
    MemberSet ms;
    ms.tree = tree;
    ms.size = recs.front().tour_size;
    for (Vertex x : a)
      if (inc.count(x)) ms.a_shift[x] = min_departing(x, inc[x]);
    if (ms.a_shift.size() < 2) continue;
    // full-knowledge shortcut: member-incident edges from the whole tree
    MemberSet probe = ms;
    for (auto& rec : recs) probe.edges[eulertour::edge_key(rec.u, rec.v)] = rec;
    for (auto& rec : recs) {
      if (!on_some_path(rec, probe)) continue;
      for (Vertex end : {rec.u, rec.v}) {
        if (ms.a_shift.count(end)) ms.edges[eulertour::edge_key(rec.u, rec.v)] = rec;
      }
    }
    // branching vertices: degree >= 3 in the shortest-path forest
    std::map<Vertex, int> deg;
    for (auto& rec : recs)
      if (on_some_path(rec, probe)) {
        ++deg[rec.u];
        ++deg[rec.v];
      }
    for (auto& [v, d] : deg)
      if (d >= 3 && !ms.a_shift.count(v)) ms.b_members.insert(v);
    for (auto& rec : recs) {
      if (!on_some_path(rec, probe)) continue;
      for (Vertex end : {rec.u, rec.v})
        if (ms.b_members.count(end)) ms.edges[eulertour::edge_key(rec.u, rec.v)] = rec;
    }
    sets[tree] = ms;
  }
  return sets;
}

}  // namespace

PathDecomposition decompose_paths(const std::vector<EulerLabel>& forest,
                                  const std::vector<WeightedEdge>& new_edges) {
  PathDecomposition pd;
  for (auto& e : new_edges) {
    pd.A.insert(e.u);
    pd.A.insert(e.v);
  }
  auto sets = member_sets_from_forest(forest, new_edges);
  std::map<Vertex, PathSystem> systems;
  for (auto& [tree, ms] : sets) {
    systems[tree] = build_path_system(ms);
    for (Vertex b : ms.b_members) pd.B.insert(b);
  }
  std::map<Vertex, std::map<Vertex, std::vector<EdgeKey>>> path_edges;  // tree -> child -> edges
  for (auto& rec : forest) {
    auto it = systems.find(rec.tree);
    bool placed = false;
    if (it != systems.end()) {
      for (Vertex child : it->second.order) {
        if (edge_in_path(it->second, rec, child)) {
          if (placed) throw std::logic_error("edge claimed by two paths");
          path_edges[rec.tree][child].push_back(eulertour::edge_key(rec.u, rec.v));
          placed = true;
        }
      }
    }
    if (!placed) pd.set0.push_back(eulertour::edge_key(rec.u, rec.v));
  }
  for (auto& [tree, sys] : systems)
    for (Vertex child : sys.order)
      if (path_edges.count(tree) && path_edges[tree].count(child))
        pd.paths.push_back(path_edges[tree][child]);
  return pd;
}

int ComponentLabeling::comp_of_label(i64 lab) const {
  int best = 0;
  i64 best_in = -1;
  for (size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].label_in < lab && lab < intervals[i].label_out &&
        intervals[i].label_in > best_in) {
      best = (int)i + 1;
      best_in = intervals[i].label_in;
    }
  }
  return best;
}

int ComponentLabeling::comp_of(const EulerLabel& rec, Vertex x) const {
  for (size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].u == rec.u && intervals[i].v == rec.v) {
      // boundary: the chosen edge is itself deleted; direction decides
      if (rec.in_target() == x) return (int)i + 1;  // inner side
      // outer side: the component of the interval's surroundings
      int best = 0;
      i64 best_in = -1;
      for (size_t j = 0; j < intervals.size(); ++j) {
        if (j == i) continue;
        if (intervals[j].label_in < rec.label_in && rec.label_out < intervals[j].label_out &&
            intervals[j].label_in > best_in) {
          best = (int)j + 1;
          best_in = intervals[j].label_in;
        }
      }
      return best;
    }
  }
  return comp_of_label(rec.label_in);
}

ComponentLabeling label_components(Vertex tree, std::vector<EulerLabel> deleted) {
  ComponentLabeling cl;
  cl.tree = tree;
  std::sort(deleted.begin(), deleted.end(),
            [](const EulerLabel& a, const EulerLabel& b) { return a.label_in < b.label_in; });
  // intervals of tree edges nest or are disjoint; anything else is corruption
  std::vector<i64> stack;
  for (auto& d : deleted) {
    while (!stack.empty() && stack.back() < d.label_in) stack.pop_back();
    if (!stack.empty() && stack.back() < d.label_out) throw UnbalancedBrackets();
    stack.push_back(d.label_out);
  }
  cl.intervals = std::move(deleted);
  return cl;
}

// ---- batch insert ----

BatchResult batch_insert(Cluster& cl, const std::vector<WeightedEdge>& new_edges) {
  const int k = cl.k();
  const i64 s = (i64)new_edges.size();
  if (s > k) throw BatchTooLarge(new_edges.size(), k);
  BatchResult res;
  if (s == 0) return res;
  i64 start = cl.fabric.rounds();

  for (auto& e : new_edges) cl.ingest_insert(e.u, e.v, e.w);

  // 1: every new edge becomes global knowledge
  {
    PhaseGuard pg(cl.fabric, sched_budget(s, k));
    std::vector<BroadcastReq> reqs;
    for (size_t j = 0; j < new_edges.size(); ++j) {
      auto key = eulertour::edge_key(new_edges[j].u, new_edges[j].v);
      Word w;
      w.tag = Tag::NewEdge;
      w.f = {(i64)j, key.first, key.second, new_edges[j].w};
      reqs.push_back({cl.host(key.first), w});
    }
    cl.broadcast_set(reqs);
    pg.close();
  }
  std::set<Vertex> a_set;
  for (auto& e : new_edges) {
    a_set.insert(e.u);
    a_set.insert(e.v);
  }

  // 2: A-members announce tree, size and an outgoing label (and refresh the
  //    hint slots their neighbors keep)
  std::map<Vertex, EndpointState> a_state;
  {
    PhaseGuard pg(cl.fabric, sched_budget(2 * s, k));
    std::vector<BroadcastReq> reqs;
    i64 seq = 0;
    for (Vertex x : a_set) reqs.push_back({cl.host(x), graphstore::endpoint_word(cl, seq++, x)});
    auto words = cl.broadcast_set(reqs);
    for (auto& w : words) {
      graphstore::refresh_hint_from_endpoint(cl, w);
      a_state[w.f[1]] = graphstore::decode_endpoint_word(w);
    }
    pg.close();
  }

  // group A by tree; trees with a single member carry no paths
  std::map<Vertex, MemberSet> sets;
  for (auto& [x, st] : a_state) {
    if (st.isolated) continue;
    auto& ms = sets[st.tree];
    ms.tree = st.tree;
    ms.size = st.size;
    ms.a_shift[x] = st.outgoing;
  }
  for (auto it = sets.begin(); it != sets.end();) {
    if (it->second.a_shift.size() < 2)
      it = sets.erase(it);
    else
      ++it;
  }

  // 3: A-members detect their shortest-path edges by simulating the reroot
  //    to every other member, and broadcast them
  {
    PhaseGuard pg(cl.fabric, sched_budget(8 * s + 2, k));
    std::map<EdgeKey, std::pair<MachineId, Word>> reqs;  // dedupe by edge
    for (auto& [tree, ms] : sets) {
      for (auto& [x, dx] : ms.a_shift) {
        MachineId hx = cl.host(x);
        auto inc = cl.machines[(size_t)hx].incident_labels(x);
        for (auto& [y, dy] : ms.a_shift) {
          if (x == y) continue;
          auto p = parent_under(x, dy, inc);
          assert(p != nullptr);
          Word w;
          w.tag = Tag::EdgeRecord;
          w.f = {x, p->u, p->v, p->label_in, p->label_out, p->in_toward_v ? 1 : 0,
                 p->tour_size, p->tree};
          reqs[eulertour::edge_key(p->u, p->v)] = {hx, w};
        }
      }
    }
    std::vector<BroadcastReq> flat;
    for (auto& [key, rw] : reqs) flat.push_back({rw.first, rw.second});
    auto words = cl.broadcast_set(flat);
    for (auto& w : words) {
      EulerLabel rec{w.f[1], w.f[2], w.f[3], w.f[4], w.f[5] != 0, w.f[6], w.f[7]};
      auto it = sets.find(rec.tree);
      if (it != sets.end()) it->second.edges[eulertour::edge_key(rec.u, rec.v)] = rec;
    }
    pg.close();
  }

  // 4: every vertex checks whether it branches the shortest-path forest
  //    (local work), 5: branching vertices broadcast their path edges
  {
    PhaseGuard pg(cl.fabric, sched_budget(8 * s + 2, k));
    std::map<EdgeKey, std::pair<MachineId, Word>> reqs;
    for (auto& m : cl.machines) {
      for (Vertex v : m.hosted) {
        if (a_set.count(v)) continue;
        auto inc = m.incident_labels(v);
        if (inc.size() < 3) continue;
        auto it = sets.find(inc.front()->tree);
        if (it == sets.end()) continue;
        std::vector<const EulerLabel*> mine;
        for (auto* rec : inc)
          if (on_some_path(*rec, it->second)) mine.push_back(rec);
        if ((i64)mine.size() < 3) continue;
        for (auto* rec : mine) {
          Word w;
          w.tag = Tag::EdgeRecord;
          w.f = {v, rec->u, rec->v, rec->label_in, rec->label_out, rec->in_toward_v ? 1 : 0,
                 rec->tour_size, rec->tree};
          reqs[eulertour::edge_key(rec->u, rec->v)] = {m.id, w};
        }
      }
    }
    std::vector<BroadcastReq> flat;
    for (auto& [key, rw] : reqs) flat.push_back({rw.first, rw.second});
    auto words = cl.broadcast_set(flat);
    for (auto& w : words) {
      EulerLabel rec{w.f[1], w.f[2], w.f[3], w.f[4], w.f[5] != 0, w.f[6], w.f[7]};
      auto it = sets.find(rec.tree);
      if (it != sets.end()) {
        it->second.edges[eulertour::edge_key(rec.u, rec.v)] = rec;
        it->second.b_members.insert(w.f[0]);
      }
    }
    pg.close();
  }

  // 6: identical tree pictures everywhere; one max query per path
  std::vector<PathSystem> systems;
  std::vector<std::pair<size_t, Vertex>> path_index;  // (system idx, child)
  for (auto& [tree, ms] : sets) {
    systems.push_back(build_path_system(ms));
    for (Vertex child : systems.back().order) path_index.push_back({systems.size() - 1, child});
  }
  if ((i64)path_index.size() > 4 * s + 1) throw std::logic_error("path count over bound");
  std::vector<std::optional<Keyed>> winners(path_index.size());
  {
    PhaseGuard pg(cl.fabric, ceil_div(4 * s + 1, k));
    std::vector<netsim::ExtremeQuery> queries(path_index.size());
    for (auto& q : queries) {
      q.mode = AggMode::Max;
      q.contrib.assign((size_t)k, std::nullopt);
    }
    for (auto& m : cl.machines) {
      for (auto& [ek, rec] : m.labels) {
        for (size_t q = 0; q < path_index.size(); ++q) {
          const auto& ps = systems[path_index[q].first];
          if (rec.tree != ps.tree) continue;
          if (!edge_in_path(ps, rec, path_index[q].second)) continue;
          auto eit = m.edges.find(ek);
          assert(eit != m.edges.end());
          Keyed cand;
          cand.key = eit->second.key().as_array();
          cand.value.tag = Tag::Candidate;
          cand.value.f = {(i64)q, eit->second.u, eit->second.v, eit->second.w};
          auto& slot = queries[q].contrib[(size_t)m.id];
          if (!slot || netsim::keyed_better(cand, *slot, AggMode::Max)) slot = cand;
        }
      }
      m.note_scratch((i64)path_index.size());
    }
    winners = cl.fabric.batched_extremes(queries);
    pg.close();
  }

  // 7: path maxima become global knowledge
  std::vector<WeightedEdge> maxima(path_index.size());
  {
    PhaseGuard pg(cl.fabric, sched_budget(4 * s + 1, k));
    std::vector<BroadcastReq> reqs;
    for (size_t q = 0; q < winners.size(); ++q) {
      assert(winners[q].has_value());  // every path holds at least one edge
      reqs.push_back({netsim::Fabric::extreme_relay((int)q, k), winners[q]->value});
    }
    auto words = cl.broadcast_set(reqs);
    for (auto& w : words) maxima[(size_t)w.f[0]] = {w.f[1], w.f[2], w.f[3], true};
    pg.close();
  }

  // every machine solves the contracted instance by itself
  struct Item {
    WeightKey key;
    bool is_new;
    size_t idx;
    Vertex a, b;
  };
  std::vector<Item> items;
  for (size_t q = 0; q < path_index.size(); ++q) {
    const auto& ps = systems[path_index[q].first];
    Vertex child = path_index[q].second;
    items.push_back({maxima[q].key(), false, q, child, ps.parent.at(child)});
  }
  for (size_t j = 0; j < new_edges.size(); ++j)
    items.push_back({new_edges[j].key(), true, j, new_edges[j].u, new_edges[j].v});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.key < b.key; });
  oracle::UnionFind uf;
  std::vector<WeightedEdge> removals, additions;
  for (auto& it : items) {
    if (uf.unite(it.a, it.b)) {
      if (it.is_new) additions.push_back(new_edges[it.idx]);
    } else if (!it.is_new) {
      removals.push_back(maxima[it.idx]);
    }
  }
  auto by_key = [](const WeightedEdge& a, const WeightedEdge& b) { return a.ekey() < b.ekey(); };
  std::sort(removals.begin(), removals.end(), by_key);
  std::sort(additions.begin(), additions.end(), by_key);

  // 8: tours updated, removals then additions
  {
    PhaseGuard pg(cl.fabric, sched_budget(s, k) + sched_budget(2 * s, k));
    if (!removals.empty()) {
      eulertour::UpdateList ul;
      for (auto& e : removals) ul.deletions.push_back(e.ekey());
      eulertour::k_way_update(cl, ul);
    }
    pg.close();
  }
  {
    PhaseGuard pg(cl.fabric, sched_budget(2 * s, k));
    if (!additions.empty()) {
      eulertour::UpdateList ul;
      for (auto& e : additions) ul.additions.push_back(e.ekey());
      eulertour::k_way_update(cl, ul);
    }
    pg.close();
  }

  res.added = additions;
  res.removed = removals;
  res.rounds = cl.fabric.rounds() - start;
  return res;
}

// ---- batch delete ----

namespace {

struct DeleteView {
  std::vector<Vertex> trees;                    // affected trees, ascending
  std::map<Vertex, ComponentLabeling> labeling; // per tree
  std::map<Vertex, i64> comp_base;              // tree -> first global comp id
  i64 ncomps = 0;
  // global component of vertex x judged from rec; -1 when unaffected tree
  i64 comp_of(const EulerLabel& rec, Vertex x) const {
    auto it = labeling.find(rec.tree);
    if (it == labeling.end()) return -1;
    return comp_base.at(rec.tree) + it->second.comp_of(rec, x);
  }
};

DeleteView build_delete_view(const std::vector<EulerLabel>& dels) {
  DeleteView v;
  std::map<Vertex, std::vector<EulerLabel>> by_tree;
  for (auto& d : dels) by_tree[d.tree].push_back(d);
  for (auto& [tree, recs] : by_tree) {
    v.trees.push_back(tree);
    v.labeling.emplace(tree, label_components(tree, recs));
  }
  for (Vertex t : v.trees) {
    v.comp_base[t] = v.ncomps;
    v.ncomps += v.labeling.at(t).comps();
  }
  return v;
}

}  // namespace

std::vector<CandidateEdge> BoruvkaCliqueSolver::solve(
    Cluster& cl, i64 ncomps, const std::vector<std::vector<CandidateEdge>>& held) {
  const int k = cl.k();
  i64 start = cl.fabric.rounds();
  oracle::UnionFind uf;
  std::vector<i64> active;
  for (i64 c = 0; c < ncomps; ++c) active.push_back(c);
  std::map<EdgeKey, CandidateEdge> chosen;

  while (true) {
    std::vector<netsim::ExtremeQuery> queries(active.size());
    std::map<i64, size_t> qindex;
    for (size_t q = 0; q < active.size(); ++q) {
      queries[q].mode = AggMode::Min;
      queries[q].contrib.assign((size_t)k, std::nullopt);
      qindex[active[q]] = q;
    }
    for (int m = 0; m < k; ++m) {
      for (const auto& ce : held[(size_t)m]) {
        i64 ri = uf.find(ce.ci), rj = uf.find(ce.cj);
        if (ri == rj) continue;
        for (i64 rep : {ri, rj}) {
          Keyed cand;
          cand.key = ce.e.key().as_array();
          cand.value.tag = Tag::Candidate;
          cand.value.f = {ce.ci, ce.cj, ce.e.w, ce.e.u, ce.e.v};
          auto& slot = queries[qindex.at(rep)].contrib[(size_t)m];
          if (!slot || netsim::keyed_better(cand, *slot, AggMode::Min)) slot = cand;
        }
      }
    }
    auto winners = cl.fabric.batched_extremes(queries);
    std::vector<BroadcastReq> reqs;
    for (size_t q = 0; q < winners.size(); ++q) {
      if (!winners[q]) continue;
      reqs.push_back({netsim::Fabric::extreme_relay((int)q, k), winners[q]->value});
    }
    if (reqs.empty()) break;
    auto words = cl.broadcast_set(reqs);
    // identical merge application everywhere, ordered by weight key; the
    // distinct-weight winner set is a forest, duplicates collapse by key
    std::vector<CandidateEdge> batch_edges;
    for (auto& w : words)
      batch_edges.push_back({w.f[0], w.f[1], {w.f[3], w.f[4], w.f[2], false}});
    std::sort(batch_edges.begin(), batch_edges.end(),
              [](const CandidateEdge& a, const CandidateEdge& b) { return a.e.key() < b.e.key(); });
    for (auto& ce : batch_edges)
      if (uf.unite(ce.ci, ce.cj)) chosen[ce.e.ekey()] = ce;
    std::set<i64> next;
    for (i64 c : active) next.insert(uf.find(c));
    active.assign(next.begin(), next.end());
  }

  i64 used = cl.fabric.rounds() - start;
  if (used > SOLVER_C1 * (i64)std::ceil(std::log2((double)(ncomps + 1))) + SOLVER_C2)
    throw std::logic_error("solver exceeded its round bound");
  std::vector<CandidateEdge> out;
  for (auto& [key, ce] : chosen) out.push_back(ce);
  return out;
}

std::unique_ptr<ContractedSolver> make_solver(const std::string& name) {
  if (name == "boruvka") return std::make_unique<BoruvkaCliqueSolver>();
  throw std::invalid_argument("unknown solver: " + name);
}

BatchResult batch_delete(Cluster& cl, const std::vector<EdgeKey>& deletions,
                         ContractedSolver& solver) {
  const int k = cl.k();
  if ((i64)deletions.size() > k) throw BatchTooLarge(deletions.size(), k);
  BatchResult res;
  if (deletions.empty()) return res;
  i64 start = cl.fabric.rounds();

  // split by forest membership; non-forest deletions are purely local
  std::vector<EdgeKey> fdels;
  {
    std::set<EdgeKey> seen;
    for (auto& d : deletions) {
      auto key = eulertour::edge_key(d.first, d.second);
      if (!seen.insert(key).second) throw graphstore::UnknownEdge(key.first, key.second);
      auto& st = cl.machines[(size_t)cl.host(key.first)];
      auto it = st.edges.find(key);
      if (it == st.edges.end()) throw graphstore::UnknownEdge(key.first, key.second);
      if (it->second.in_forest) {
        res.removed.push_back(it->second);
        fdels.push_back(key);
      } else {
        cl.ingest_delete(key.first, key.second);
      }
    }
  }
  std::sort(fdels.begin(), fdels.end());
  if (fdels.empty()) {
    res.rounds = cl.fabric.rounds() - start;
    return res;
  }
  const i64 s = (i64)deletions.size();

  // 1: deleted records broadcast; every machine parses the brackets
  std::vector<EulerLabel> dels;
  {
    PhaseGuard pg(cl.fabric, sched_budget(s, k));
    std::vector<BroadcastReq> reqs;
    for (size_t j = 0; j < fdels.size(); ++j) {
      MachineId m = cl.host(fdels[j].first);
      const auto& rec = cl.machines[(size_t)m].labels.at(fdels[j]);
      Word w;
      w.tag = Tag::EdgeRecord;
      w.f = {(i64)j, rec.u, rec.v, rec.label_in, rec.label_out, rec.in_toward_v ? 1 : 0,
             rec.tour_size, rec.tree};
      reqs.push_back({m, w});
    }
    auto words = cl.broadcast_set(reqs);
    dels.resize(fdels.size());
    for (auto& w : words)
      dels[(size_t)w.f[0]] = {w.f[1], w.f[2], w.f[3], w.f[4], w.f[5] != 0, w.f[6], w.f[7]};
    pg.close();
  }
  DeleteView view = build_delete_view(dels);

  // 2+3: classify candidate endpoints, then prune local cycles so each
  // machine keeps at most #components-1 candidates
  std::vector<std::vector<CandidateEdge>> kept((size_t)k);
  for (auto& m : cl.machines) {
    std::vector<CandidateEdge> cands;
    for (auto& [ek, e] : m.edges) {
      if (e.in_forest) continue;
      auto side_of = [&](Vertex x) -> i64 {
        if (m.hosts(x)) {
          auto rec = m.min_incident_label(x);
          return rec ? view.comp_of(*rec, x) : -1;
        }
        auto h = m.hints.find(x);
        if (h == m.hints.end() || h->second.isolated) return -1;
        return view.comp_of(h->second.rec, x);
      };
      i64 a = side_of(e.u), b = side_of(e.v);
      if (a < 0 || b < 0 || a == b) continue;
      CandidateEdge ce;
      ce.ci = std::min(a, b);
      ce.cj = std::max(a, b);
      ce.e = e;
      cands.push_back(ce);
    }
    // cycle deletion == local MSF over components
    std::sort(cands.begin(), cands.end(),
              [](const CandidateEdge& a, const CandidateEdge& b) { return a.e.key() < b.e.key(); });
    oracle::UnionFind uf;
    for (auto& ce : cands)
      if (uf.unite(ce.ci, ce.cj)) kept[(size_t)m.id].push_back(ce);
    if ((i64)kept[(size_t)m.id].size() > k)
      throw std::logic_error("candidate pruning exceeded k");
    m.note_scratch((i64)cands.size());
  }

  // 4: global sort by (comp_i, comp_j, weight key); the key carries the whole
  // candidate, so holders decode edges straight from their ranges
  auto key_edge = [](const std::array<i64, 5>& key) {
    return CandidateEdge{key[0], key[1], {key[3], key[4], key[2], false}};
  };
  std::vector<std::vector<netsim::SortKey>> skeys((size_t)k);
  for (int m = 0; m < k; ++m) {
    for (size_t i = 0; i < kept[(size_t)m].size(); ++i) {
      const auto& ce = kept[(size_t)m][i];
      netsim::SortKey sk;
      sk.key = {ce.ci, ce.cj, ce.e.w, ce.e.u, ce.e.v};
      sk.src = m;
      sk.seq = (i64)i;
      skeys[(size_t)m].push_back(sk);
    }
  }
  netsim::SortResult sorted;
  {
    PhaseGuard pg(cl.fabric, 6);
    sorted = cl.fabric.lenzen_sort(skeys);
    pg.close();
  }

  // 5+6: smallest edge per component pair; one word to the index neighbor
  // clears boundary duplicates
  std::vector<std::vector<CandidateEdge>> deduped((size_t)k);
  {
    PhaseGuard pg(cl.fabric, 1);
    std::vector<netsim::Fabric::Outbox> out((size_t)k);
    for (int m = 0; m + 1 < k; ++m) {
      if (sorted.held[(size_t)m].empty()) continue;
      Word w;
      w.tag = Tag::Candidate;
      const auto& last = sorted.held[(size_t)m].back();
      w.f = {last.key[0], last.key[1]};
      out[(size_t)m].push_back({m + 1, w});
    }
    cl.fabric.step_round(out);
    for (int m = 0; m < k; ++m) {
      std::pair<i64, i64> left{-1, -1};
      if (m > 0 && !sorted.held[(size_t)m - 1].empty()) {
        const auto& last = sorted.held[(size_t)m - 1].back();
        left = {last.key[0], last.key[1]};
      }
      std::pair<i64, i64> prev = left;
      for (const auto& sk : sorted.held[(size_t)m]) {
        std::pair<i64, i64> pair{sk.key[0], sk.key[1]};
        if (pair == prev) continue;  // someone to the left holds the minimum
        prev = pair;
        deduped[(size_t)m].push_back(key_edge(sk.key));
      }
    }
    pg.close();
  }

  // 7: route every kept edge to the machines owning its two components
  std::vector<std::vector<CandidateEdge>> held((size_t)k);
  {
    PhaseGuard pg(cl.fabric, 12);
    struct Pending {
      MachineId src, dst;
      CandidateEdge ce;
    };
    std::vector<Pending> pend;
    for (int m = 0; m < k; ++m) {
      for (const auto& ce : deduped[(size_t)m]) {
        std::set<MachineId> dsts{(MachineId)(ce.ci % k), (MachineId)(ce.cj % k)};
        for (MachineId d : dsts) pend.push_back({(MachineId)m, d, ce});
      }
    }
    std::sort(pend.begin(), pend.end(), [](const Pending& a, const Pending& b) {
      return std::tie(a.dst, a.ce.ci, a.ce.cj, a.ce.e.w, a.ce.e.u) <
             std::tie(b.dst, b.ce.ci, b.ce.cj, b.ce.e.w, b.ce.e.u);
    });
    int waves = 0;
    std::vector<char> done(pend.size(), 0);
    size_t remaining = pend.size();
    while (remaining > 0) {
      if (++waves > 6) throw std::logic_error("routing exceeded its wave budget");
      std::vector<i64> ns((size_t)k, 0), nd((size_t)k, 0);
      std::vector<netsim::RouteMsg> msgs;
      std::vector<size_t> taken;
      for (size_t i = 0; i < pend.size(); ++i) {
        if (done[i]) continue;
        if (ns[(size_t)pend[i].src] >= k || nd[(size_t)pend[i].dst] >= k) continue;
        ++ns[(size_t)pend[i].src];
        ++nd[(size_t)pend[i].dst];
        netsim::RouteMsg rm;
        rm.src = pend[i].src;
        rm.dst = pend[i].dst;
        rm.w.tag = Tag::Candidate;
        rm.w.f = {pend[i].ce.ci, pend[i].ce.cj, pend[i].ce.e.w, pend[i].ce.e.u, pend[i].ce.e.v};
        msgs.push_back(rm);
        taken.push_back(i);
      }
      i64 before = cl.fabric.rounds();
      cl.fabric.lenzen_route(msgs);
      cl.fabric.idle_rounds(2 - (cl.fabric.rounds() - before));  // fixed 2 per wave
      for (size_t i : taken) {
        done[i] = 1;
        --remaining;
        held[(size_t)pend[i].dst].push_back(pend[i].ce);
      }
    }
    for (auto& m : cl.machines) m.note_scratch((i64)held[(size_t)m.id].size() * 5);
    pg.close();
  }
  // dedupe per machine (an edge whose two components share a machine)
  for (auto& h : held) {
    std::sort(h.begin(), h.end(), [](const CandidateEdge& a, const CandidateEdge& b) {
      return std::tie(a.ci, a.cj, a.e.w, a.e.u, a.e.v) < std::tie(b.ci, b.cj, b.e.w, b.e.u, b.e.v);
    });
    h.erase(std::unique(h.begin(), h.end(),
                        [](const CandidateEdge& a, const CandidateEdge& b) {
                          return a.ci == b.ci && a.cj == b.cj && a.e.ekey() == b.e.ekey();
                        }),
            h.end());
  }
  res.reduction_rounds = cl.fabric.rounds() - start;

  // 8: the pluggable clique MST on the contracted graph
  i64 solver_start = cl.fabric.rounds();
  auto chosen = solver.solve(cl, view.ncomps, held);
  res.solver_rounds = cl.fabric.rounds() - solver_start;

  // apply: splits first, then the winning reconnections
  {
    PhaseGuard pg(cl.fabric, sched_budget(s, k) + sched_budget(2 * s, k));
    eulertour::UpdateList ul;
    ul.deletions = fdels;
    eulertour::k_way_update(cl, ul);
    pg.close();
  }
  for (auto& d : fdels) cl.ingest_delete(d.first, d.second);
  std::vector<WeightedEdge> adds;
  for (auto& ce : chosen) adds.push_back(ce.e);
  std::sort(adds.begin(), adds.end(),
            [](const WeightedEdge& a, const WeightedEdge& b) { return a.ekey() < b.ekey(); });
  {
    PhaseGuard pg(cl.fabric, 2 * sched_budget(2 * s, k));
    for (size_t off = 0; off < adds.size(); off += (size_t)k) {
      eulertour::UpdateList ul;
      for (size_t j = off; j < std::min(off + (size_t)k, adds.size()); ++j)
        ul.additions.push_back(adds[j].ekey());
      eulertour::k_way_update(cl, ul);
    }
    pg.close();
  }
  for (auto& e : adds) {
    e.in_forest = true;
    res.added.push_back(e);
  }
  res.rounds = cl.fabric.rounds() - start;
  return res;
}

}  // namespace kmst::batch
