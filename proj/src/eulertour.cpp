#include "kmst/eulertour.hpp"

#include <algorithm>
#include <cassert>
#include <set>

#include "kmst/graphstore.hpp"

namespace kmst::eulertour {

namespace {

inline i64 pos_mod(i64 x, i64 m) { return ((x % m) + m) % m; }

// reassign the two traversal values of a record, keeping direction attached
// to its traversal when the order flips
void set_traversals(EulerLabel& rec, i64 new_in_value, i64 new_out_value) {
  if (new_in_value < new_out_value) {
    rec.label_in = new_in_value;
    rec.label_out = new_out_value;
  } else {
    std::swap(new_in_value, new_out_value);
    rec.label_in = new_in_value;
    rec.label_out = new_out_value;
    rec.in_toward_v = !rec.in_toward_v;
  }
}

}  // namespace

std::vector<EulerLabel> build_tour(const std::vector<EdgeKey>& tree_edges) {
  if (tree_edges.empty()) return {};
  std::map<Vertex, std::vector<Vertex>> adj;
  std::set<EdgeKey> keys;
  for (auto& e : tree_edges) {
    if (e.first == e.second || !keys.insert(edge_key(e.first, e.second)).second)
      throw NotATree();
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }
  if (adj.size() != tree_edges.size() + 1) throw NotATree();
  for (auto& [v, ns] : adj) std::sort(ns.begin(), ns.end());

  Vertex root = adj.begin()->first;
  std::map<EdgeKey, EulerLabel> recs;
  i64 time = 0;
  // iterative DFS; each frame tracks the next neighbor index
  std::vector<std::pair<Vertex, size_t>> stack{{root, 0}};
  std::map<Vertex, Vertex> parent{{root, -1}};
  while (!stack.empty()) {
    auto& [x, idx] = stack.back();
    if (idx >= adj[x].size()) {
      stack.pop_back();
      if (!stack.empty()) {
        Vertex p = stack.back().first;
        auto k_ = edge_key(p, x);
        recs[k_].label_out = time++;  // ascend
      }
      continue;
    }
    Vertex y = adj[x][idx++];
    if (y == parent[x]) continue;
    if (parent.count(y)) throw NotATree();  // cross edge: cycle
    parent[y] = x;
    auto k_ = edge_key(x, y);
    EulerLabel rec;
    rec.u = k_.first;
    rec.v = k_.second;
    rec.label_in = time++;  // descend, toward the child
    rec.in_toward_v = (y == k_.second);
    recs[k_] = rec;
    stack.push_back({y, 0});
  }
  if (parent.size() != adj.size()) throw NotATree();
  std::vector<EulerLabel> out;
  for (auto& [k_, rec] : recs) {
    rec.tour_size = time;
    rec.tree = root;
    out.push_back(rec);
  }
  return out;
}

EulerLabel parent_edge(Vertex s, const std::vector<EulerLabel>& incident) {
  if (incident.empty()) throw IsRoot();
  const EulerLabel* best = nullptr;
  for (const auto& rec : incident) {
    assert(rec.u == s || rec.v == s);
    if (!best || rec.label_in < best->label_in) best = &rec;
  }
  // the smallest incident label of a non-root vertex arrives at it
  if (best->departing(s) == best->label_in) throw IsRoot();
  return *best;
}

std::vector<EulerLabel> reroot(const std::vector<EulerLabel>& tree, i64 d) {
  std::vector<EulerLabel> out = tree;
  for (auto& rec : out) {
    i64 s = rec.tour_size;
    set_traversals(rec, pos_mod(rec.label_in - d, s), pos_mod(rec.label_out - d, s));
  }
  return out;
}

bool apply_split(EulerLabel& rec, const EulerLabel& deleted, Vertex detached_root) {
  if (rec.tree != deleted.tree) return false;
  i64 cin = deleted.label_in, cout = deleted.label_out;
  i64 span = cout - cin + 1;
  if (rec.label_in > cin && rec.label_out < cout) {
    rec.label_in -= cin + 1;
    rec.label_out -= cin + 1;
    rec.tour_size = cout - cin - 1;
    rec.tree = detached_root;
  } else {
    if (rec.label_in > cout) rec.label_in -= span;
    if (rec.label_out > cout) rec.label_out -= span;
    rec.tour_size -= span;
  }
  return true;
}

SplitResult split(const EulerLabel& deleted, const std::vector<EulerLabel>& tree) {
  SplitResult res;
  bool found = false;
  res.detached_root = deleted.in_target();
  for (const auto& rec : tree) {
    if (rec.u == deleted.u && rec.v == deleted.v) {
      if (rec.label_in != deleted.label_in || rec.label_out != deleted.label_out)
        throw NotForestEdge();
      found = true;
      continue;
    }
    EulerLabel r = rec;
    apply_split(r, deleted, res.detached_root);
    (r.tree == res.detached_root && r.tree != deleted.tree ? res.detached : res.root_side)
        .push_back(r);
  }
  if (!found) throw NotForestEdge();
  res.detached_size = deleted.label_out - deleted.label_in - 1;
  res.root_size = deleted.tour_size - (deleted.label_out - deleted.label_in + 1);
  return res;
}

bool apply_merge(EulerLabel& rec, const ForestAdd& add, i64 new_size) {
  Vertex tu = add.su.tree, tv = add.sv.tree;
  i64 a = add.su.isolated ? 0 : add.su.outgoing;
  i64 b = add.sv.isolated ? 0 : add.sv.outgoing;
  i64 s2 = add.sv.isolated ? 0 : add.sv.size;
  if (rec.tree == tu) {
    if (rec.label_in >= a) rec.label_in += s2 + 2;
    if (rec.label_out >= a) rec.label_out += s2 + 2;
    rec.tour_size = new_size;
    return true;
  }
  if (rec.tree == tv) {
    i64 ni = a + 1 + pos_mod(rec.label_in - b, s2);
    i64 no = a + 1 + pos_mod(rec.label_out - b, s2);
    set_traversals(rec, ni, no);
    rec.tour_size = new_size;
    rec.tree = tu;
    return true;
  }
  return false;
}

namespace {

EulerLabel make_bridge(const ForestAdd& add, i64 new_size) {
  i64 a = add.su.isolated ? 0 : add.su.outgoing;
  i64 s2 = add.sv.isolated ? 0 : add.sv.size;
  auto k_ = edge_key(add.u, add.v);
  EulerLabel rec;
  rec.u = k_.first;
  rec.v = k_.second;
  rec.label_in = a;
  rec.label_out = a + s2 + 1;
  rec.in_toward_v = (add.v == k_.second);  // label a departs u toward v
  rec.tour_size = new_size;
  rec.tree = add.su.tree;
  return rec;
}

// advance the tracked endpoint state of a later addition through this merge
void track_endpoint(EndpointState& st, const ForestAdd& add, i64 new_size) {
  Vertex tu = add.su.tree, tv = add.sv.tree;
  i64 a = add.su.isolated ? 0 : add.su.outgoing;
  i64 b = add.sv.isolated ? 0 : add.sv.outgoing;
  i64 s2 = add.sv.isolated ? 0 : add.sv.size;
  if (st.isolated) {
    // the singleton tree {st.vertex} only changes if the merge attaches it
    if (st.vertex == add.u) {
      st.outgoing = a;  // bridge traversal departing u
      st.tree = tu;
      st.size = new_size;
      st.isolated = false;
    } else if (st.vertex == add.v) {
      st.outgoing = a + s2 + 1;  // bridge traversal departing v
      st.tree = tu;
      st.size = new_size;
      st.isolated = false;
    }
    return;
  }
  if (st.tree == tu) {
    if (st.outgoing >= a) st.outgoing += s2 + 2;
    st.size = new_size;
  } else if (st.tree == tv) {
    st.outgoing = a + 1 + pos_mod(st.outgoing - b, s2);
    st.size = new_size;
    st.tree = tu;
  }
}

void track_deleted(EulerLabel& rec, const EulerLabel& deleted, Vertex detached_root) {
  apply_split(rec, deleted, detached_root);
}

}  // namespace

std::vector<EulerLabel> merge(Vertex u, Vertex v, i64 a, i64 b,
                              const std::vector<EulerLabel>& tree_u,
                              const std::vector<EulerLabel>& tree_v) {
  ForestAdd add;
  add.u = u;
  add.v = v;
  add.su.vertex = u;
  add.sv.vertex = v;
  if (tree_u.empty()) {
    add.su = {u, u, 0, 0, true};
  } else {
    add.su = {u, tree_u.front().tree, tree_u.front().tour_size, a, false};
  }
  if (tree_v.empty()) {
    add.sv = {v, v, 0, 0, true};
  } else {
    add.sv = {v, tree_v.front().tree, tree_v.front().tour_size, b, false};
  }
  if (add.su.tree == add.sv.tree) throw SameTree();
  i64 new_size = add.su.size + add.sv.size + 2;
  std::vector<EulerLabel> out;
  out.reserve(tree_u.size() + tree_v.size() + 1);
  for (auto rec : tree_u) {
    apply_merge(rec, add, new_size);
    out.push_back(rec);
  }
  for (auto rec : tree_v) {
    apply_merge(rec, add, new_size);
    out.push_back(rec);
  }
  out.push_back(make_bridge(add, new_size));
  return out;
}

std::optional<std::string> validate_tour(const std::vector<EulerLabel>& tree) {
  if (tree.empty()) return std::nullopt;
  i64 size = tree.front().tour_size;
  Vertex root = tree.front().tree;
  if (size != 2 * (i64)tree.size())
    return std::string("tour size does not match edge count");
  std::vector<std::pair<Vertex, Vertex>> walk((size_t)size, {-1, -1});  // from, to
  for (const auto& rec : tree) {
    if (rec.tour_size != size) return std::string("inconsistent tour sizes");
    if (rec.tree != root) return std::string("inconsistent tree ids");
    if (rec.u >= rec.v) return std::string("edge endpoints out of order");
    if (!(0 <= rec.label_in && rec.label_in < rec.label_out && rec.label_out < size))
      return std::string("labels out of range");
    auto& in_slot = walk[(size_t)rec.label_in];
    auto& out_slot = walk[(size_t)rec.label_out];
    if (in_slot.first != -1 || out_slot.first != -1) return std::string("duplicate label");
    in_slot = {rec.out_target(), rec.in_target()};
    out_slot = {rec.in_target(), rec.out_target()};
  }
  for (i64 t = 0; t < size; ++t)
    if (walk[(size_t)t].first == -1) return std::string("missing label " + std::to_string(t));
  if (walk[0].first != root) return std::string("tour does not start at its root");
  for (i64 t = 0; t < size; ++t) {
    i64 nxt = (t + 1) % size;
    if (walk[(size_t)t].second != walk[(size_t)nxt].first)
      return std::string("walk breaks after label " + std::to_string(t));
  }
  return std::nullopt;
}

std::vector<EulerLabel> replay_adds(std::vector<ForestAdd>& adds,
                                    std::vector<EulerLabel*> mine) {
  std::vector<EulerLabel> created;
  created.reserve(adds.size());
  for (size_t j = 0; j < adds.size(); ++j) {
    ForestAdd& add = adds[j];
    if (add.su.tree == add.sv.tree) throw CycleCreated();
    i64 new_size = add.su.size + add.sv.size + 2;
    for (auto* rec : mine) apply_merge(*rec, add, new_size);
    for (auto& rec : created) apply_merge(rec, add, new_size);
    for (size_t j2 = j + 1; j2 < adds.size(); ++j2) {
      track_endpoint(adds[j2].su, add, new_size);
      track_endpoint(adds[j2].sv, add, new_size);
    }
    created.push_back(make_bridge(add, new_size));
  }
  return created;
}

void replay_dels(std::vector<EulerLabel>& dels, std::vector<EulerLabel*> mine) {
  for (size_t j = 0; j < dels.size(); ++j) {
    const EulerLabel cur = dels[j];
    Vertex detached_root = cur.in_target();
    for (auto* rec : mine) {
      assert(!(rec->u == cur.u && rec->v == cur.v));
      apply_split(*rec, cur, detached_root);
    }
    for (size_t j2 = j + 1; j2 < dels.size(); ++j2)
      track_deleted(dels[j2], cur, detached_root);
  }
}

// ---- distributed k-way update ----

namespace {

using graphstore::Cluster;
using graphstore::MachineState;
using netsim::BroadcastReq;
using netsim::MachineId;
using netsim::Tag;
using netsim::Word;

Word encode_endpoint(i64 seq, Vertex u, Vertex v, int side, const EndpointState& st) {
  Word w;
  w.tag = Tag::EndpointState;
  w.f = {seq, u, v, side, st.tree, st.size, st.outgoing, st.isolated ? 1 : 0};
  return w;
}

Word encode_record(i64 seq, const EulerLabel& rec) {
  Word w;
  w.tag = Tag::EdgeRecord;
  w.f = {seq, rec.u, rec.v, rec.label_in, rec.label_out, rec.in_toward_v ? 1 : 0,
         rec.tour_size, rec.tree};
  return w;
}

EulerLabel decode_record(const Word& w) {
  EulerLabel rec;
  rec.u = w.f[1];
  rec.v = w.f[2];
  rec.label_in = w.f[3];
  rec.label_out = w.f[4];
  rec.in_toward_v = w.f[5] != 0;
  rec.tour_size = w.f[6];
  rec.tree = w.f[7];
  return rec;
}

Word encode_replacement(i64 seq, Vertex y, const std::optional<EulerLabel>& rec) {
  Word w;
  w.tag = Tag::Replacement;
  w.f[0] = seq;
  w.f[1] = y;
  w.f[2] = rec ? 0 : 1;  // isolated flag
  if (rec) {
    w.f[3] = rec->u;
    w.f[4] = rec->v;
    w.f[5] = rec->label_in;
    w.f[6] = rec->label_out;
    w.f[7] = rec->in_toward_v ? 1 : 0;
    w.f[8] = rec->tour_size;
    w.f[9] = rec->tree;
  }
  return w;
}

std::vector<EulerLabel*> machine_records(MachineState& m) {
  std::vector<EulerLabel*> ptrs;
  ptrs.reserve(m.labels.size() + m.hints.size());
  for (auto& [k_, rec] : m.labels) ptrs.push_back(&rec);
  for (auto& [y, h] : m.hints)
    if (!h.isolated) ptrs.push_back(&h.rec);
  return ptrs;
}

void kwu_additions(Cluster& cl, const std::vector<EdgeKey>& additions) {
  const int k = cl.k();
  // one set: both endpoints' tracked values per addition
  std::vector<BroadcastReq> reqs;
  for (size_t j = 0; j < additions.size(); ++j) {
    auto [u, v] = additions[j];
    MachineId mu = cl.host(u), mv = cl.host(v);
    reqs.push_back({mu, encode_endpoint((i64)j, u, v, 0, cl.machines[(size_t)mu].endpoint_state(u))});
    reqs.push_back({mv, encode_endpoint((i64)j, u, v, 1, cl.machines[(size_t)mv].endpoint_state(v))});
  }
  auto words = cl.broadcast_set(reqs);

  // identical decode everywhere
  std::vector<ForestAdd> adds(additions.size());
  for (const auto& w : words) {
    size_t j = (size_t)w.f[0];
    ForestAdd& a = adds[j];
    a.u = w.f[1];
    a.v = w.f[2];
    EndpointState st;
    st.vertex = w.f[3] == 0 ? a.u : a.v;
    st.tree = w.f[4];
    st.size = w.f[5];
    st.outgoing = w.f[6];
    st.isolated = w.f[7] != 0;
    (w.f[3] == 0 ? a.su : a.sv) = st;
  }

  for (int m = 0; m < k; ++m) {
    MachineState& st = cl.machines[(size_t)m];
    auto local_adds = adds;  // every machine replays its own tracked copy
    auto created = replay_adds(local_adds, machine_records(st));
    for (size_t j = 0; j < created.size(); ++j) {
      auto k_ = edge_key(created[j].u, created[j].v);
      auto it = st.edges.find(k_);
      if (it != st.edges.end()) {
        it->second.in_forest = true;
        st.labels[k_] = created[j];
      }
      // an isolated neighbor gained its first forest edge: fill the hint
      for (Vertex y : {created[j].u, created[j].v}) {
        auto h = st.hints.find(y);
        if (h != st.hints.end() && h->second.isolated) {
          h->second.isolated = false;
          h->second.rec = created[j];
        }
      }
    }
    st.touch();
  }
}

void kwu_deletions(Cluster& cl, const std::vector<EdgeKey>& deletions) {
  const int k = cl.k();
  std::vector<BroadcastReq> reqs;
  for (size_t j = 0; j < deletions.size(); ++j) {
    auto k_ = edge_key(deletions[j].first, deletions[j].second);
    MachineId m = cl.host(k_.first);
    auto it = cl.machines[(size_t)m].labels.find(k_);
    if (it == cl.machines[(size_t)m].labels.end()) throw NotForestEdge();
    reqs.push_back({m, encode_record((i64)j, it->second)});
  }
  auto words = cl.broadcast_set(reqs);

  std::vector<EulerLabel> dels(deletions.size());
  for (const auto& w : words) dels[(size_t)w.f[0]] = decode_record(w);

  std::vector<std::vector<Vertex>> stale(k);  // hint slots pending repair
  for (int m = 0; m < k; ++m) {
    MachineState& st = cl.machines[(size_t)m];
    auto local_dels = dels;
    for (const auto& d : local_dels) {
      auto k_ = edge_key(d.u, d.v);
      st.labels.erase(k_);
      auto it = st.edges.find(k_);
      if (it != st.edges.end()) it->second.in_forest = false;
      for (auto& [y, h] : st.hints) {
        if (!h.isolated && edge_key(h.rec.u, h.rec.v) == k_) {
          h.isolated = true;  // provisional until the repair lands
          stale[(size_t)m].push_back(y);
        }
      }
    }
    replay_dels(local_dels, machine_records(st));
    st.touch();
  }

  // repair set: both endpoints of every deleted edge broadcast a surviving
  // incident edge (or an isolated marker)
  std::vector<BroadcastReq> repair;
  for (size_t j = 0; j < dels.size(); ++j) {
    for (int side = 0; side < 2; ++side) {
      Vertex y = side == 0 ? dels[j].u : dels[j].v;
      MachineId m = cl.host(y);
      repair.push_back({m, encode_replacement((i64)j, y, cl.machines[(size_t)m].min_incident_label(y))});
    }
  }
  auto rwords = cl.broadcast_set(repair);
  for (int m = 0; m < k; ++m) {
    MachineState& st = cl.machines[(size_t)m];
    for (const auto& w : rwords) {
      Vertex y = w.f[1];
      auto h = st.hints.find(y);
      if (h == st.hints.end()) continue;
      bool was_stale =
          std::find(stale[(size_t)m].begin(), stale[(size_t)m].end(), y) != stale[(size_t)m].end();
      if (!was_stale) continue;
      if (w.f[2] != 0) {
        h->second.isolated = true;
      } else {
        h->second.isolated = false;
        h->second.rec.u = w.f[3];
        h->second.rec.v = w.f[4];
        h->second.rec.label_in = w.f[5];
        h->second.rec.label_out = w.f[6];
        h->second.rec.in_toward_v = w.f[7] != 0;
        h->second.rec.tour_size = w.f[8];
        h->second.rec.tree = w.f[9];
      }
    }
    st.touch();
  }
}

}  // namespace

void k_way_update(Cluster& cl, const UpdateList& updates) {
  if (!updates.additions.empty() && !updates.deletions.empty())
    throw std::invalid_argument("one k-way batch is additions or deletions, not both");
  if ((i64)updates.additions.size() > cl.k() || (i64)updates.deletions.size() > cl.k())
    throw std::invalid_argument("k-way batch larger than k");
  if (!updates.additions.empty()) kwu_additions(cl, updates.additions);
  if (!updates.deletions.empty()) kwu_deletions(cl, updates.deletions);
}

}  // namespace kmst::eulertour
