#include "kmst/dynmst.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>

#include "kmst/oracle.hpp"

namespace kmst::dynmst {

using eulertour::EdgeKey;
using eulertour::EndpointState;
using eulertour::EulerLabel;
using graphstore::Cluster;
using graphstore::MachineState;
using netsim::AggMode;
using netsim::BroadcastReq;
using netsim::Keyed;
using netsim::MachineId;
using netsim::Tag;
using netsim::Word;

namespace {

inline i64 pos_mod(i64 x, i64 m) { return ((x % m) + m) % m; }

std::pair<i64, i64> shifted_pair(const EulerLabel& rec, i64 d) {
  i64 a = pos_mod(rec.label_in - d, rec.tour_size);
  i64 b = pos_mod(rec.label_out - d, rec.tour_size);
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

// side of the cut for vertex x, judged from one incident forest edge
enum class Side { With, Away, Other };
Side classify(Vertex x, const EulerLabel& e, const EulerLabel& c) {
  if (e.tree != c.tree) return Side::Other;
  if (e.u == c.u && e.v == c.v) {
    // the chosen edge is the cut edge itself: direction decides
    return c.in_target() == x ? Side::Away : Side::With;
  }
  if (eulertour::is_separated(e, c)) return Side::Away;
  return Side::With;
}

}  // namespace

i64 Engine::initialize() {
  const int k = cl_.k();
  i64 start = cl_.fabric.rounds();

  // per-machine component knowledge: hosted vertices and graph neighbors
  std::vector<std::map<Vertex, Vertex>> comp(cl_.machines.size());
  for (auto& m : cl_.machines) {
    for (Vertex v : m.hosted) comp[(size_t)m.id][v] = v;
    for (auto& [k_, e] : m.edges) {
      comp[(size_t)m.id][e.u] = e.u;
      comp[(size_t)m.id][e.v] = e.v;
    }
    m.note_scratch((i64)comp[(size_t)m.id].size());
  }

  // active components, identical on every machine (all winners are broadcast)
  std::vector<Vertex> active;
  for (Vertex v = 0; v < cl_.n; ++v) active.push_back(v);

  while (true) {
    // local minimum outgoing edge per active component
    std::vector<netsim::ExtremeQuery> queries(active.size());
    std::map<Vertex, size_t> qindex;
    for (size_t q = 0; q < active.size(); ++q) {
      queries[q].mode = AggMode::Min;
      queries[q].contrib.assign((size_t)k, std::nullopt);
      qindex[active[q]] = q;
    }
    for (auto& m : cl_.machines) {
      auto& cmap = comp[(size_t)m.id];
      for (auto& [k_, e] : m.edges) {
        Vertex cu = cmap.at(e.u), cv = cmap.at(e.v);
        if (cu == cv) continue;
        for (Vertex c : {cu, cv}) {
          if (!m.hosts(c == cu ? e.u : e.v)) continue;  // contribute from the hosted side
          Keyed cand;
          cand.key = e.key().as_array();
          cand.value.tag = Tag::CompWinner;
          cand.value.f = {c, e.u, e.v, e.w, c == cu ? cv : cu};
          auto& slot = queries[qindex[c]].contrib[(size_t)m.id];
          if (!slot || netsim::keyed_better(cand, *slot, AggMode::Min)) slot = cand;
        }
      }
    }
    auto winners = cl_.fabric.batched_extremes(queries);

    std::vector<BroadcastReq> reqs;
    for (size_t q = 0; q < winners.size(); ++q) {
      if (!winners[q]) continue;
      reqs.push_back({netsim::Fabric::extreme_relay((int)q, k), winners[q]->value});
    }
    if (reqs.empty()) break;
    auto words = cl_.broadcast_set(reqs);

    // identical post-processing on every machine: dedupe the chosen edges,
    // order by weight key, merge the component name map
    std::map<EdgeKey, WeightedEdge> chosen;
    oracle::UnionFind uf;
    for (const auto& w : words) {
      WeightedEdge e{w.f[1], w.f[2], w.f[3], false};
      chosen[e.ekey()] = e;
      uf.unite(w.f[0], w.f[4]);
    }
    std::vector<WeightedEdge> ordered;
    for (auto& [k_, e] : chosen) ordered.push_back(e);
    std::sort(ordered.begin(), ordered.end(),
              [](const WeightedEdge& a, const WeightedEdge& b) { return a.key() < b.key(); });

    for (size_t off = 0; off < ordered.size(); off += (size_t)k) {
      eulertour::UpdateList ul;
      for (size_t j = off; j < std::min(off + (size_t)k, ordered.size()); ++j)
        ul.additions.push_back(ordered[j].ekey());
      eulertour::k_way_update(cl_, ul);
    }

    for (auto& m : cl_.machines) {
      for (auto& [v, c] : comp[(size_t)m.id]) c = uf.find(c);
      m.note_scratch((i64)words.size());
    }
    std::set<Vertex> next;
    for (Vertex c : active) next.insert(uf.find(c));
    active.assign(next.begin(), next.end());
  }
  return cl_.fabric.rounds() - start;
}

UpdateResult Engine::insert_edge(Vertex u, Vertex v, i64 w) {
  i64 start = cl_.fabric.rounds();
  auto k_ = eulertour::edge_key(u, v);
  u = k_.first;
  v = k_.second;
  cl_.ingest_insert(u, v, w);

  // both hosting machines announce the endpoint state
  std::vector<BroadcastReq> reqs;
  reqs.push_back({cl_.host(u), graphstore::endpoint_word(cl_, 0, u)});
  reqs.push_back({cl_.host(v), graphstore::endpoint_word(cl_, 1, v)});
  auto words = cl_.broadcast_set(reqs);
  EndpointState su, sv;
  for (const auto& word : words) {
    graphstore::refresh_hint_from_endpoint(cl_, word);
    (word.f[0] == 0 ? su : sv) = graphstore::decode_endpoint_word(word);
  }

  UpdateResult res;
  if (su.tree != sv.tree) {
    // different trees: the edge joins the forest unconditionally
    eulertour::UpdateList ul;
    ul.additions.push_back(k_);
    eulertour::k_way_update(cl_, ul);
    res.added.push_back({u, v, w, true});
    res.rounds = cl_.fabric.rounds() - start;
    return res;
  }

  // same tree: virtually reroot to u, find v's parent edge, then the path max
  i64 d = su.outgoing;
  const MachineState& hv = cl_.machines[(size_t)cl_.host(v)];
  auto inc = hv.incident_labels(v);
  const EulerLabel* parent = nullptr;
  i64 best_in = -1;
  for (auto* rec : inc) {
    i64 lo = shifted_pair(*rec, d).first;
    if (!parent || lo < best_in) {
      parent = rec;
      best_in = lo;
    }
  }
  assert(parent != nullptr);
  auto [pin, pout] = shifted_pair(*parent, d);
  {
    Word pw;
    pw.tag = Tag::EdgeRecord;
    pw.f = {0, pin, pout, 0, 0, 0, 0, 0};
    cl_.broadcast_set({{cl_.host(v), pw}});
  }

  // every machine scans its forest edges for path membership
  std::vector<std::optional<Keyed>> contribs((size_t)cl_.k());
  for (auto& m : cl_.machines) {
    for (auto& [ek, rec] : m.labels) {
      if (rec.tree != su.tree) continue;
      auto [lo, hi] = shifted_pair(rec, d);
      if (!(lo <= pin && hi >= pout)) continue;
      auto eit = m.edges.find(ek);
      assert(eit != m.edges.end());
      Keyed cand;
      cand.key = eit->second.key().as_array();
      cand.value.tag = Tag::NewEdge;
      cand.value.f = {eit->second.u, eit->second.v, eit->second.w};
      auto& slot = contribs[(size_t)m.id];
      if (!slot || netsim::keyed_better(cand, *slot, AggMode::Max)) slot = cand;
    }
  }
  MachineId leader = cl_.host(u);
  Keyed best = cl_.fabric.converge_cast_extreme(contribs, AggMode::Max, leader,
                                                (leader + 1) % cl_.k());
  bool swap = best.key > graphstore::WeightKey{w, u, v}.as_array();
  {
    Word dec;
    dec.tag = Tag::Decision;
    dec.f = {swap ? 1 : 0, best.value.f[0], best.value.f[1], best.value.f[2]};
    cl_.broadcast_set({{leader, dec}});
  }
  if (swap) {
    WeightedEdge out{best.value.f[0], best.value.f[1], best.value.f[2], false};
    eulertour::UpdateList del;
    del.deletions.push_back(out.ekey());
    eulertour::k_way_update(cl_, del);
    eulertour::UpdateList add;
    add.additions.push_back(k_);
    eulertour::k_way_update(cl_, add);
    res.removed.push_back(out);
    res.added.push_back({u, v, w, true});
  }
  res.rounds = cl_.fabric.rounds() - start;
  return res;
}

UpdateResult Engine::delete_edge(Vertex u, Vertex v) {
  i64 start = cl_.fabric.rounds();
  auto k_ = eulertour::edge_key(u, v);
  u = k_.first;
  v = k_.second;
  MachineId hu = cl_.host(u);
  auto& st = cl_.machines[(size_t)hu];
  auto eit = st.edges.find(k_);
  if (eit == st.edges.end()) throw graphstore::UnknownEdge(u, v);
  WeightedEdge victim = eit->second;

  UpdateResult res;
  if (!victim.in_forest) {
    cl_.ingest_delete(u, v);  // purely local
    return res;
  }

  // broadcast the cut edge's record, classify every known vertex, then run
  // the min query over crossing non-forest edges
  EulerLabel cut = st.labels.at(k_);
  {
    Word cw;
    cw.tag = Tag::EdgeRecord;
    cw.f = {0, cut.u, cut.v, cut.label_in, cut.label_out, cut.in_toward_v ? 1 : 0,
            cut.tour_size, cut.tree};
    cl_.broadcast_set({{hu, cw}});
  }
  std::vector<std::optional<Keyed>> contribs((size_t)cl_.k());
  for (auto& m : cl_.machines) {
    for (auto& [ek, e] : m.edges) {
      if (e.in_forest) continue;
      auto side_of = [&](Vertex x) -> Side {
        if (m.hosts(x)) {
          auto rec = m.min_incident_label(x);
          return rec ? classify(x, *rec, cut) : Side::Other;
        }
        auto h = m.hints.find(x);
        if (h == m.hints.end() || h->second.isolated) return Side::Other;
        return classify(x, h->second.rec, cut);
      };
      Side a = side_of(e.u), b = side_of(e.v);
      if (a == Side::Other || b == Side::Other || a == b) continue;
      Keyed cand;
      cand.key = e.key().as_array();
      cand.value.tag = Tag::NewEdge;
      cand.value.f = {e.u, e.v, e.w};
      auto& slot = contribs[(size_t)m.id];
      if (!slot || netsim::keyed_better(cand, *slot, AggMode::Min)) slot = cand;
    }
  }
  auto best = cl_.fabric.converge_cast_extreme_opt(contribs, AggMode::Min, hu,
                                                   (hu + 1) % cl_.k());
  {
    Word dec;
    dec.tag = Tag::Decision;
    dec.f = {best ? 1 : 0, best ? best->value.f[0] : 0, best ? best->value.f[1] : 0,
             best ? best->value.f[2] : 0};
    cl_.broadcast_set({{hu, dec}});
  }
  eulertour::UpdateList del;
  del.deletions.push_back(k_);
  eulertour::k_way_update(cl_, del);
  cl_.ingest_delete(u, v);
  res.removed.push_back(victim);
  if (best) {
    WeightedEdge repl{best->value.f[0], best->value.f[1], best->value.f[2], false};
    eulertour::UpdateList add;
    add.additions.push_back(repl.ekey());
    eulertour::k_way_update(cl_, add);
    res.added.push_back({repl.u, repl.v, repl.w, true});
  }
  res.rounds = cl_.fabric.rounds() - start;
  return res;
}

}  // namespace kmst::dynmst
