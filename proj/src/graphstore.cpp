#include "kmst/graphstore.hpp"

#include <algorithm>
#include <cassert>
#include <random>
#include <sstream>

namespace kmst::graphstore {

Partition make_partition(i64 n, int k, i64 seed) {
  if (n < 1) throw std::invalid_argument("need n >= 1");
  if (k < 2) throw std::invalid_argument("need k >= 2");
  Partition p;
  p.k = k;
  p.seed = seed;
  p.machine_of.resize((size_t)n);
  std::mt19937_64 rng((std::uint64_t)seed);
  for (i64 v = 0; v < n; ++v) p.machine_of[(size_t)v] = (MachineId)(rng() % (std::uint64_t)k);
  return p;
}

bool MachineState::hosts(Vertex v) const {
  return std::binary_search(hosted.begin(), hosted.end(), v);
}

i64 MachineState::words() const {
  // 1 word per hosted vertex, 3 per edge record, 4 per label, 4 per hint
  return (i64)hosted.size() + 3 * (i64)edges.size() + 4 * (i64)labels.size() +
         4 * (i64)hints.size();
}

void MachineState::touch() { peak_words = std::max(peak_words, words()); }

void MachineState::note_scratch(i64 extra) {
  peak_words = std::max(peak_words, words() + extra);
}

std::vector<const eulertour::EulerLabel*> MachineState::incident_labels(Vertex v) const {
  std::vector<const eulertour::EulerLabel*> out;
  for (const auto& [k_, rec] : labels)
    if (rec.u == v || rec.v == v) out.push_back(&rec);
  return out;
}

std::optional<eulertour::EulerLabel> MachineState::min_incident_label(Vertex v) const {
  std::optional<eulertour::EulerLabel> best;
  for (const auto& [k_, rec] : labels) {
    if (rec.u != v && rec.v != v) continue;
    if (!best || rec.label_in < best->label_in) best = rec;
  }
  return best;
}

eulertour::EndpointState MachineState::endpoint_state(Vertex v) const {
  eulertour::EndpointState st;
  st.vertex = v;
  auto inc = incident_labels(v);
  if (inc.empty()) {
    st.isolated = true;
    st.tree = v;
    st.size = 0;
    st.outgoing = 0;
    return st;
  }
  st.isolated = false;
  st.tree = inc.front()->tree;
  st.size = inc.front()->tour_size;
  i64 out = -1;
  for (auto* rec : inc) {
    i64 dep = rec->departing(v);
    if (out < 0 || dep < out) out = dep;
  }
  st.outgoing = out;
  return st;
}

Cluster::Cluster(i64 n_, int k, i64 seed) : Cluster(n_, make_partition(n_, k, seed)) {}

Cluster::Cluster(i64 n_, Partition p) : part(std::move(p)), fabric(part.k), n(n_) {
  machines.resize((size_t)part.k);
  for (MachineId m = 0; m < part.k; ++m) machines[(size_t)m].id = m;
  for (Vertex v = 0; v < n; ++v) machines[(size_t)part(v)].hosted.push_back(v);
  for (auto& m : machines) m.touch();
}

void Cluster::load_edges(const std::vector<WeightedEdge>& es) {
  for (const auto& e : es) {
    if (e.u == e.v) throw SelfLoop(e.u);
    if (e.u > e.v) throw std::invalid_argument("edges must have u < v");
    ingest_insert(e.u, e.v, e.w);
  }
}

void Cluster::ingest_insert(Vertex u, Vertex v, i64 w) {
  if (u == v) throw SelfLoop(u);
  EdgeKey k_ = eulertour::edge_key(u, v);
  WeightedEdge e{k_.first, k_.second, w, false};
  MachineId mu = host(k_.first), mv = host(k_.second);
  if (machines[(size_t)mu].edges.count(k_)) throw DuplicateEdge(k_.first, k_.second);
  machines[(size_t)mu].edges[k_] = e;
  machines[(size_t)mu].hints.try_emplace(k_.second);  // v is now a neighbor here
  machines[(size_t)mv].edges[k_] = e;
  machines[(size_t)mv].hints.try_emplace(k_.first);
  machines[(size_t)mu].touch();
  machines[(size_t)mv].touch();
}

void Cluster::ingest_delete(Vertex u, Vertex v) {
  EdgeKey k_ = eulertour::edge_key(u, v);
  MachineId mu = host(k_.first), mv = host(k_.second);
  if (!machines[(size_t)mu].edges.count(k_)) throw UnknownEdge(k_.first, k_.second);
  for (MachineId m : {mu, mv}) {
    auto& st = machines[(size_t)m];
    st.edges.erase(k_);
    st.labels.erase(k_);
    // drop hint slots for endpoints no longer adjacent to this machine
    for (Vertex y : {k_.first, k_.second}) {
      bool still = false;
      for (auto& [ek, e2] : st.edges)
        if (ek.first == y || ek.second == y) {
          still = true;
          break;
        }
      if (!still) st.hints.erase(y);
    }
    if (mu == mv) break;
  }
}

bool Cluster::has_edge(Vertex u, Vertex v) const {
  EdgeKey k_ = eulertour::edge_key(u, v);
  return machines[(size_t)host(k_.first)].edges.count(k_) > 0;
}

std::vector<WeightedEdge> Cluster::all_edges() const {
  std::map<EdgeKey, WeightedEdge> seen;
  for (const auto& m : machines)
    for (const auto& [k_, e] : m.edges) seen[k_] = e;
  std::vector<WeightedEdge> out;
  out.reserve(seen.size());
  for (auto& [k_, e] : seen) out.push_back(e);
  return out;
}

std::vector<WeightedEdge> Cluster::forest_edges() const {
  std::vector<WeightedEdge> out;
  for (auto& e : all_edges())
    if (e.in_forest) out.push_back(e);
  return out;
}

std::vector<eulertour::EulerLabel> Cluster::all_labels() const {
  std::map<EdgeKey, eulertour::EulerLabel> seen;
  for (const auto& m : machines) {
    for (const auto& [k_, rec] : m.labels) {
      auto it = seen.find(k_);
      if (it == seen.end())
        seen[k_] = rec;
      else if (!(it->second == rec))
        throw std::logic_error("label copies diverged for an edge");
    }
  }
  std::vector<eulertour::EulerLabel> out;
  out.reserve(seen.size());
  for (auto& [k_, rec] : seen) out.push_back(rec);
  return out;
}

std::optional<std::string> Cluster::validate_forest() const {
  // residency: every edge copy sits exactly on its endpoints' machines
  for (const auto& m : machines) {
    for (const auto& [k_, e] : m.edges) {
      if (m.id != host(k_.first) && m.id != host(k_.second))
        return "edge stored off its hosts";
      MachineId other = m.id == host(k_.first) ? host(k_.second) : host(k_.first);
      if (!machines[(size_t)other].edges.count(k_)) return "edge missing its second copy";
    }
  }
  std::vector<eulertour::EulerLabel> labels;
  try {
    labels = all_labels();
  } catch (const std::logic_error& e) {
    return std::string(e.what());
  }
  std::map<Vertex, std::vector<eulertour::EulerLabel>> by_tree;
  for (auto& rec : labels) by_tree[rec.tree].push_back(rec);
  for (auto& [root, tree] : by_tree) {
    if (auto err = eulertour::validate_tour(tree)) return err;
  }
  // every stored hint must reference a live forest edge of that neighbor
  std::map<EdgeKey, eulertour::EulerLabel> live;
  std::set<Vertex> attached;
  for (auto& rec : labels) {
    live[eulertour::edge_key(rec.u, rec.v)] = rec;
    attached.insert(rec.u);
    attached.insert(rec.v);
  }
  for (const auto& m : machines) {
    for (const auto& [y, h] : m.hints) {
      if (h.isolated) {
        if (attached.count(y))
          return "hint marks " + std::to_string(y) + " isolated but a forest edge exists";
        continue;
      }
      auto it = live.find(eulertour::edge_key(h.rec.u, h.rec.v));
      if (it == live.end()) return "hint references a dead edge";
      if (!(it->second == h.rec)) return "hint labels are stale";
      if (h.rec.u != y && h.rec.v != y) return "hint edge not incident to its neighbor";
    }
  }
  return std::nullopt;
}

netsim::Word endpoint_word(const Cluster& cl, i64 seq, Vertex x) {
  const MachineState& st = cl.machines[(size_t)cl.host(x)];
  eulertour::EndpointState ep = st.endpoint_state(x);
  netsim::Word w;
  w.tag = netsim::Tag::EndpointState;
  w.f[0] = seq;
  w.f[1] = x;
  w.f[2] = ep.tree;
  w.f[3] = ep.size;
  w.f[4] = ep.outgoing;
  w.f[5] = ep.isolated ? 1 : 0;
  if (!ep.isolated) {
    auto rec = st.min_incident_label(x);
    w.f[6] = rec->u == x ? rec->v : rec->u;
    w.f[7] = rec->label_in;
    w.f[8] = rec->label_out;
    w.f[9] = rec->in_toward_v ? 1 : 0;
  }
  return w;
}

eulertour::EndpointState decode_endpoint_word(const netsim::Word& w) {
  eulertour::EndpointState ep;
  ep.vertex = w.f[1];
  ep.tree = w.f[2];
  ep.size = w.f[3];
  ep.outgoing = w.f[4];
  ep.isolated = w.f[5] != 0;
  return ep;
}

void refresh_hint_from_endpoint(Cluster& cl, const netsim::Word& w) {
  Vertex x = w.f[1];
  bool isolated = w.f[5] != 0;
  for (auto& m : cl.machines) {
    auto it = m.hints.find(x);
    if (it == m.hints.end()) continue;
    if (isolated) {
      it->second.isolated = true;
      continue;
    }
    auto k_ = eulertour::edge_key(x, w.f[6]);
    eulertour::EulerLabel rec;
    rec.u = k_.first;
    rec.v = k_.second;
    rec.label_in = w.f[7];
    rec.label_out = w.f[8];
    rec.in_toward_v = w.f[9] != 0;
    rec.tour_size = w.f[3];
    rec.tree = w.f[2];
    it->second.isolated = false;
    it->second.rec = rec;
  }
}

Cluster::MemoryReport Cluster::memory_report() const {
  MemoryReport r;
  for (const auto& m : machines) {
    r.current.push_back(m.words());
    r.peak.push_back(m.peak_words);
  }
  return r;
}

i64 Cluster::peak_words() const {
  i64 p = 0;
  for (const auto& m : machines) p = std::max(p, m.peak_words);
  return p;
}

std::vector<netsim::Word> Cluster::broadcast_set(const std::vector<netsim::BroadcastReq>& reqs) {
  auto res = fabric.scheduled_broadcasts({reqs});
  for (auto& m : machines) m.note_scratch((i64)res.words.size());
  return res.words;
}

GraphFile parse_graph_file(const std::string& text) {
  GraphFile g;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  i64 m = 0;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    if (!header) {
      if (ls >> g.n >> m) header = true;
      continue;
    }
    Vertex u, v;
    i64 w;
    if (!(ls >> u >> v >> w)) continue;
    if (!(0 <= u && u < v && v < g.n)) throw std::invalid_argument("bad edge line: " + line);
    g.edges.push_back({u, v, w, false});
  }
  if (!header) throw std::invalid_argument("missing graph header");
  if ((i64)g.edges.size() != m) throw std::invalid_argument("edge count mismatch");
  return g;
}

std::string format_graph_file(const GraphFile& g) {
  std::ostringstream out;
  out << g.n << " " << g.edges.size() << "\n";
  for (const auto& e : g.edges) out << e.u << " " << e.v << " " << e.w << "\n";
  return out.str();
}

}  // namespace kmst::graphstore
