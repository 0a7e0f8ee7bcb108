#include "kmst/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "kmst/batch.hpp"
#include "kmst/dynmst.hpp"
#include "kmst/oracle.hpp"

namespace kmst::bench {

using eulertour::EdgeKey;

Workload gen_random_stream(i64 n, int k, i64 m0, i64 batches, i64 batch_size, i64 seed) {
  if (batch_size > k) throw std::invalid_argument("batch_size must be <= k");
  if (n < 2) throw std::invalid_argument("need n >= 2");
  std::mt19937_64 rng((std::uint64_t)seed);
  auto rand_w = [&] { return (i64)(rng() % 1000000); };
  auto rand_v = [&] { return (Vertex)(rng() % (std::uint64_t)n); };

  Workload w;
  w.generator = "random";
  w.seed = seed;
  w.n = n;
  std::map<EdgeKey, i64> cur;
  while ((i64)cur.size() < m0) {
    Vertex a = rand_v(), b = rand_v();
    if (a == b) continue;
    auto key = eulertour::edge_key(a, b);
    if (cur.count(key)) continue;
    cur[key] = rand_w();
  }
  for (auto& [key, wt] : cur) w.initial.push_back({key.first, key.second, wt, false});

  const i64 max_pairs = n * (n - 1) / 2;
  for (i64 b = 0; b < batches; ++b) {
    std::vector<Update> batch;
    std::set<EdgeKey> touched;
    for (i64 i = 0; i < batch_size; ++i) {
      bool can_insert = (i64)cur.size() + (i64)batch.size() < max_pairs;
      bool can_delete = false;
      for (auto& [key, wt] : cur)
        if (!touched.count(key)) {
          can_delete = true;
          break;
        }
      if (!can_insert && !can_delete) break;
      bool ins = can_insert && (!can_delete || rng() % 2 == 0);
      if (ins) {
        while (true) {
          Vertex a = rand_v(), bb = rand_v();
          if (a == bb) continue;
          auto key = eulertour::edge_key(a, bb);
          if (cur.count(key) || touched.count(key)) continue;
          i64 wt = rand_w();
          batch.push_back({true, key.first, key.second, wt});
          touched.insert(key);
          cur[key] = wt;
          break;
        }
      } else {
        std::vector<EdgeKey> pool;
        for (auto& [key, wt] : cur)
          if (!touched.count(key)) pool.push_back(key);
        auto key = pool[rng() % pool.size()];
        batch.push_back({false, key.first, key.second, 0});
        touched.insert(key);
        cur.erase(key);
      }
    }
    w.batches.push_back(std::move(batch));
  }
  return w;
}

std::vector<WeightedEdge> gen_hard_instance(const HardInstanceParams& p, i64 below_w) {
  if (p.b < 1 || (i64)p.X.size() != p.b || (i64)p.Y.size() != p.b)
    throw ConstraintViolation("bit strings must have length b >= 1");
  for (i64 i = 0; i < p.b; ++i)
    if (!(p.X[(size_t)i] | p.Y[(size_t)i]))
      throw ConstraintViolation("X_i | Y_i = 0 at i=" + std::to_string(i + 1));
  const Vertex hub_u = p.b, hub_w = p.b + 1;
  std::vector<WeightedEdge> edges;
  edges.push_back({hub_u, hub_w, 0, false});
  for (i64 i = 0; i < p.b; ++i)
    if (p.X[(size_t)i]) edges.push_back({i, hub_u, 0, false});
  for (i64 i = 0; i < p.b; ++i)
    if (p.Y[(size_t)i]) edges.push_back({i, hub_w, 0, false});
  i64 wt = below_w - (i64)edges.size();
  for (auto& e : edges) e.w = wt++;
  return edges;
}

Workload gen_lower_bound_schedule(int k, double delta, i64 cap, i64 seed) {
  if (k < 2 || delta <= 0) throw std::invalid_argument("need k >= 2, delta > 0");
  i64 s = (i64)std::ceil(std::pow((double)k, 1.0 + delta / 2.0));
  s = std::max<i64>(3, std::min(s, cap));
  const i64 b = s - 2;
  std::mt19937_64 rng((std::uint64_t)seed);

  Workload w;
  w.generator = "lower-bound";
  w.seed = seed;
  w.n = s;
  w.focus_vertex = b;  // the hub u of every inserted instance
  i64 wt = 1000000;
  for (Vertex u = 0; u < s; ++u)
    for (Vertex v = u + 1; v < s; ++v) w.initial.push_back({u, v, wt++, false});

  // phase 1: k batches empty the clique
  i64 per = ((i64)w.initial.size() + k - 1) / k;
  for (int i = 0; i < k; ++i) {
    std::vector<Update> batch;
    for (i64 j = i * per; j < std::min<i64>((i64)(i + 1) * per, (i64)w.initial.size()); ++j)
      batch.push_back({false, w.initial[(size_t)j].u, w.initial[(size_t)j].v, 0});
    w.batches.push_back(std::move(batch));
  }
  // phases 2-3: insert a fresh instance at globally minimal weights, delete it
  i64 floor_w = 0;
  for (int i = 0; i < k; ++i) {
    HardInstanceParams p;
    p.b = b;
    for (i64 j = 0; j < b; ++j) {
      switch (rng() % 3) {
        case 0: p.X.push_back(1), p.Y.push_back(0); break;
        case 1: p.X.push_back(0), p.Y.push_back(1); break;
        default: p.X.push_back(1), p.Y.push_back(1); break;
      }
    }
    auto edges = gen_hard_instance(p, floor_w);
    floor_w -= (i64)edges.size();
    std::vector<Update> ins, del;
    for (auto& e : edges) {
      ins.push_back({true, e.u, e.v, e.w});
      del.push_back({false, e.u, e.v, 0});
    }
    w.batches.push_back(std::move(ins));
    w.batches.push_back(std::move(del));
  }
  return w;
}

std::optional<size_t> referee(const Workload& w) {
  std::set<EdgeKey> cur;
  for (auto& e : w.initial)
    if (!cur.insert(e.ekey()).second) return (size_t)0;
  for (size_t b = 0; b < w.batches.size(); ++b) {
    std::set<EdgeKey> touched;
    for (auto& up : w.batches[b]) {
      if (up.u == up.v) return b;
      auto key = eulertour::edge_key(up.u, up.v);
      if (up.u < 0 || up.v >= w.n) return b;
      if (!touched.insert(key).second) return b;
      if (up.insert && cur.count(key)) return b;
      if (!up.insert && !cur.count(key)) return b;
    }
    for (auto& up : w.batches[b]) {
      auto key = eulertour::edge_key(up.u, up.v);
      if (up.insert)
        cur.insert(key);
      else
        cur.erase(key);
    }
  }
  return std::nullopt;
}

RunReport run(const Workload& w, const RunOptions& opt) {
  RunReport rep;
  std::ostringstream csv;
  csv << csv_header();

  graphstore::Cluster cl(w.n, opt.k, opt.seed);
  cl.load_edges(w.initial);
  dynmst::Engine eng(cl);
  rep.init_rounds = eng.initialize();
  auto solver = batch::make_solver(opt.solver);

  i64 prev_rounds = cl.fabric.rounds();
  i64 prev_words = cl.fabric.stats().total_words;
  std::optional<netsim::MachineId> focus_host;
  if (w.focus_vertex) focus_host = cl.host(*w.focus_vertex);
  i64 prev_focus = focus_host ? cl.fabric.received_words(*focus_host) : 0;

  for (size_t b = 0; b < w.batches.size(); ++b) {
    const auto& batch_ups = w.batches[b];
    bool any_ins = false, any_del = false;
    for (auto& up : batch_ups) (up.insert ? any_ins : any_del) = true;
    std::string kind = any_ins && any_del ? "mixed" : (any_del ? "delete" : "insert");

    if (batch_ups.size() == 1) {
      const auto& up = batch_ups.front();
      if (up.insert)
        eng.insert_edge(up.u, up.v, up.w);
      else
        eng.delete_edge(up.u, up.v);
    } else {
      std::vector<EdgeKey> dels;
      std::vector<WeightedEdge> inss;
      for (auto& up : batch_ups) {
        if (up.insert)
          inss.push_back({std::min(up.u, up.v), std::max(up.u, up.v), up.w, false});
        else
          dels.push_back(eulertour::edge_key(up.u, up.v));
      }
      for (size_t off = 0; off < dels.size(); off += (size_t)opt.k) {
        std::vector<EdgeKey> chunk(dels.begin() + (i64)off,
                                   dels.begin() + std::min(off + (size_t)opt.k, dels.size()));
        batch::batch_delete(cl, chunk, *solver);
      }
      for (size_t off = 0; off < inss.size(); off += (size_t)opt.k) {
        std::vector<WeightedEdge> chunk(inss.begin() + (i64)off,
                                        inss.begin() + std::min(off + (size_t)opt.k, inss.size()));
        batch::batch_insert(cl, chunk);
      }
    }

    bool oracle_ok = true;
    if (opt.check_oracle) {
      auto want = oracle::edge_set(oracle::kruskal(cl.all_edges()));
      auto got = oracle::edge_set(cl.forest_edges());
      oracle_ok = want == got;
    }
    i64 mst_weight = 0;
    for (auto& e : cl.forest_edges()) mst_weight += e.w;

    i64 rounds = cl.fabric.rounds() - prev_rounds;
    i64 words = cl.fabric.stats().total_words - prev_words;
    i64 focus_words = 0;
    if (focus_host) {
      focus_words = cl.fabric.received_words(*focus_host) - prev_focus;
      prev_focus = cl.fabric.received_words(*focus_host);
    }
    prev_rounds = cl.fabric.rounds();
    prev_words = cl.fabric.stats().total_words;

    csv << b << "," << kind << "," << batch_ups.size() << "," << rounds << ","
        << cl.fabric.stats().max_link_words_per_round << "," << words << ","
        << cl.peak_words() << "," << mst_weight << "," << (oracle_ok ? "true" : "false")
        << "," << focus_words << "\n";
    if (!oracle_ok) {
      rep.exit_code = 1;
      break;
    }
  }
  rep.total_rounds = cl.fabric.rounds();
  rep.csv = csv.str();
  return rep;
}

std::string format_stream(const Workload& w) {
  std::ostringstream out;
  out << "# generator=" << w.generator << " seed=" << w.seed << " n=" << w.n;
  if (w.focus_vertex) out << " focus=" << *w.focus_vertex;
  out << "\n";
  for (const auto& batch : w.batches) {
    for (const auto& up : batch) {
      if (up.insert)
        out << "+ " << up.u << " " << up.v << " " << up.w << "\n";
      else
        out << "- " << up.u << " " << up.v << "\n";
    }
    out << "--\n";
  }
  return out.str();
}

std::vector<std::vector<Update>> parse_stream(const std::string& text) {
  std::vector<std::vector<Update>> batches;
  std::vector<Update> cur;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "--") {
      batches.push_back(cur);
      cur.clear();
    } else if (tok == "+") {
      Update up;
      up.insert = true;
      if (!(ls >> up.u >> up.v >> up.w)) throw std::invalid_argument("bad insert line: " + line);
      cur.push_back(up);
    } else if (tok == "-") {
      Update up;
      up.insert = false;
      if (!(ls >> up.u >> up.v)) throw std::invalid_argument("bad delete line: " + line);
      cur.push_back(up);
    } else {
      throw std::invalid_argument("bad stream line: " + line);
    }
  }
  if (!cur.empty()) batches.push_back(cur);
  return batches;
}

}  // namespace kmst::bench
