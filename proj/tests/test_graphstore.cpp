#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "kmst/graphstore.hpp"

using namespace kmst;
using namespace kmst::graphstore;

TEST_CASE("partitions are reproducible and land in range") {
  auto p = make_partition(4, 2, 12345);
  auto q = make_partition(4, 2, 12345);
  CHECK(p.machine_of == q.machine_of);
  // frozen from the first run of this seed
  CHECK(p.machine_of == std::vector<netsim::MachineId>{0, 1, 1, 0});
  for (auto m : p.machine_of) CHECK((m == 0 || m == 1));
  CHECK_THROWS(make_partition(4, 1, 0));
}

TEST_CASE("co-located triangle sits on one machine") {
  Partition p;
  p.k = 2;
  p.machine_of = {0, 0, 0};
  Cluster cl(3, p);
  cl.load_edges({{0, 1, 1, false}, {0, 2, 2, false}, {1, 2, 3, false}});
  CHECK(cl.machines[0].edges.size() == 3);
  CHECK(cl.machines[1].edges.size() == 0);
}

TEST_CASE("an edge lives on both endpoint machines") {
  Partition p;
  p.k = 2;
  p.machine_of = {0, 1};
  Cluster cl(2, p);
  cl.load_edges({{0, 1, 5, false}});
  CHECK(cl.machines[0].edges.count({0, 1}) == 1);
  CHECK(cl.machines[1].edges.count({0, 1}) == 1);
  CHECK(cl.all_edges().size() == 1);
}

TEST_CASE("empty graphs meter only vertex records") {
  Cluster cl(8, 4, 9);
  auto rep = cl.memory_report();
  i64 total = 0;
  for (auto w : rep.current) total += w;
  CHECK(total == 8);  // one word per hosted vertex
}

TEST_CASE("loader rejects duplicates and self loops") {
  Cluster a(3, 2, 1);
  CHECK_THROWS_AS(a.load_edges({{0, 1, 1, false}, {0, 1, 2, false}}), DuplicateEdge);
  Cluster b(3, 2, 1);
  CHECK_THROWS_AS(b.ingest_insert(1, 1, 3), SelfLoop);
}

TEST_CASE("updates are local to the hosting machines") {
  Cluster cl(6, 3, 17);
  i64 rounds_before = cl.fabric.rounds();
  cl.ingest_insert(1, 2, 5);
  for (netsim::MachineId m = 0; m < 3; ++m) {
    bool should_have = m == cl.host(1) || m == cl.host(2);
    CHECK((cl.machines[(size_t)m].edges.count({1, 2}) == 1) == should_have);
  }
  cl.ingest_delete(1, 2);
  CHECK(cl.fabric.rounds() == rounds_before);
  CHECK_THROWS_AS(cl.ingest_delete(1, 2), UnknownEdge);
  cl.ingest_insert(1, 2, 5);
  CHECK_THROWS_AS(cl.ingest_insert(1, 2, 9), DuplicateEdge);
}

TEST_CASE("deleting a non-forest edge leaves flags untouched") {
  Cluster cl(4, 2, 2);
  cl.load_edges({{0, 1, 1, false}, {1, 2, 2, false}});
  cl.ingest_delete(1, 2);
  for (auto& e : cl.all_edges()) CHECK(!e.in_forest);
}

TEST_CASE("hint slots track machine adjacency") {
  Partition p;
  p.k = 2;
  p.machine_of = {0, 1, 1};
  Cluster cl(3, p);
  cl.ingest_insert(0, 1, 1);
  CHECK(cl.machines[0].hints.count(1) == 1);
  CHECK(cl.machines[1].hints.count(0) == 1);
  cl.ingest_insert(0, 2, 2);
  CHECK(cl.machines[0].hints.count(2) == 1);
  cl.ingest_delete(0, 1);
  CHECK(cl.machines[0].hints.count(1) == 0);
  CHECK(cl.machines[0].hints.count(2) == 1);  // still adjacent through (0,2)
  CHECK(cl.machines[1].hints.count(0) == 1);  // machine 1 hosts 2 as well
}

TEST_CASE("memory meter stays within the space bound on a random graph") {
  const i64 n = 128;
  const int k = 8;
  std::mt19937_64 rng(5);
  std::set<std::pair<Vertex, Vertex>> seen;
  std::vector<WeightedEdge> edges;
  while ((i64)edges.size() < 1024) {
    Vertex u = (Vertex)(rng() % n), v = (Vertex)(rng() % n);
    if (u == v) continue;
    auto key = eulertour::edge_key(u, v);
    if (!seen.insert(key).second) continue;
    edges.push_back({key.first, key.second, (i64)(rng() % 100000), false});
  }
  Cluster cl(n, k, 33);
  cl.load_edges(edges);
  std::map<Vertex, i64> deg;
  i64 max_deg = 0;
  for (auto& e : edges) {
    max_deg = std::max({max_deg, ++deg[e.u], ++deg[e.v]});
  }
  i64 bound = C_SPACE * std::max<i64>(1024 / k + max_deg, k);
  for (auto w : cl.memory_report().peak) CHECK(w <= bound);
}

TEST_CASE("graph files round-trip and reject malformed input") {
  GraphFile g{4, {{0, 1, 10, false}, {1, 3, -2, false}}};
  auto text = format_graph_file(g);
  auto back = parse_graph_file("# comment line\n" + text);
  CHECK(back.n == 4);
  REQUIRE(back.edges.size() == 2);
  CHECK(back.edges[1].w == -2);
  CHECK_THROWS(parse_graph_file("3 1\n2 1 5\n"));  // u < v violated
  CHECK_THROWS(parse_graph_file("3 2\n0 1 5\n"));  // count mismatch
  CHECK_THROWS(parse_graph_file("0 1 5\n"));       // header first
}
