#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "kmst/dynmst.hpp"
#include "kmst/oracle.hpp"

using namespace kmst;
using dynmst::Engine;
using eulertour::EdgeKey;
using graphstore::Cluster;
using graphstore::WeightedEdge;
using kmst::graphstore::i64;
using kmst::graphstore::Vertex;

namespace {

std::vector<WeightedEdge> random_graph(std::mt19937_64& rng, i64 n, i64 m) {
  std::set<EdgeKey> seen;
  std::vector<WeightedEdge> edges;
  while ((i64)edges.size() < m) {
    Vertex u = (Vertex)(rng() % n), v = (Vertex)(rng() % n);
    if (u == v) continue;
    auto key = eulertour::edge_key(u, v);
    if (!seen.insert(key).second) continue;
    edges.push_back({key.first, key.second, (i64)(rng() % 100000), false});
  }
  return edges;
}

void check_against_oracle(const Cluster& cl) {
  auto want = oracle::edge_set(oracle::kruskal(cl.all_edges()));
  auto got = oracle::edge_set(cl.forest_edges());
  CHECK(want == got);
  CHECK(!cl.validate_forest().has_value());
}

}  // namespace

TEST_CASE("initialization of an empty edge set is free of phases") {
  Cluster cl(4, 2, 1);
  Engine eng(cl);
  i64 rounds = eng.initialize();
  CHECK(cl.forest_edges().empty());
  CHECK(rounds <= 2);  // a single empty discovery wave
}

TEST_CASE("initialization of a weighted cycle drops the heavy edge") {
  Cluster cl(4, 2, 5);
  cl.load_edges({{0, 1, 1, false}, {1, 2, 2, false}, {2, 3, 3, false}, {0, 3, 4, false}});
  Engine eng(cl);
  eng.initialize();
  CHECK(oracle::edge_set(cl.forest_edges()) ==
        std::set<EdgeKey>{{0, 1}, {1, 2}, {2, 3}});
  check_against_oracle(cl);
}

TEST_CASE("initialization matches kruskal on a random graph") {
  std::mt19937_64 rng(42);
  auto edges = random_graph(rng, 256, 1600);
  Cluster cl(256, 8, 7);
  cl.load_edges(edges);
  Engine eng(cl);
  eng.initialize();
  check_against_oracle(cl);
}

TEST_CASE("initialization round count respects the pinned budget") {
  std::mt19937_64 rng(43);
  for (int k : {4, 8}) {
    i64 n = 256;
    auto edges = random_graph(rng, n, 1024);
    Cluster cl(n, k, 11);
    cl.load_edges(edges);
    Engine eng(cl);
    i64 rounds = eng.initialize();
    i64 budget = Engine::C_INIT * (n / k + (i64)std::ceil(std::log2((double)n)));
    CHECK(rounds <= budget);
    check_against_oracle(cl);
  }
}

TEST_CASE("inserting a light shortcut swaps out the path maximum") {
  Cluster cl(3, 2, 19);
  cl.load_edges({{0, 1, 5, false}, {1, 2, 6, false}});
  Engine eng(cl);
  eng.initialize();
  auto res = eng.insert_edge(0, 2, 1);
  REQUIRE(res.removed.size() == 1);
  CHECK(res.removed[0].ekey() == EdgeKey{1, 2});
  REQUIRE(res.added.size() == 1);
  CHECK(res.added[0].ekey() == EdgeKey{0, 2});
  check_against_oracle(cl);
}

TEST_CASE("inserting a heavy edge changes nothing") {
  Cluster cl(3, 2, 19);
  cl.load_edges({{0, 1, 5, false}, {1, 2, 6, false}});
  Engine eng(cl);
  eng.initialize();
  auto res = eng.insert_edge(0, 2, 100);
  CHECK(res.added.empty());
  CHECK(res.removed.empty());
  check_against_oracle(cl);
}

TEST_CASE("inserting across components always joins them") {
  Cluster cl(4, 2, 23);
  cl.load_edges({{0, 1, 5, false}, {2, 3, 6, false}});
  Engine eng(cl);
  eng.initialize();
  auto res = eng.insert_edge(1, 2, 1000);
  REQUIRE(res.added.size() == 1);
  CHECK(res.removed.empty());
  check_against_oracle(cl);
}

TEST_CASE("deleting a tree edge pulls in the replacement") {
  Cluster cl(3, 2, 29);
  cl.load_edges({{0, 1, 5, false}, {1, 2, 6, false}, {0, 2, 9, false}});
  Engine eng(cl);
  eng.initialize();
  auto res = eng.delete_edge(1, 2);
  REQUIRE(res.added.size() == 1);
  CHECK(res.added[0].ekey() == EdgeKey{0, 2});
  check_against_oracle(cl);
}

TEST_CASE("deleting a bridge legitimately splits the forest") {
  Cluster cl(4, 2, 31);
  cl.load_edges({{0, 1, 1, false}, {1, 2, 2, false}, {2, 3, 3, false}});
  Engine eng(cl);
  eng.initialize();
  auto res = eng.delete_edge(1, 2);
  CHECK(res.added.empty());
  CHECK(res.removed.size() == 1);
  check_against_oracle(cl);
  CHECK(cl.forest_edges().size() == 2);
}

TEST_CASE("deleting a non-tree edge costs nothing") {
  Cluster cl(3, 2, 37);
  cl.load_edges({{0, 1, 1, false}, {1, 2, 2, false}, {0, 2, 9, false}});
  Engine eng(cl);
  eng.initialize();
  auto res = eng.delete_edge(0, 2);
  CHECK(res.rounds == 0);
  CHECK(res.added.empty());
  check_against_oracle(cl);
}

TEST_CASE("deleting an absent edge is an error") {
  Cluster cl(3, 2, 41);
  cl.load_edges({{0, 1, 1, false}});
  Engine eng(cl);
  eng.initialize();
  CHECK_THROWS_AS(eng.delete_edge(1, 2), graphstore::UnknownEdge);
}

TEST_CASE("random single-update streams track the oracle") {
  std::mt19937_64 rng(53);
  for (int k : {4, 8}) {
    i64 n = 64;
    auto edges = random_graph(rng, n, 160);
    Cluster cl(n, k, 13);
    cl.load_edges(edges);
    Engine eng(cl);
    eng.initialize();
    std::map<EdgeKey, i64> cur;
    for (auto& e : edges) cur[e.ekey()] = e.w;
    i64 max_rounds = 0;
    for (int step = 0; step < 200; ++step) {
      bool ins = cur.empty() || rng() % 2 == 0;
      dynmst::UpdateResult res;
      if (ins) {
        while (true) {
          Vertex u = (Vertex)(rng() % n), v = (Vertex)(rng() % n);
          if (u == v) continue;
          auto key = eulertour::edge_key(u, v);
          if (cur.count(key)) continue;
          i64 w = (i64)(rng() % 100000);
          res = eng.insert_edge(key.first, key.second, w);
          cur[key] = w;
          break;
        }
      } else {
        auto it = cur.begin();
        std::advance(it, (i64)(rng() % cur.size()));
        res = eng.delete_edge(it->first.first, it->first.second);
        cur.erase(it);
      }
      max_rounds = std::max(max_rounds, res.rounds);
      if (step % 20 == 0) check_against_oracle(cl);
    }
    check_against_oracle(cl);
    CHECK(max_rounds <= Engine::SINGLE_UPDATE_CAP);
  }
}

TEST_CASE("single update rounds do not grow with n or k") {
  std::mt19937_64 rng(59);
  std::set<i64> maxima;
  for (i64 n : {64, 256}) {
    for (int k : {4, 8, 16}) {
      auto edges = random_graph(rng, n, 3 * n);
      Cluster cl(n, k, 17);
      cl.load_edges(edges);
      Engine eng(cl);
      eng.initialize();
      i64 max_rounds = 0;
      std::map<EdgeKey, i64> cur;
      for (auto& e : edges) cur[e.ekey()] = e.w;
      for (int step = 0; step < 40; ++step) {
        auto it = cur.begin();
        std::advance(it, (i64)(rng() % cur.size()));
        auto res = eng.delete_edge(it->first.first, it->first.second);
        cur.erase(it);
        max_rounds = std::max(max_rounds, res.rounds);
        while (true) {
          Vertex u = (Vertex)(rng() % n), v = (Vertex)(rng() % n);
          if (u == v) continue;
          auto key = eulertour::edge_key(u, v);
          if (cur.count(key)) continue;
          i64 w = (i64)(rng() % 100000);
          res = eng.insert_edge(key.first, key.second, w);
          cur[key] = w;
          max_rounds = std::max(max_rounds, res.rounds);
          break;
        }
      }
      maxima.insert(max_rounds);
      CHECK(max_rounds <= Engine::SINGLE_UPDATE_CAP);
    }
  }
}
