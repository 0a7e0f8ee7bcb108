#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <thread>

#include "kmst/bench.hpp"
#include "kmst/oracle.hpp"

using namespace kmst;
using namespace kmst::bench;
using eulertour::EdgeKey;

TEST_CASE("random stream generation is seed-deterministic") {
  auto a = gen_random_stream(32, 4, 64, 10, 4, 77);
  auto b = gen_random_stream(32, 4, 64, 10, 4, 77);
  CHECK(format_stream(a) == format_stream(b));
  CHECK(a.initial.size() == 64);
  CHECK(a.batches.size() == 10);
  auto c = gen_random_stream(32, 4, 64, 10, 4, 78);
  CHECK(format_stream(a) != format_stream(c));
  CHECK(!referee(a).has_value());
}

TEST_CASE("batch size one gives a single-update stream") {
  auto w = gen_random_stream(16, 4, 20, 12, 1, 3);
  for (auto& b : w.batches) CHECK(b.size() == 1);
  CHECK(!referee(w).has_value());
}

TEST_CASE("stream files round-trip") {
  auto w = gen_random_stream(16, 4, 10, 5, 3, 9);
  auto text = format_stream(w);
  auto batches = parse_stream(text);
  REQUIRE(batches.size() == w.batches.size());
  for (size_t b = 0; b < batches.size(); ++b) {
    REQUIRE(batches[b].size() == w.batches[b].size());
    for (size_t i = 0; i < batches[b].size(); ++i) {
      CHECK(batches[b][i].insert == w.batches[b][i].insert);
      CHECK(batches[b][i].u == w.batches[b][i].u);
      CHECK(batches[b][i].v == w.batches[b][i].v);
    }
  }
  CHECK_THROWS(parse_stream("? 1 2\n"));
}

TEST_CASE("referee flags invalid updates") {
  Workload w;
  w.n = 4;
  w.initial = {{0, 1, 5, false}};
  w.batches = {{{false, 2, 3, 0}}};  // delete of an absent edge
  CHECK(referee(w) == (size_t)0);
  w.batches = {{{true, 0, 1, 9}}};  // duplicate insert
  CHECK(referee(w) == (size_t)0);
  w.batches = {{{true, 1, 2, 9}, {false, 1, 2, 0}}};  // same key twice in a batch
  CHECK(referee(w) == (size_t)0);
  w.batches = {{{true, 1, 2, 9}}, {{false, 1, 2, 0}}};
  CHECK(!referee(w).has_value());
}

TEST_CASE("hard instance follows the bit strings") {
  HardInstanceParams p;
  p.b = 3;
  p.X = {1, 0, 1};
  p.Y = {0, 1, 1};
  auto edges = gen_hard_instance(p, 0);
  // v_i = i-1, u = 3, w = 4
  std::set<EdgeKey> got;
  for (auto& e : edges) got.insert(e.ekey());
  CHECK(got == std::set<EdgeKey>{{3, 4}, {0, 3}, {2, 3}, {1, 4}, {2, 4}});
  for (auto& e : edges) CHECK(e.w < 0);  // strictly below the floor
  std::set<i64> ws;
  for (auto& e : edges) ws.insert(e.w);
  CHECK(ws.size() == edges.size());
}

TEST_CASE("all-ones X with all-zeros Y is a star at u plus the hub edge") {
  HardInstanceParams p;
  p.b = 4;
  p.X = {1, 1, 1, 1};
  p.Y = {0, 0, 0, 0};
  auto edges = gen_hard_instance(p, 100);
  std::set<EdgeKey> got;
  for (auto& e : edges) got.insert(e.ekey());
  CHECK(got == std::set<EdgeKey>{{4, 5}, {0, 4}, {1, 4}, {2, 4}, {3, 4}});
}

TEST_CASE("a dead bit position violates the connectivity constraint") {
  HardInstanceParams p;
  p.b = 3;
  p.X = {1, 0, 1};
  p.Y = {0, 0, 1};
  CHECK_THROWS_AS(gen_hard_instance(p, 0), ConstraintViolation);
}

TEST_CASE("the adversarial schedule is 3k batches of paired churn") {
  auto w = gen_lower_bound_schedule(4, 1.0, 64, 5);
  CHECK(w.batches.size() == 12);
  CHECK(w.n == 8);  // ceil(4^1.5)
  CHECK(!referee(w).has_value());
  REQUIRE(w.focus_vertex.has_value());
  // phases 2-3 alternate insert-only and delete-only batches
  for (size_t b = 4; b < 12; b += 2) {
    for (auto& up : w.batches[b]) CHECK(up.insert);
    for (auto& up : w.batches[b + 1]) CHECK(!up.insert);
    CHECK(w.batches[b].size() == w.batches[b + 1].size());
  }
}

TEST_CASE("a small exponent degenerates to roughly k vertices") {
  auto w = gen_lower_bound_schedule(4, 0.01, 64, 5);
  CHECK(w.n == 5);  // ceil(4^1.005)
  CHECK(!referee(w).has_value());
}

TEST_CASE("runs over a random stream keep the oracle green") {
  auto w = gen_random_stream(32, 4, 80, 8, 4, 15);
  RunOptions opt;
  opt.k = 4;
  opt.seed = 2;
  auto rep = run(w, opt);
  CHECK(rep.exit_code == 0);
  std::istringstream in(rep.csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == std::string(csv_header()).substr(0, line.size()));
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.find(",true,") != std::string::npos);
    ++rows;
  }
  CHECK(rows == 8);
}

TEST_CASE("reports are byte-deterministic") {
  auto w = gen_random_stream(24, 4, 40, 6, 4, 19);
  RunOptions opt;
  opt.k = 4;
  opt.seed = 3;
  auto r1 = run(w, opt);
  auto r2 = run(w, opt);
  CHECK(r1.csv == r2.csv);
}

TEST_CASE("an empty workload produces a header-only report") {
  Workload w;
  w.n = 4;
  RunOptions opt;
  opt.k = 2;
  auto rep = run(w, opt);
  CHECK(rep.csv == csv_header());
  CHECK(rep.exit_code == 0);
}

TEST_CASE("a stream that empties the graph and refills it stays green") {
  Workload w;
  w.n = 8;
  w.seed = 0;
  i64 wt = 1;
  for (Vertex u = 0; u < 8; ++u)
    for (Vertex v = u + 1; v < 8; ++v) w.initial.push_back({u, v, wt++, false});
  // delete everything in batches of 4, then rebuild a spanning path
  std::vector<Update> cur;
  for (auto& e : w.initial) {
    cur.push_back({false, e.u, e.v, 0});
    if (cur.size() == 4) {
      w.batches.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) w.batches.push_back(cur);
  std::vector<Update> rebuild;
  for (Vertex v = 1; v < 8; ++v) rebuild.push_back({true, v - 1, v, 100 + v});
  w.batches.push_back({rebuild.begin(), rebuild.begin() + 4});
  w.batches.push_back({rebuild.begin() + 4, rebuild.end()});
  REQUIRE(!referee(w).has_value());
  RunOptions opt;
  opt.k = 4;
  opt.seed = 11;
  auto rep = run(w, opt);
  CHECK(rep.exit_code == 0);
}

TEST_CASE("more machines than vertices still works") {
  auto w = gen_random_stream(6, 8, 10, 6, 8, 27);
  RunOptions opt;
  opt.k = 8;
  opt.seed = 13;
  auto rep = run(w, opt);
  CHECK(rep.exit_code == 0);
}

TEST_CASE("a two-vertex graph survives its whole update space") {
  Workload w;
  w.n = 2;
  w.initial = {{0, 1, 5, false}};
  w.batches = {{{false, 0, 1, 0}}, {{true, 0, 1, 7}}, {{false, 0, 1, 0}}};
  RunOptions opt;
  opt.k = 2;
  opt.seed = 17;
  auto rep = run(w, opt);
  CHECK(rep.exit_code == 0);
}

TEST_CASE("independent simulations run safely on separate threads") {
  RunReport r1, r2, seq1, seq2;
  auto w1 = gen_random_stream(40, 4, 120, 8, 4, 61);
  auto w2 = gen_random_stream(40, 8, 120, 8, 8, 62);
  RunOptions o1, o2;
  o1.k = 4;
  o1.seed = 1;
  o2.k = 8;
  o2.seed = 2;
  seq1 = run(w1, o1);
  seq2 = run(w2, o2);
  std::thread t1([&] { r1 = run(w1, o1); });
  std::thread t2([&] { r2 = run(w2, o2); });
  t1.join();
  t2.join();
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  CHECK(r1.csv == seq1.csv);
  CHECK(r2.csv == seq2.csv);
}

TEST_CASE("the hard schedule runs end to end and reports hub traffic") {
  auto w = gen_lower_bound_schedule(4, 1.0, 32, 23);
  RunOptions opt;
  opt.k = 4;
  opt.seed = 7;
  auto rep = run(w, opt);
  CHECK(rep.exit_code == 0);
  std::istringstream in(rep.csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  i64 focus_total = 0;
  while (std::getline(in, line)) {
    auto last = line.rfind(',');
    focus_total += std::stoll(line.substr(last + 1));
    ++rows;
  }
  CHECK(rows == 12);
  CHECK(focus_total > 0);  // the hub's host received traffic
}
