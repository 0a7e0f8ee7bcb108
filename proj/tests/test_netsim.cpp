#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kmst/netsim.hpp"

using namespace kmst::netsim;

namespace {

Word raw(i64 x) {
  Word w;
  w.tag = Tag::Raw;
  w.f[0] = x;
  return w;
}

}  // namespace

TEST_CASE("step_round delivers a single message in one round") {
  Fabric f(2);
  std::vector<Fabric::Outbox> out(2);
  out[0].push_back({1, raw(42)});
  auto in = f.step_round(out);
  CHECK(f.rounds() == 1);
  REQUIRE(in[1].size() == 1);
  CHECK(in[1][0].f[0] == 42);
  CHECK(f.stats().max_link_words_per_round == 1);
}

TEST_CASE("step_round handles full clique traffic in one round") {
  Fabric f(4);
  std::vector<Fabric::Outbox> out(4);
  for (MachineId s = 0; s < 4; ++s)
    for (MachineId d = 0; d < 4; ++d)
      if (s != d) out[s].push_back({d, raw(s * 10 + d)});
  auto in = f.step_round(out);
  CHECK(f.rounds() == 1);
  for (MachineId d = 0; d < 4; ++d) CHECK(in[d].size() == 3);
  CHECK(f.stats().max_link_words_per_round == 1);
  CHECK(f.stats().total_words == 12);
}

TEST_CASE("two words on one link abort the round") {
  Fabric f(2);
  std::vector<Fabric::Outbox> out(2);
  out[0].push_back({1, raw(1)});
  out[0].push_back({1, raw(2)});
  CHECK_THROWS_AS(f.step_round(out), CapacityViolation);
}

TEST_CASE("broadcast schedule: one per machine fits the pinned bound") {
  Fabric f(8);
  std::vector<BroadcastReq> set;
  for (MachineId m = 0; m < 8; ++m) set.push_back({m, raw(m)});
  auto res = f.scheduled_broadcasts({set});
  CHECK(res.rounds <= 5);  // 2*ceil(8/8) + 3
  CHECK(res.words.size() == 8);
}

TEST_CASE("broadcast schedule: skewed load relays through the others") {
  Fabric f(8);
  std::vector<BroadcastReq> set;
  for (int i = 0; i < 8; ++i) set.push_back({0, raw(i)});
  auto res = f.scheduled_broadcasts({set});
  CHECK(res.rounds <= 5);
}

TEST_CASE("broadcast schedule: empty call costs nothing") {
  Fabric f(4);
  auto res = f.scheduled_broadcasts({});
  CHECK(res.rounds == 0);
  auto res2 = f.scheduled_broadcasts({{}});
  CHECK(res2.rounds == 0);
}

TEST_CASE("rerouting bound holds over random workloads for every k") {
  for (int k : {2, 4, 8, 16}) {
    std::mt19937_64 rng(99 + k);
    for (int iter = 0; iter < 20; ++iter) {
      int nsets = 1 + (int)(rng() % 4);
      std::vector<std::vector<BroadcastReq>> sets(nsets);
      i64 bound = 0;
      for (auto& set : sets) {
        i64 b = rng() % (3 * k);
        for (i64 i = 0; i < b; ++i) set.push_back({(MachineId)(rng() % k), raw(i)});
        if (b > 0) bound += 2 * ((b + k - 1) / k);
        bound += 3;
      }
      Fabric f(k);
      auto res = f.scheduled_broadcasts(sets);
      CHECK(res.rounds <= bound);
    }
  }
}

TEST_CASE("converge cast returns the maximum over three machines") {
  Fabric f(3);
  std::vector<std::optional<Keyed>> vals(3);
  vals[0] = Keyed{{3, 0, 0}, raw(3)};
  vals[1] = Keyed{{9, 0, 0}, raw(9)};
  vals[2] = Keyed{{4, 0, 0}, raw(4)};
  auto best = f.converge_cast_extreme(vals, AggMode::Max, 0, 1);
  CHECK(best.key[0] == 9);
  CHECK(f.rounds() == 4);
}

TEST_CASE("converge cast with a single contributor returns it") {
  Fabric f(4);
  std::vector<std::optional<Keyed>> vals(4);
  vals[2] = Keyed{{7, 0, 0}, raw(7)};
  auto best = f.converge_cast_extreme(vals, AggMode::Min, 0, 3);
  CHECK(best.key[0] == 7);
}

TEST_CASE("converge cast breaks weight ties by the id pair") {
  Fabric f(3);
  std::vector<std::optional<Keyed>> vals(3);
  vals[0] = Keyed{{5, 1, 2}, raw(0)};
  vals[1] = Keyed{{5, 0, 9}, raw(1)};
  vals[2] = Keyed{{5, 1, 1}, raw(2)};
  auto best = f.converge_cast_extreme(vals, AggMode::Min, 0, 1);
  CHECK(best.key == std::array<i64, 3>{5, 0, 9});
}

TEST_CASE("empty converge cast is a caller error") {
  Fabric f(2);
  std::vector<std::optional<Keyed>> vals(2);
  CHECK_THROWS_AS(f.converge_cast_extreme(vals, AggMode::Max, 0, 1), EmptyQuery);
}

TEST_CASE("lenzen route: a permutation needs one round") {
  Fabric f(6);
  std::vector<RouteMsg> msgs;
  for (MachineId m = 0; m < 6; ++m) msgs.push_back({m, (m + 1) % 6, raw(m)});
  auto res = f.lenzen_route(msgs);
  CHECK(res.rounds == 1);
  for (MachineId m = 0; m < 6; ++m) REQUIRE(res.inboxes[(m + 1) % 6].size() == 1);
}

TEST_CASE("lenzen route: one source fanning out to everyone stays within bound") {
  Fabric f(5);
  std::vector<RouteMsg> msgs;
  for (MachineId d = 0; d < 5; ++d) msgs.push_back({0, d, raw(d)});
  auto res = f.lenzen_route(msgs);
  CHECK(res.rounds <= 4);
}

TEST_CASE("lenzen route: repeated link forces the relay plan, still O(1)") {
  Fabric f(4);
  std::vector<RouteMsg> msgs;
  for (int i = 0; i < 4; ++i) msgs.push_back({0, 1, raw(i)});
  auto res = f.lenzen_route(msgs);
  CHECK(res.rounds <= 4);
  CHECK(res.inboxes[1].size() == 4);
}

TEST_CASE("lenzen route rejects an overloaded destination") {
  Fabric f(3);
  std::vector<RouteMsg> msgs;
  for (int i = 0; i < 4; ++i) msgs.push_back({i % 3, 1, raw(i)});
  CHECK_THROWS_AS(f.lenzen_route(msgs), PreconditionViolation);
}

TEST_CASE("lenzen route round count is k-independent at max load") {
  std::vector<i64> counts;
  for (int k : {2, 4, 8, 16}) {
    Fabric f(k);
    std::vector<RouteMsg> msgs;
    for (MachineId s = 0; s < k; ++s)
      for (int i = 0; i < k; ++i) msgs.push_back({s, (MachineId)((s + 1) % k), raw(i)});
    auto res = f.lenzen_route(msgs);
    counts.push_back(res.rounds);
  }
  for (auto c : counts) CHECK(c == counts[0]);
}

namespace {

SortKey sk(i64 v, MachineId src, i64 seq) {
  SortKey s;
  s.key = {v, 0, 0, 0, 0};
  s.src = src;
  s.seq = seq;
  return s;
}

}  // namespace

TEST_CASE("lenzen sort balances ranks across machines") {
  Fabric f(2);
  std::vector<std::vector<SortKey>> keys(2);
  keys[0] = {sk(5, 0, 0), sk(1, 0, 1)};
  keys[1] = {sk(4, 1, 0), sk(2, 1, 1)};
  auto res = f.lenzen_sort(keys);
  CHECK(res.rounds <= 6);
  REQUIRE(res.held[0].size() == 2);
  CHECK(res.held[0][0].key[0] == 1);
  CHECK(res.held[0][1].key[0] == 2);
  CHECK(res.held[1][0].key[0] == 4);
  CHECK(res.held[1][1].key[0] == 5);
}

TEST_CASE("lenzen sort keeps equal keys in (key, src, seq) order") {
  Fabric f(3);
  std::vector<std::vector<SortKey>> keys(3);
  for (MachineId m = 0; m < 3; ++m)
    for (i64 i = 0; i < 3; ++i) keys[m].push_back(sk(7, m, i));
  auto res = f.lenzen_sort(keys);
  std::vector<std::pair<MachineId, i64>> order;
  for (auto& held : res.held)
    for (auto& s : held) order.push_back({s.src, s.seq});
  for (size_t i = 1; i < order.size(); ++i) CHECK(order[i - 1] < order[i]);
}

TEST_CASE("lenzen sort leaves balanced sorted input in place") {
  Fabric f(2);
  std::vector<std::vector<SortKey>> keys(2);
  keys[0] = {sk(1, 0, 0), sk(2, 0, 1)};
  keys[1] = {sk(3, 1, 0), sk(4, 1, 1)};
  i64 words_before = f.stats().total_words;
  auto res = f.lenzen_sort(keys);
  CHECK(res.held[0][0].key[0] == 1);
  CHECK(res.held[1][1].key[0] == 4);
  CHECK(f.stats().total_words == words_before);  // nothing crossed a link
}

TEST_CASE("lenzen sort round count is k-independent at max load") {
  std::vector<i64> counts;
  for (int k : {2, 4, 8}) {
    Fabric f(k);
    std::mt19937_64 rng(7);
    std::vector<std::vector<SortKey>> keys(k);
    for (MachineId m = 0; m < k; ++m)
      for (i64 i = 0; i < k; ++i) keys[m].push_back(sk((i64)(rng() % 1000), m, i));
    auto res = f.lenzen_sort(keys);
    counts.push_back(res.rounds);
  }
  for (auto c : counts) CHECK(c == counts[0]);
}

TEST_CASE("identical runs produce identical ledgers and inboxes") {
  auto drive = [](int seed) {
    Fabric f(4);
    std::mt19937_64 rng((std::uint64_t)seed);
    std::vector<std::vector<Word>> last;
    for (int r = 0; r < 10; ++r) {
      std::vector<std::vector<BroadcastReq>> sets(1);
      i64 b = rng() % 12;
      for (i64 i = 0; i < b; ++i) sets[0].push_back({(MachineId)(rng() % 4), raw((i64)rng())});
      f.scheduled_broadcasts(sets);
    }
    return std::pair{f.stats().rounds, f.stats().total_words};
  };
  CHECK(drive(5) == drive(5));
}

TEST_CASE("batched extremes answer every query in wave order") {
  Fabric f(4);
  std::vector<ExtremeQuery> qs(9);
  for (size_t q = 0; q < qs.size(); ++q) {
    qs[q].mode = AggMode::Min;
    qs[q].contrib.assign(4, std::nullopt);
    for (MachineId m = 0; m < 4; ++m)
      qs[q].contrib[m] = Keyed{{(i64)((q * 7 + m * 3) % 11), (i64)m, 0}, raw((i64)m)};
  }
  i64 rounds = 0;
  auto winners = f.batched_extremes(qs, &rounds);
  CHECK(rounds == 3);  // ceil(9/4) waves
  for (size_t q = 0; q < qs.size(); ++q) {
    REQUIRE(winners[q].has_value());
    i64 want = 1 << 30;
    for (MachineId m = 0; m < 4; ++m) want = std::min(want, (i64)((q * 7 + m * 3) % 11));
    CHECK(winners[q]->key[0] == want);
  }
}
