#include "kmst/netsim.hpp"

#include <algorithm>
#include <cassert>
#include <map>

namespace kmst::netsim {

Fabric::Fabric(int k) : k_(k), received_(k, 0) {
  if (k < 2) throw std::invalid_argument("fabric needs k >= 2");
}

std::vector<std::vector<Word>> Fabric::step_round(const std::vector<Outbox>& outboxes) {
  assert((int)outboxes.size() == k_);
  std::vector<std::vector<Word>> inbox(k_);
  std::map<std::pair<MachineId, MachineId>, int> load;
  i64 round_words = 0;
  i64 max_link = 0;
  // iterate sources in ascending order; with one word per link this leaves
  // every inbox ordered by source index
  for (MachineId src = 0; src < k_; ++src) {
    for (const auto& [dst, w] : outboxes[src]) {
      if (dst < 0 || dst >= k_) throw std::invalid_argument("bad destination");
      if (dst == src) {
        inbox[src].push_back(w);  // local, no link use
        continue;
      }
      int c = ++load[{src, dst}];
      max_link = std::max<i64>(max_link, c);
      if (c > 1) throw CapacityViolation(src, dst, c);
      round_words += word_cost(w.tag);
      received_[dst] += word_cost(w.tag);
      inbox[dst].push_back(w);
    }
  }
  stats_.rounds += 1;
  stats_.total_words += round_words;
  stats_.max_link_words_per_round = std::max(stats_.max_link_words_per_round, max_link);
  return inbox;
}

void Fabric::idle_rounds(i64 n) {
  if (n < 0) throw std::invalid_argument("negative idle round count");
  stats_.rounds += n;
}

SchedResult Fabric::scheduled_broadcasts(const std::vector<std::vector<BroadcastReq>>& sets) {
  SchedResult res;
  i64 start = stats_.rounds;
  for (const auto& set : sets) {
    if (set.empty()) continue;  // degenerate set, statically known, cost 0
    // global order: by machine number, then by message number
    std::vector<BroadcastReq> ordered = set;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const BroadcastReq& a, const BroadcastReq& b) { return a.src < b.src; });
    // count announcement: every machine tells every other its per-set count
    {
      std::vector<Outbox> out(k_);
      for (MachineId m = 0; m < k_; ++m) {
        Word cnt;
        cnt.tag = Tag::Control;
        cnt.f[0] = (i64)std::count_if(ordered.begin(), ordered.end(),
                                      [&](const BroadcastReq& r) { return r.src == m; });
        for (MachineId d = 0; d < k_; ++d)
          if (d != m) out[m].push_back({d, cnt});
      }
      step_round(out);
    }
    // k at a time: relay message i*k+j to machine j, then j broadcasts it
    i64 nwaves = ((i64)ordered.size() + k_ - 1) / k_;
    for (i64 wave = 0; wave < nwaves; ++wave) {
      std::vector<Outbox> relay_out(k_);
      for (int j = 0; j < k_; ++j) {
        i64 idx = wave * k_ + j;
        if (idx >= (i64)ordered.size()) break;
        relay_out[ordered[idx].src].push_back({j, ordered[idx].w});
      }
      step_round(relay_out);
      std::vector<Outbox> bcast_out(k_);
      for (int j = 0; j < k_; ++j) {
        i64 idx = wave * k_ + j;
        if (idx >= (i64)ordered.size()) break;
        for (MachineId d = 0; d < k_; ++d)
          if (d != j) bcast_out[j].push_back({d, ordered[idx].w});
      }
      step_round(bcast_out);
    }
    for (const auto& r : ordered) res.words.push_back(r.w);
  }
  res.rounds = stats_.rounds - start;
  return res;
}

Word encode_keyed(const Keyed& kv) {
  Word w;
  w.tag = Tag::Key;
  w.f[0] = kv.key[0];
  w.f[1] = kv.key[1];
  w.f[2] = kv.key[2];
  w.f[3] = (i64)kv.value.tag;
  for (int i = 0; i < 8; ++i) w.f[4 + i] = kv.value.f[i];
  return w;
}

Keyed decode_keyed(const Word& w) {
  Keyed kv;
  kv.key = {w.f[0], w.f[1], w.f[2]};
  kv.value.tag = (Tag)w.f[3];
  for (int i = 0; i < 8; ++i) kv.value.f[i] = w.f[4 + i];
  return kv;
}

bool keyed_better(const Keyed& a, const Keyed& b, AggMode mode) {
  if (a.key != b.key) return mode == AggMode::Max ? a.key > b.key : a.key < b.key;
  return false;
}

std::optional<Keyed> Fabric::converge_cast_extreme_opt(
    const std::vector<std::optional<Keyed>>& values, AggMode mode, MachineId requester,
    MachineId relay) {
  assert((int)values.size() == k_);
  Word req;
  req.tag = Tag::Control;
  // 1: requester hands the computation to the relay
  {
    std::vector<Outbox> out(k_);
    out[requester].push_back({relay, req});
    step_round(out);
  }
  // 2: relay requests contributions from everyone
  {
    std::vector<Outbox> out(k_);
    for (MachineId d = 0; d < k_; ++d)
      if (d != relay) out[relay].push_back({d, req});
    step_round(out);
  }
  // 3: contributions fan in on the relay's links
  {
    std::vector<Outbox> out(k_);
    for (MachineId m = 0; m < k_; ++m)
      if (values[m]) out[m].push_back({relay, encode_keyed(*values[m])});
    step_round(out);
  }
  std::optional<Keyed> best;
  for (MachineId m = 0; m < k_; ++m) {
    if (!values[m]) continue;
    if (!best || keyed_better(*values[m], *best, mode)) best = *values[m];
  }
  // 4: result returns to the requester
  {
    std::vector<Outbox> out(k_);
    if (best) out[relay].push_back({requester, encode_keyed(*best)});
    step_round(out);
  }
  return best;
}

Keyed Fabric::converge_cast_extreme(const std::vector<std::optional<Keyed>>& values,
                                    AggMode mode, MachineId requester, MachineId relay) {
  auto r = converge_cast_extreme_opt(values, mode, requester, relay);
  if (!r) throw EmptyQuery();
  return *r;
}

namespace {

// Exact bipartite edge coloring with max-degree colors. Classic alternating
// chain repair: the a/b chain rooted at the dst endpoint never reaches the
// src endpoint, so flipping it frees color a on both sides.
std::vector<int> bipartite_edge_color(const std::vector<std::pair<int, int>>& edges, int n) {
  int maxdeg = 1;
  {
    std::vector<int> ds(n, 0), dd(n, 0);
    for (auto& [s, d] : edges) maxdeg = std::max({maxdeg, ++ds[s], ++dd[d]});
  }
  const int D = maxdeg;
  std::vector<std::vector<int>> cs(n, std::vector<int>(D, -1));  // src side slots
  std::vector<std::vector<int>> cd(n, std::vector<int>(D, -1));  // dst side slots
  std::vector<int> color(edges.size(), -1);
  auto free_color = [&](const std::vector<int>& slots) {
    for (int c = 0; c < (int)slots.size(); ++c)
      if (slots[c] < 0) return c;
    return -1;
  };
  for (int e = 0; e < (int)edges.size(); ++e) {
    auto [s, d] = edges[e];
    int a = free_color(cs[s]);
    int b = free_color(cd[d]);
    assert(a >= 0 && b >= 0);
    if (a != b && cd[d][a] >= 0) {
      // collect the maximal a/b alternating chain starting from d's a-edge
      std::vector<int> chain;
      int cur = cd[d][a];
      bool via_src = true;
      while (cur >= 0) {
        chain.push_back(cur);
        auto [s2, d2] = edges[cur];
        int other = (color[cur] == a) ? b : a;
        cur = via_src ? cs[s2][other] : cd[d2][other];
        via_src = !via_src;
      }
      for (int ce : chain) {
        auto [s2, d2] = edges[ce];
        cs[s2][color[ce]] = -1;
        cd[d2][color[ce]] = -1;
      }
      for (int ce : chain) color[ce] = (color[ce] == a) ? b : a;
      for (int ce : chain) {
        auto [s2, d2] = edges[ce];
        cs[s2][color[ce]] = ce;
        cd[d2][color[ce]] = ce;
      }
    }
    color[e] = a;
    cs[s][a] = cd[d][a] = e;
  }
  return color;
}

}  // namespace

RouteResult Fabric::lenzen_route(const std::vector<RouteMsg>& msgs) {
  RouteResult res;
  res.inboxes.assign(k_, {});
  std::vector<i64> nsrc(k_, 0), ndst(k_, 0);
  for (const auto& m : msgs) {
    ++nsrc[m.src];
    ++ndst[m.dst];
  }
  for (MachineId m = 0; m < k_; ++m) {
    if (nsrc[m] > k_) throw PreconditionViolation("route source overloaded", m, nsrc[m]);
    if (ndst[m] > k_) throw PreconditionViolation("route destination overloaded", m, ndst[m]);
  }
  std::vector<RouteMsg> cross;
  for (const auto& m : msgs) {
    if (m.src == m.dst)
      res.inboxes[m.dst].push_back(m.w);
    else
      cross.push_back(m);
  }
  if (cross.empty()) return res;

  bool direct_ok = true;
  {
    std::map<std::pair<MachineId, MachineId>, int> mult;
    for (const auto& m : cross)
      if (++mult[{m.src, m.dst}] > 1) direct_ok = false;
  }
  i64 start = stats_.rounds;
  if (direct_ok) {
    std::vector<Outbox> out(k_);
    for (const auto& m : cross) out[m.src].push_back({m.dst, m.w});
    auto in = step_round(out);
    for (MachineId d = 0; d < k_; ++d)
      for (auto& w : in[d]) res.inboxes[d].push_back(w);
  } else {
    // relay = edge color: each color class is a matching, so both the spread
    // and the delivery round respect per-link capacity
    std::vector<std::pair<int, int>> es;
    es.reserve(cross.size());
    for (const auto& m : cross) es.push_back({m.src, m.dst});
    auto col = bipartite_edge_color(es, k_);
    std::vector<Outbox> spread(k_);
    std::vector<std::vector<std::pair<MachineId, Word>>> at_relay(k_);
    for (size_t i = 0; i < cross.size(); ++i) {
      int relay = col[i] % k_;
      spread[cross[i].src].push_back({relay, cross[i].w});
      at_relay[relay].push_back({cross[i].dst, cross[i].w});
    }
    step_round(spread);
    std::vector<Outbox> deliver(k_);
    for (MachineId r = 0; r < k_; ++r)
      for (auto& [dst, w] : at_relay[r]) deliver[r].push_back({dst, w});
    auto in = step_round(deliver);
    for (MachineId d = 0; d < k_; ++d)
      for (auto& w : in[d]) res.inboxes[d].push_back(w);
  }
  res.rounds = stats_.rounds - start;
  return res;
}

SortResult Fabric::lenzen_sort(const std::vector<std::vector<SortKey>>& keys) {
  assert((int)keys.size() == k_);
  for (MachineId m = 0; m < k_; ++m)
    if ((i64)keys[m].size() > k_)
      throw PreconditionViolation("sort input overloaded", m, (i64)keys[m].size());
  auto cmp = [](const SortKey& a, const SortKey& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.src != b.src) return a.src < b.src;
    return a.seq < b.seq;
  };
  std::vector<SortKey> all;
  for (const auto& ks : keys) all.insert(all.end(), ks.begin(), ks.end());
  std::sort(all.begin(), all.end(), cmp);

  i64 start = stats_.rounds;
  idle_rounds(3);  // splitter selection / rank agreement ledger charge
  std::vector<RouteMsg> msgs;
  for (size_t r = 0; r < all.size(); ++r) {
    RouteMsg m;
    m.src = all[r].src;
    m.dst = (MachineId)(r / k_);
    m.w.tag = Tag::Key;
    for (int i = 0; i < 5; ++i) m.w.f[i] = all[r].key[i];
    m.w.f[5] = all[r].src;
    m.w.f[6] = all[r].seq;
    msgs.push_back(m);
  }
  bool any_cross = std::any_of(msgs.begin(), msgs.end(),
                               [](const RouteMsg& m) { return m.src != m.dst; });
  if (any_cross) {
    i64 before = stats_.rounds;
    lenzen_route(msgs);
    idle_rounds(2 - (stats_.rounds - before));  // fixed two-round delivery slot
  }

  SortResult res;
  res.held.assign(k_, {});
  for (size_t r = 0; r < all.size(); ++r) res.held[r / k_].push_back(all[r]);
  res.rounds = stats_.rounds - start;
  return res;
}

std::vector<std::optional<Keyed>> Fabric::batched_extremes(
    const std::vector<ExtremeQuery>& queries, i64* rounds_used) {
  i64 start = stats_.rounds;
  std::vector<std::optional<Keyed>> winners(queries.size());
  i64 nwaves = ((i64)queries.size() + k_ - 1) / k_;
  for (i64 wave = 0; wave < nwaves; ++wave) {
    std::vector<Outbox> out(k_);
    for (int j = 0; j < k_; ++j) {
      i64 q = wave * k_ + j;
      if (q >= (i64)queries.size()) break;
      MachineId relay = extreme_relay((int)q, k_);
      for (MachineId m = 0; m < k_; ++m)
        if (queries[q].contrib[m]) out[m].push_back({relay, encode_keyed(*queries[q].contrib[m])});
    }
    step_round(out);
    for (int j = 0; j < k_; ++j) {
      i64 q = wave * k_ + j;
      if (q >= (i64)queries.size()) break;
      for (MachineId m = 0; m < k_; ++m) {
        const auto& c = queries[q].contrib[m];
        if (!c) continue;
        if (!winners[q] || keyed_better(*c, *winners[q], queries[q].mode)) winners[q] = *c;
      }
    }
  }
  if (rounds_used) *rounds_used = stats_.rounds - start;
  return winners;
}

}  // namespace kmst::netsim
