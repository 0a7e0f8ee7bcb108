// netsim.hpp - round-synchronous clique fabric for k machines.
//
// Every message is one Word: a tagged tuple of O(1) integer fields, each
// O(log n) bits. A link (ordered machine pair) carries at most one Word per
// round; that is the hard capacity invariant the whole simulator runs under.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kmst::netsim {

using i64 = std::int64_t;
using MachineId = int;

enum class Tag : std::uint8_t {
  Control,        // protocol control / counts
  NewEdge,        // (u, v, w)
  EndpointState,  // (seq, u, v, side, tree, size, out, isolated)
  EdgeRecord,     // (u, v, label_in, label_out, dir, size, tree)
  Replacement,    // hint repair: (seq, vertex, u, v, lin, lout, dir, size, tree, isolated)
  Decision,       // leader verdict plus an optional edge record
  CompWinner,     // (comp, u, v, w, comp_other)
  Candidate,      // (comp_i, comp_j, w, u, v)
  Key,            // keyed contribution / sort key
  Raw,
};

// Per-payload word cost table. Every tag packs into O(log n) bits, so each
// counts as a single unit of link capacity.
constexpr int word_cost(Tag) { return 1; }

struct Word {
  Tag tag = Tag::Raw;
  std::array<i64, 12> f{};

  friend bool operator==(const Word& a, const Word& b) {
    return a.tag == b.tag && a.f == b.f;
  }
};

struct RoundStats {
  i64 rounds = 0;
  i64 max_link_words_per_round = 0;
  i64 total_words = 0;
  i64 peak_machine_words = 0;  // filled in by the state layer, not the fabric
};

struct CapacityViolation : std::runtime_error {
  MachineId src, dst;
  int count;
  CapacityViolation(MachineId s, MachineId d, int c)
      : std::runtime_error("link capacity exceeded: " + std::to_string(s) + "->" +
                           std::to_string(d) + " carries " + std::to_string(c)),
        src(s), dst(d), count(c) {}
};

struct PreconditionViolation : std::runtime_error {
  MachineId machine;
  i64 count;
  PreconditionViolation(const std::string& what, MachineId m, i64 c)
      : std::runtime_error(what + " (machine " + std::to_string(m) + ", count " +
                           std::to_string(c) + ")"),
        machine(m), count(c) {}
};

struct EmptyQuery : std::runtime_error {
  EmptyQuery() : std::runtime_error("extreme query with no contributions") {}
};

enum class AggMode { Max, Min };

// Keyed value for extreme queries. Keys are compared lexicographically;
// the (w, u, v) triples used throughout make winners unique.
struct Keyed {
  std::array<i64, 3> key{};
  Word value;
};

struct BroadcastReq {
  MachineId src = 0;
  Word w;
};

struct SchedResult {
  i64 rounds = 0;
  std::vector<Word> words;  // global order; known to every machine afterwards
};

struct RouteMsg {
  MachineId src = 0, dst = 0;
  Word w;
};

struct RouteResult {
  i64 rounds = 0;
  std::vector<std::vector<Word>> inboxes;
};

// Sort keys carry (src, seq) so equal keys stay in a stable global order.
struct SortKey {
  std::array<i64, 5> key{};
  MachineId src = 0;
  i64 seq = 0;
};

struct SortResult {
  i64 rounds = 0;
  std::vector<std::vector<SortKey>> held;  // held[i] = ranks [i*k, (i+1)*k)
};

// One extreme query in a batched schedule: at most one contribution per
// machine; the winner materializes at the query's relay machine.
struct ExtremeQuery {
  AggMode mode = AggMode::Min;
  std::vector<std::optional<Keyed>> contrib;  // indexed by machine
};

class Fabric {
 public:
  explicit Fabric(int k);

  int k() const { return k_; }
  i64 rounds() const { return stats_.rounds; }
  const RoundStats& stats() const { return stats_; }
  i64 received_words(MachineId m) const { return received_[m]; }

  using Outbox = std::vector<std::pair<MachineId, Word>>;

  // One synchronous round. outboxes[src] lists (dst, word) sends; at most one
  // word per ordered (src, dst) pair or the run aborts with CapacityViolation.
  // Self-sends are local and free. Inboxes come back ordered by source.
  std::vector<std::vector<Word>> step_round(const std::vector<Outbox>& outboxes);

  // Clock-only rounds used to pad a phase to its fixed synchronous budget.
  void idle_rounds(i64 n);

  // Rerouted broadcast schedule: per set, one count-announcement round, then
  // the messages in global (machine, seq) order are relayed k at a time and
  // broadcast. Costs at most 2*ceil(B/k) + 3 rounds per non-empty set.
  SchedResult scheduled_broadcasts(const std::vector<std::vector<BroadcastReq>>& sets);

  // Four-step relayed extreme query: request handoff, relay fan-out,
  // contribution fan-in, result return. Always four rounds.
  Keyed converge_cast_extreme(const std::vector<std::optional<Keyed>>& values,
                              AggMode mode, MachineId requester, MachineId relay);
  std::optional<Keyed> converge_cast_extreme_opt(
      const std::vector<std::optional<Keyed>>& values, AggMode mode,
      MachineId requester, MachineId relay);

  // Each machine sources and sinks at most k messages; delivery in at most
  // two rounds (direct if no link repeats, else spread over relays chosen by
  // a bipartite edge coloring).
  RouteResult lenzen_route(const std::vector<RouteMsg>& msgs);

  // Global sort of at most k keys per machine; machine i ends up holding the
  // keys with ranks [i*k, (i+1)*k). Three ledger rounds for the splitter
  // machinery plus the delivery route.
  SortResult lenzen_sort(const std::vector<std::vector<SortKey>>& keys);

  // Waves of at most k simultaneous extreme queries, query q relayed by
  // machine (q mod k); one fan-in round per wave. Winners are returned in
  // query order together with their relay assignment.
  std::vector<std::optional<Keyed>> batched_extremes(const std::vector<ExtremeQuery>& queries,
                                                     i64* rounds_used = nullptr);
  static MachineId extreme_relay(int query_index, int k) { return query_index % k; }

 private:
  int k_;
  RoundStats stats_;
  std::vector<i64> received_;
};

// Wire helpers for keyed contributions.
Word encode_keyed(const Keyed& kv);
Keyed decode_keyed(const Word& w);
bool keyed_better(const Keyed& a, const Keyed& b, AggMode mode);  // true: a beats b

}  // namespace kmst::netsim
