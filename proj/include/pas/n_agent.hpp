#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pas/core.hpp"
#include "pas/mms.hpp"
#include "pas/two_agent.hpp"

namespace pas {

/// Which agent receives the extra plant when the queue has odd length.
enum class OddPlantTarget {
  kSecondAgent,     // i_2, the first agent of N1
  kLastOfOpposite,  // the last agent of N1
};

struct NAgentOptions {
  std::size_t exact_cap = kDefaultExactCap;
  OddPlantTarget odd_plant = OddPlantTarget::kSecondAgent;
};

/// ceil(3n/2), the relaxed benchmark's bundle count.
inline std::size_t relaxed_k(std::size_t n) { return (3 * n + 1) / 2; }

struct NAgentEvent {
  enum class Kind { kPlant, kOddPlant, kSteal, kKeep };
  int level = 0;
  Kind kind = Kind::kPlant;
  Agent agent = 0;   // who plants, steals or keeps
  Agent other = 0;   // recipient of a plant, victim of a steal
  Bundle items;      // a single item, or the kept bundle
};

inline const char* to_string(NAgentEvent::Kind k) {
  switch (k) {
    case NAgentEvent::Kind::kPlant:
      return "plant";
    case NAgentEvent::Kind::kOddPlant:
      return "odd_plant";
    case NAgentEvent::Kind::kSteal:
      return "steal";
    case NAgentEvent::Kind::kKeep:
      return "keep";
  }
  return "?";
}

template <ValueType V>
struct LargePhase {
  // Threshold data, one entry per agent; empty when the mask side channel is used.
  std::vector<V> mu;
  std::vector<MmsMethod> mu_method;
  bool used_mask = false;
  std::vector<std::pair<Agent, Item>> picks;
  std::optional<Agent> leftover_agent;
  Bundle leftover;
  std::vector<Agent> live;
  Bundle remaining;
};

template <ValueType V>
struct NAgentTrace {
  LargePhase<V> large;
  std::vector<std::pair<Agent, Item>> tentative_picks;
  std::vector<Bundle> tentative;
  std::vector<NAgentEvent> events;
  int depth = 0;
  // Items never offered to the agent: taken before its turn or stolen from its side.
  std::vector<std::size_t> gray;
  Allocation final;
};

// ---------------------------------------------------------------------------
// Phases
// ---------------------------------------------------------------------------

/// Sequential single picks in queue order; agents facing an empty pool get
/// nothing. Returns (agent, item) pairs and removes the picks from the pool.
template <class Pref>
std::vector<std::pair<Agent, Item>> allocate_best(const std::vector<Agent>& queue, Bundle& pool, const Pref& pref) {
  std::vector<std::pair<Agent, Item>> out;
  for (Agent i : queue) {
    if (pool.empty()) break;
    const Item it = pref(i, pool);
    pool.erase(it);
    out.emplace_back(i, it);
  }
  return out;
}

/// Agents whose top predicted remaining item is at least half their predicted
/// n-bundle maximin share take their top reported item and leave, lowest index
/// first. If every agent leaves, the last one to leave takes whatever remains.
template <ValueType V>
LargePhase<V> allocate_large(const std::vector<std::vector<V>>& reports, const PredictionProfile<V>& preds,
                             Allocation& x, const NAgentOptions& opt = {}) {
  const std::size_t n = reports.size();
  const std::size_t m = n ? reports[0].size() : 0;
  LargePhase<V> ph;
  if (preds.values) {
    for (Agent i = 0; i < n; ++i) {
      auto mu = mms_auto(std::span<const V>((*preds.values)[i]), n, opt.exact_cap);
      ph.mu.push_back(mu.mu);
      ph.mu_method.push_back(mu.method);
    }
  } else if (preds.large_mask) {
    ph.used_mask = true;
  } else {
    throw InputError("large-item phase needs value predictions or a large-item mask");
  }
  auto is_large = [&](Agent i, Item j) {
    if (ph.used_mask) return bool((*preds.large_mask)[i][j]);
    const V& v = (*preds.values)[i][j];
    return !(v + v < ph.mu[i]);
  };

  Bundle rest = Bundle::range(m);
  std::vector<Agent> live(n);
  for (Agent i = 0; i < n; ++i) live[i] = i;
  for (;;) {
    std::optional<std::size_t> who;
    for (std::size_t q = 0; q < live.size() && !who; ++q) {
      const Agent i = live[q];
      if (rest.empty()) break;
      const Item top = favorite(preds.orderings[i], rest);
      if (is_large(i, top)) who = q;
    }
    if (!who) break;
    const Agent i = live[*who];
    const Item it = favorite(std::span<const V>(reports[i]), rest);
    rest.erase(it);
    x[i].insert(it);
    ph.picks.emplace_back(i, it);
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(*who));
  }
  if (live.empty() && !rest.empty()) {
    const Agent last = ph.picks.back().first;
    for (Item it : rest) x[last].insert(it);
    ph.leftover_agent = last;
    ph.leftover = rest;
    rest = Bundle{};
  }
  ph.live = live;
  ph.remaining = rest;
  return ph;
}

/// Round robin on predictions: first round in queue order, later rounds in
/// reverse. Returns the per-agent bundles (indexed by agent) and pick order.
inline std::vector<Bundle> tentative_rr(const std::vector<Agent>& queue, const Bundle& pool,
                                        const std::vector<Ordering>& orderings, std::size_t n,
                                        std::vector<std::pair<Agent, Item>>* picks = nullptr) {
  std::vector<Bundle> a(n);
  if (queue.empty()) return a;
  Bundle rest = pool;
  const std::vector<Agent> reversed(queue.rbegin(), queue.rend());
  auto pref = [&](Agent i, const Bundle& p) { return favorite(orderings[i], p); };
  bool first = true;
  while (!rest.empty()) {
    for (auto [i, it] : allocate_best(first ? queue : reversed, rest, pref)) {
      a[i].insert(it);
      if (picks) picks->emplace_back(i, it);
    }
    first = false;
  }
  return a;
}

namespace detail {

template <ValueType V>
class SplitPlantSteal {
 public:
  SplitPlantSteal(const std::vector<std::vector<V>>& reports, const PredictionProfile<V>& preds, Allocation& x,
                  NAgentTrace<V>& trace, const NAgentOptions& opt)
      : reports_(reports), preds_(preds), x_(x), trace_(trace), opt_(opt), seen_(reports.size()) {}

  void run(const std::vector<Agent>& queue, std::vector<Bundle>& a) {
    recurse(queue, a, true, 1);
  }

  const std::vector<Bundle>& seen() const { return seen_; }

 private:
  Agent owner_of(const std::vector<Agent>& group, const std::vector<Bundle>& a, Item it) const {
    for (Agent j : group)
      if (a[j].contains(it)) return j;
    throw InternalError("stolen item has no tentative owner");
  }

  void recurse(const std::vector<Agent>& queue, std::vector<Bundle>& a, bool first_level, int level) {
    if (queue.empty()) return;
    if (queue.size() == 1) {
      const Agent i = queue[0];
      for (Item it : a[i]) x_[i].insert(it);
      seen_[i] = set_union(seen_[i], a[i]);
      trace_.events.push_back({level, NAgentEvent::Kind::kKeep, i, i, a[i]});
      a[i] = Bundle{};
      return;
    }
    trace_.depth = std::max(trace_.depth, level);
    std::vector<Agent> g0, g1;
    for (std::size_t q = 0; q < queue.size(); ++q) (q % 2 == 0 ? g0 : g1).push_back(queue[q]);
    const auto& ord = preds_.orderings;

    for (std::size_t t = 0; t < g1.size(); ++t) {
      const Agent p = g0[t], q = g1[t];
      std::optional<Item> jp, jq;
      if (!a[p].empty()) jp = favorite(ord[p], a[p]);
      if (!a[q].empty()) jq = favorite(ord[q], a[q]);
      if (jp) {
        a[p].erase(*jp);
        a[q].insert(*jp);
        trace_.events.push_back({level, NAgentEvent::Kind::kPlant, p, q, Bundle{*jp}});
      }
      if (jq) {
        a[q].erase(*jq);
        a[p].insert(*jq);
        trace_.events.push_back({level, NAgentEvent::Kind::kPlant, q, p, Bundle{*jq}});
      }
    }
    if (queue.size() % 2 == 1) {
      const Agent p = queue.back();
      const Agent q = opt_.odd_plant == OddPlantTarget::kSecondAgent ? queue[1] : g1.back();
      if (!a[p].empty()) {
        const Item j = favorite(ord[p], a[p]);
        a[p].erase(j);
        a[q].insert(j);
        trace_.events.push_back({level, NAgentEvent::Kind::kOddPlant, p, q, Bundle{j}});
      }
    }

    for (int b = 0; b < 2; ++b) {
      const auto& mine = b == 0 ? g0 : g1;
      const auto& theirs = b == 0 ? g1 : g0;
      Bundle pool;
      for (Agent j : theirs) pool = set_union(pool, a[j]);
      for (Agent i : mine) {
        if (pool.empty()) break;
        seen_[i] = set_union(seen_[i], pool);
        const Item it = favorite(std::span<const V>(reports_[i]), pool);
        pool.erase(it);
        const Agent victim = owner_of(theirs, a, it);
        a[victim].erase(it);
        x_[i].insert(it);
        trace_.events.push_back({level, NAgentEvent::Kind::kSteal, i, victim, Bundle{it}});
      }
    }

    if (first_level) {
      std::reverse(g0.begin(), g0.end());
      std::reverse(g1.begin(), g1.end());
    }
    recurse(g0, a, false, level + 1);
    recurse(g1, a, false, level + 1);
  }

  const std::vector<std::vector<V>>& reports_;
  const PredictionProfile<V>& preds_;
  Allocation& x_;
  NAgentTrace<V>& trace_;
  const NAgentOptions& opt_;
  std::vector<Bundle> seen_;
};

}  // namespace detail

/// Recursive split, plant and steal on a tentative allocation. Adds the
/// outcome to x and appends events to the trace.
template <ValueType V>
std::vector<Bundle> split_plant_steal(const std::vector<Agent>& queue, std::vector<Bundle> a,
                                      const std::vector<std::vector<V>>& reports, const PredictionProfile<V>& preds,
                                      Allocation& x, NAgentTrace<V>& trace, const NAgentOptions& opt = {}) {
  std::vector<bool> held(reports.empty() ? 0 : reports[0].size(), false);
  for (Agent i : queue)
    for (Item it : a[i]) {
      if (held[it]) throw InternalError("tentative bundles overlap");
      held[it] = true;
    }
  detail::SplitPlantSteal<V> sps(reports, preds, x, trace, opt);
  sps.run(queue, a);
  return sps.seen();
}

template <ValueType V>
struct NAgentOutcome {
  Allocation allocation;
  NAgentTrace<V> trace;
};

/// Large-item phase, tentative round robin, then recursive plant and steal.
template <ValueType V>
NAgentOutcome<V> allocate_n_agent(const std::vector<std::vector<V>>& reports, const PredictionProfile<V>& preds,
                                  const NAgentOptions& opt = {}) {
  const std::size_t n = reports.size();
  if (n < 2) throw PreconditionError("the n-agent mechanism needs n >= 2");
  if (preds.n() != n) throw InputError("prediction profile has the wrong number of agents");
  const std::size_t m = reports[0].size();
  for (Agent i = 0; i < n; ++i) {
    if (reports[i].size() != m || preds.orderings[i].size() != m) throw InputError("inconsistent item count");
    if (preds.values && (*preds.values)[i].size() != m) throw InputError("inconsistent item count");
    if (preds.large_mask && (*preds.large_mask)[i].size() != m) throw InputError("inconsistent item count");
  }
  NAgentOutcome<V> out;
  out.allocation.bundles.assign(n, Bundle{});
  auto& tr = out.trace;
  tr.large = allocate_large(reports, preds, out.allocation, opt);
  tr.tentative = tentative_rr(tr.large.live, tr.large.remaining, preds.orderings, n, &tr.tentative_picks);
  const auto seen = split_plant_steal(tr.large.live, tr.tentative, reports, preds, out.allocation, tr, opt);

  tr.gray.assign(n, 0);
  for (Agent i : tr.large.live) tr.gray[i] = m - seen[i].size();
  tr.final = out.allocation;
  if (!out.allocation.is_complete(m)) throw InternalError("n-agent mechanism left items unallocated");
  return out;
}

template <ValueType V>
struct NAgentReport {
  MechanismReport<V> report;
  NAgentTrace<V> trace;
  std::size_t k_relaxed = 0;
  std::vector<V> mu_relaxed;
  // Ratio against mu^{ceil(3n/2)}; absent when m <= ceil(3n/2) + 1 ("bound vacuous").
  std::vector<std::optional<Ratio<V>>> relaxed_ratios;
  bool relaxed_bound_vacuous = false;
};

template <ValueType V>
NAgentReport<V> run_n_agent_mechanism(const Instance<V>& inst, const PredictionProfile<V>& preds,
                                      const NAgentOptions& opt = {}) {
  auto outcome = allocate_n_agent(inst.valuations(), preds, opt);
  NAgentReport<V> rep;
  rep.report.mechanism = std::string(kNAgentMechanismName);
  rep.report.allocation = outcome.allocation;
  fill_report(rep.report, inst, opt.exact_cap);
  rep.trace = std::move(outcome.trace);
  rep.k_relaxed = relaxed_k(inst.n());
  rep.relaxed_bound_vacuous = inst.m() <= rep.k_relaxed + 1;
  for (Agent i = 0; i < inst.n(); ++i) {
    const V mu = mms_auto(inst.values(i), rep.k_relaxed, opt.exact_cap).mu;
    rep.mu_relaxed.push_back(mu);
    if (rep.relaxed_bound_vacuous)
      rep.relaxed_ratios.push_back(std::nullopt);
    else
      rep.relaxed_ratios.push_back(approx_ratio(mu, rep.report.values[i]));
  }
  return rep;
}

}  // namespace pas
