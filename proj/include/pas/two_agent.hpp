#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pas/core.hpp"
#include "pas/mms.hpp"
#include "pas/predictions.hpp"
#include "pas/rng.hpp"

namespace pas {

/// Per-agent side information. Orderings are always present; values, succinct
/// hints and the large-item mask are optional.
template <ValueType V>
struct PredictionProfile {
  std::vector<Ordering> orderings;
  std::optional<std::vector<std::vector<V>>> values;
  std::optional<SuccinctWF> wf;
  std::optional<SuccinctCB> cb;
  // large_mask[i][j]: predicted v_ij >= mu_i^n / 2.
  std::optional<std::vector<std::vector<bool>>> large_mask;

  std::size_t n() const { return orderings.size(); }

  static PredictionProfile from_values(std::vector<std::vector<V>> rows) {
    PredictionProfile p;
    p.orderings = induced_orderings(rows);
    p.values = std::move(rows);
    return p;
  }

  static PredictionProfile from_orderings(std::vector<Ordering> orders) {
    PredictionProfile p;
    p.orderings = std::move(orders);
    return p;
  }
};

template <ValueType V>
PredictionProfile<V> accurate_predictions(const Instance<V>& inst) {
  return PredictionProfile<V>::from_values(inst.valuations());
}

/// (A1, A2).
struct TwoWaySplit {
  Bundle first, second;
  friend bool operator==(const TwoWaySplit&, const TwoWaySplit&) = default;
};

// ---------------------------------------------------------------------------
// Allocation procedures
// ---------------------------------------------------------------------------

namespace detail {

// Picking sequence driven by orderings: seq[t] is the agent (0 or 1) making the
// t-th pick; each pick takes that agent's highest-ranked remaining item.
inline TwoWaySplit run_picking(const Bundle& pool, const Ordering& p1, const Ordering& p2,
                               const std::vector<int>& seq) {
  Bundle rest = pool;
  TwoWaySplit out;
  for (int who : seq) {
    if (rest.empty()) break;
    const Item it = favorite(who == 0 ? p1 : p2, rest);
    rest.erase(it);
    (who == 0 ? out.first : out.second).insert(it);
  }
  return out;
}

}  // namespace detail

/// Alternating picks, agent 1 first.
inline TwoWaySplit balanced_round_robin(const Bundle& pool, const Ordering& p1, const Ordering& p2) {
  std::vector<int> seq(pool.size());
  for (std::size_t t = 0; t < seq.size(); ++t) seq[t] = static_cast<int>(t % 2);
  return detail::run_picking(pool, p1, p2, seq);
}

/// Rounds of one pick for agent 1 then two for agent 2.
inline TwoWaySplit one_two_round_robin(const Bundle& pool, const Ordering& p1, const Ordering& p2) {
  std::vector<int> seq(pool.size());
  for (std::size_t t = 0; t < seq.size(); ++t) seq[t] = t % 3 == 0 ? 0 : 1;
  return detail::run_picking(pool, p1, p2, seq);
}

/// Prefix split by a water-filling hint: b = 1 gives agent 1 the first j0 pool
/// items (by id), b = 2 gives them to agent 2.
inline TwoWaySplit water_filling(const Bundle& pool, const SuccinctWF& hint) {
  if (hint.j0 < 1 || hint.j0 > pool.size() || (hint.b != 1 && hint.b != 2))
    throw DecodeError("water-filling hint does not fit the pool");
  std::vector<Item> prefix(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(hint.j0));
  std::vector<Item> suffix(pool.begin() + static_cast<std::ptrdiff_t>(hint.j0), pool.end());
  return hint.b == 1 ? TwoWaySplit{Bundle(prefix), Bundle(suffix)} : TwoWaySplit{Bundle(suffix), Bundle(prefix)};
}

template <ValueType V>
TwoWaySplit water_filling(const Bundle& pool, std::span<const V> v1, std::span<const V> v2) {
  std::vector<V> a, b;
  for (Item it : pool) {
    a.push_back(v1[it]);
    b.push_back(v2[it]);
  }
  return water_filling(pool, encode_wf(std::span<const V>(a), std::span<const V>(b)));
}

/// A2 is the balanced bundle agent 2 predicts to be better, A1 the other one.
inline TwoWaySplit cut_and_balance(const CutSets& cs) {
  Bundle t1 = set_difference(cs.S1, cs.Sprime);
  Bundle t2 = set_union(cs.S2, cs.Sprime);
  return cs.i2 == 1 ? TwoWaySplit{t2, t1} : TwoWaySplit{t1, t2};
}

inline TwoWaySplit cut_and_balance(const SuccinctCB& hint, std::size_t m) { return cut_and_balance(decode_cb(hint, m)); }

template <ValueType V>
TwoWaySplit cut_and_balance(std::span<const V> v1, std::span<const V> v2, const Rational& epsilon) {
  return cut_and_balance(encode_cb(v1, v2, epsilon), v1.size());
}

/// Greedy cut on agent 1's values (largest item first into the lighter set,
/// ties to set 1); agent 2 takes the set it values more, ties to set 1.
template <ValueType V>
TwoWaySplit partition_cut_and_choose(const Bundle& pool, std::span<const V> v1, std::span<const V> v2) {
  std::vector<Item> items(pool.begin(), pool.end());
  std::stable_sort(items.begin(), items.end(), [&](Item a, Item b) { return v1[b] < v1[a]; });
  std::vector<Item> s[2];
  V load[2] = {V(0), V(0)};
  for (Item it : items) {
    const int t = load[1] < load[0] ? 1 : 0;
    s[t].push_back(it);
    load[t] = load[t] + v1[it];
  }
  Bundle b1(s[0]), b2(s[1]);
  if (bundle_value(v2, b1) < bundle_value(v2, b2)) return {b1, b2};
  return {b2, b1};
}

/// Uniform split with |A1| = ceil(m/2).
inline TwoWaySplit random_split(const Bundle& pool, std::uint64_t seed) {
  std::vector<Item> items(pool.begin(), pool.end());
  Rng rng(seed);
  rng.shuffle(items);
  const std::size_t half = (items.size() + 1) / 2;
  return {Bundle(std::vector<Item>(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(half))),
          Bundle(std::vector<Item>(items.begin() + static_cast<std::ptrdiff_t>(half), items.end()))};
}

// ---------------------------------------------------------------------------
// Plant-and-Steal
// ---------------------------------------------------------------------------

struct PlantStealTrace {
  TwoWaySplit initial;
  // Item moved to an empty side before planting, and its new owner (0 or 1).
  std::optional<std::pair<Item, int>> padding;
  std::optional<Item> planted1, planted2;
  TwoWaySplit planted;
  std::optional<Item> stolen1, stolen2;
  TwoWaySplit final;
};

struct PlantStealPhases {
  bool plant = true;
  bool steal = true;
};

/// Runs the plant and/or steal phases on an initial split. Planting uses the
/// prediction orderings, stealing uses the reported values.
template <ValueType V>
PlantStealTrace plant_and_steal(const TwoWaySplit& initial, const Ordering& p1, const Ordering& p2,
                                std::span<const V> r1, std::span<const V> r2, PlantStealPhases phases = {}) {
  PlantStealTrace tr;
  tr.initial = initial;
  TwoWaySplit a = initial;
  const std::size_t m = a.first.size() + a.second.size();
  if (m >= 2 && (phases.plant || phases.steal) && (a.first.empty() || a.second.empty())) {
    const bool first_empty = a.first.empty();
    Bundle& owner = first_empty ? a.second : a.first;
    const Item moved = least_favorite(first_empty ? p2 : p1, owner);
    owner.erase(moved);
    (first_empty ? a.first : a.second).insert(moved);
    tr.padding = std::make_pair(moved, first_empty ? 0 : 1);
  }
  if (m >= 2 && phases.plant) {
    const Item j1 = favorite(p1, a.first), j2 = favorite(p2, a.second);
    a.first.erase(j1);
    a.second.erase(j2);
    a.first.insert(j2);
    a.second.insert(j1);
    tr.planted1 = j1;
    tr.planted2 = j2;
  }
  tr.planted = a;
  if (m >= 2 && phases.steal) {
    const Item s1 = favorite(r1, a.second), s2 = favorite(r2, a.first);
    a.second.erase(s1);
    a.first.erase(s2);
    a.first.insert(s1);
    a.second.insert(s2);
    tr.stolen1 = s1;
    tr.stolen2 = s2;
  }
  tr.final = a;
  return tr;
}

// ---------------------------------------------------------------------------
// Named mechanisms
// ---------------------------------------------------------------------------

enum class Mechanism {
  kBrrPas,
  kOneTwoRrPas,
  kWfPas,
  kCbPas,
  kRandom,
  kRandomSteal,
  kPartition,
  kPartitionSteal,
  kPartitionPlantSteal,
};

inline constexpr std::string_view kMechanismNames[] = {
    "B-RR-PAS", "1-2-RR-PAS", "WF-PAS",          "CB-PAS",
    "Random",   "Random-Steal", "Partition", "Partition-Steal", "Partition-Plant-Steal",
};

/// Name of the n-agent mechanism as accepted by the CLI.
inline constexpr std::string_view kNAgentMechanismName = "N-Agent-MMS";

inline std::string_view mechanism_name(Mechanism m) { return kMechanismNames[static_cast<int>(m)]; }

inline std::optional<Mechanism> parse_mechanism(std::string_view name) {
  for (int k = 0; k < static_cast<int>(std::size(kMechanismNames)); ++k)
    if (kMechanismNames[k] == name) return static_cast<Mechanism>(k);
  return std::nullopt;
}

struct MechanismOptions {
  std::uint64_t seed = 0;
  Rational epsilon{1, 4};
  std::size_t exact_cap = kDefaultExactCap;
};

template <ValueType V>
struct TwoAgentOutcome {
  Allocation allocation;
  PlantStealTrace trace;
};

namespace detail {

template <ValueType V>
const std::vector<std::vector<V>>& need_values(const PredictionProfile<V>& p, std::string_view who) {
  if (!p.values) throw InputError(std::string(who) + " needs value predictions");
  return *p.values;
}

}  // namespace detail

/// Allocation of a two-agent mechanism given reports and predictions.
template <ValueType V>
TwoAgentOutcome<V> allocate_two_agent(Mechanism mech, const std::vector<std::vector<V>>& reports,
                                      const PredictionProfile<V>& preds, const MechanismOptions& opt = {}) {
  if (reports.size() != 2 || preds.n() != 2) throw UnsupportedError("two-agent mechanism needs n = 2");
  const std::size_t m = reports[0].size();
  if (reports[1].size() != m || preds.orderings[0].size() != m || preds.orderings[1].size() != m)
    throw InputError("reports and predictions disagree on m");
  const Bundle pool = Bundle::range(m);
  const Ordering& p1 = preds.orderings[0];
  const Ordering& p2 = preds.orderings[1];
  std::span<const V> r1(reports[0]), r2(reports[1]);
  const std::string_view name = mechanism_name(mech);

  TwoWaySplit a;
  PlantStealPhases phases;
  switch (mech) {
    case Mechanism::kBrrPas:
      a = balanced_round_robin(pool, p1, p2);
      break;
    case Mechanism::kOneTwoRrPas:
      a = one_two_round_robin(pool, p1, p2);
      break;
    case Mechanism::kWfPas:
      if (preds.wf) {
        a = water_filling(pool, *preds.wf);
      } else {
        const auto& pv = detail::need_values(preds, name);
        a = water_filling(pool, std::span<const V>(pv[0]), std::span<const V>(pv[1]));
      }
      break;
    case Mechanism::kCbPas:
      if (preds.cb) {
        a = cut_and_balance(*preds.cb, m);
      } else {
        const auto& pv = detail::need_values(preds, name);
        a = cut_and_balance(std::span<const V>(pv[0]), std::span<const V>(pv[1]), opt.epsilon);
      }
      break;
    case Mechanism::kRandom:
    case Mechanism::kRandomSteal:
      a = random_split(pool, opt.seed);
      phases.plant = false;
      phases.steal = mech == Mechanism::kRandomSteal;
      break;
    case Mechanism::kPartition:
    case Mechanism::kPartitionSteal:
    case Mechanism::kPartitionPlantSteal: {
      const auto& pv = detail::need_values(preds, name);
      a = partition_cut_and_choose(pool, std::span<const V>(pv[0]), std::span<const V>(pv[1]));
      phases.plant = mech == Mechanism::kPartitionPlantSteal;
      phases.steal = mech != Mechanism::kPartition;
      break;
    }
  }
  TwoAgentOutcome<V> out;
  out.trace = plant_and_steal(a, p1, p2, r1, r2, phases);
  out.allocation.bundles = {out.trace.final.first, out.trace.final.second};
  return out;
}

template <ValueType V>
struct MechanismReport {
  std::string mechanism;
  Allocation allocation;
  std::vector<V> values;
  std::vector<V> mu;
  std::vector<MmsMethod> mu_method;
  std::vector<Ratio<V>> ratios;
  std::optional<PlantStealTrace> trace;
};

/// Per-agent values, maximin shares (k = n) and ratios for an allocation.
template <ValueType V>
void fill_report(MechanismReport<V>& rep, const Instance<V>& inst, std::size_t exact_cap) {
  rep.values.clear();
  rep.mu.clear();
  rep.mu_method.clear();
  rep.ratios.clear();
  for (Agent i = 0; i < inst.n(); ++i) {
    const V v = bundle_value(inst, i, rep.allocation[i]);
    const auto mu = mms_auto(inst.values(i), inst.n(), exact_cap);
    rep.values.push_back(v);
    rep.mu.push_back(mu.mu);
    rep.mu_method.push_back(mu.method);
    rep.ratios.push_back(approx_ratio(mu.mu, v));
  }
}

/// Runs a named two-agent mechanism with truthful reports.
template <ValueType V>
MechanismReport<V> run_named_mechanism(std::string_view name, const Instance<V>& inst,
                                       const PredictionProfile<V>& preds, const MechanismOptions& opt = {}) {
  const auto mech = parse_mechanism(name);
  if (!mech) throw InputError("unknown mechanism '" + std::string(name) + "'");
  if (inst.n() != 2) throw UnsupportedError(std::string(name) + " is a two-agent mechanism");
  auto outcome = allocate_two_agent(*mech, inst.valuations(), preds, opt);
  MechanismReport<V> rep;
  rep.mechanism = std::string(name);
  rep.allocation = outcome.allocation;
  rep.trace = outcome.trace;
  fill_report(rep, inst, opt.exact_cap);
  return rep;
}

}  // namespace pas
