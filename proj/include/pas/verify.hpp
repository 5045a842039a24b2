#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pas/core.hpp"
#include "pas/mms.hpp"
#include "pas/n_agent.hpp"
#include "pas/predictions.hpp"
#include "pas/rng.hpp"
#include "pas/two_agent.hpp"

namespace pas {

/// B-RR-PAS with planting driven by reports instead of predictions. The
/// tentative bundles then depend on the agent's own report, which breaks
/// truthfulness; the fuzzer must catch it.
inline constexpr std::string_view kMutantMechanismName = "Mutant-Report-Plant";

// ---------------------------------------------------------------------------
// Mechanism dispatch
// ---------------------------------------------------------------------------

enum class MechanismKind { kTwoAgent, kNAgent, kMutant };

struct MechanismRef {
  MechanismKind kind = MechanismKind::kTwoAgent;
  Mechanism two = Mechanism::kBrrPas;
  std::string name;

  bool two_agent_only() const { return kind != MechanismKind::kNAgent; }
};

inline MechanismRef resolve_mechanism(std::string_view name) {
  if (name == kNAgentMechanismName) return {MechanismKind::kNAgent, Mechanism::kBrrPas, std::string(name)};
  if (name == kMutantMechanismName) return {MechanismKind::kMutant, Mechanism::kBrrPas, std::string(name)};
  if (auto m = parse_mechanism(name)) return {MechanismKind::kTwoAgent, *m, std::string(name)};
  throw InputError("unknown mechanism '" + std::string(name) + "'");
}

template <ValueType V>
Allocation allocate_by_name(const MechanismRef& mech, const std::vector<std::vector<V>>& reports,
                            const PredictionProfile<V>& preds, const MechanismOptions& opt = {},
                            const NAgentOptions& nopt = {}) {
  switch (mech.kind) {
    case MechanismKind::kTwoAgent:
      return allocate_two_agent(mech.two, reports, preds, opt).allocation;
    case MechanismKind::kNAgent:
      return allocate_n_agent(reports, preds, nopt).allocation;
    case MechanismKind::kMutant: {
      if (reports.size() != 2 || preds.n() != 2) throw UnsupportedError("mutant mechanism needs n = 2");
      const std::size_t m = reports[0].size();
      std::span<const V> r1(reports[0]), r2(reports[1]);
      const TwoWaySplit a = balanced_round_robin(Bundle::range(m), preds.orderings[0], preds.orderings[1]);
      const auto tr = plant_and_steal(a, induced_ordering(r1), induced_ordering(r2), r1, r2);
      return Allocation{{tr.final.first, tr.final.second}};
    }
  }
  throw InternalError("unhandled mechanism kind");
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Violation {
  std::size_t trial = 0;
  Agent agent = 0;
  std::string check;
  std::vector<std::vector<Rational>> valuations;
  std::vector<Ordering> predictions;
  std::optional<std::vector<std::vector<Rational>>> prediction_values;
  std::optional<std::vector<Rational>> misreport;
  std::string observed;
  std::string required;
};

struct PropertyReport {
  static constexpr std::size_t kMaxRecorded = 20;

  std::string property;
  std::string mechanism;
  std::uint64_t seed = 0;
  std::size_t instances = 0;
  std::size_t evaluations = 0;
  std::size_t violation_count = 0;
  // The first kMaxRecorded violations.
  std::vector<Violation> violations;
  std::map<std::string, std::size_t> by_check;
  std::optional<std::size_t> first_violation_trial;
  bool partial = false;
  bool lower_bound_only = false;
  std::vector<std::string> notes;

  bool pass() const { return violation_count == 0; }

  void add(Violation v) {
    ++violation_count;
    ++by_check[v.check];
    if (!first_violation_trial || v.trial < *first_violation_trial) first_violation_trial = v.trial;
    if (violations.size() < kMaxRecorded) violations.push_back(std::move(v));
  }
};

namespace detail {

template <ValueType V>
std::vector<Rational> to_rational_row(const std::vector<V>& row) {
  std::vector<Rational> out;
  out.reserve(row.size());
  for (const V& x : row) {
    if constexpr (std::is_same_v<V, Rational>)
      out.push_back(x);
    else
      out.emplace_back(static_cast<std::int64_t>(x));
  }
  return out;
}

template <ValueType V>
std::vector<std::vector<Rational>> to_rational_rows(const std::vector<std::vector<V>>& rows) {
  std::vector<std::vector<Rational>> out;
  for (const auto& r : rows) out.push_back(to_rational_row(r));
  return out;
}

template <ValueType V>
Violation make_violation(std::size_t trial, Agent agent, std::string check,
                         const std::vector<std::vector<V>>& valuations, const PredictionProfile<V>& preds) {
  Violation v;
  v.trial = trial;
  v.agent = agent;
  v.check = std::move(check);
  v.valuations = to_rational_rows(valuations);
  v.predictions = preds.orderings;
  if (preds.values) v.prediction_values = to_rational_rows(*preds.values);
  return v;
}

inline std::uint64_t mask_of(const Bundle& b) {
  std::uint64_t mask = 0;
  for (Item it : b) mask |= std::uint64_t{1} << it;
  return mask;
}

inline long long mask_value(const std::vector<long long>& v, std::uint64_t mask) {
  long long s = 0;
  for (std::size_t j = 0; j < v.size(); ++j)
    if (mask >> j & 1) s += v[j];
  return s;
}

inline std::uint64_t grid_size(std::size_t m, long long grid_max) {
  std::uint64_t g = 1;
  for (std::size_t j = 0; j < m; ++j) g *= static_cast<std::uint64_t>(grid_max + 1);
  return g;
}

inline std::vector<long long> grid_point(std::uint64_t code, std::size_t m, long long grid_max) {
  std::vector<long long> v(m);
  const auto base = static_cast<std::uint64_t>(grid_max + 1);
  for (std::size_t j = 0; j < m; ++j) {
    v[j] = static_cast<long long>(code % base);
    code /= base;
  }
  return v;
}

// Every strict ordering of m items as a report with values m, m-1, ..., 1.
inline std::vector<std::vector<long long>> permutation_reports(std::size_t m) {
  std::vector<Item> perm(m);
  for (std::size_t j = 0; j < m; ++j) perm[j] = j;
  std::vector<std::vector<long long>> out;
  do {
    std::vector<long long> v(m);
    for (std::size_t r = 0; r < m; ++r) v[perm[r]] = static_cast<long long>(m - r);
    out.push_back(std::move(v));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

inline std::vector<long long> random_grid_row(Rng& rng, std::size_t m, long long grid_max, bool positive) {
  std::vector<long long> v(m);
  for (;;) {
    long long total = 0;
    for (auto& x : v) total += x = static_cast<long long>(rng.below(static_cast<std::uint64_t>(grid_max + 1)));
    if (!positive || total > 0 || m == 0) return v;
  }
}

inline bool reads_values_only(const MechanismRef& mech) {
  return mech.kind == MechanismKind::kTwoAgent &&
         (mech.two == Mechanism::kWfPas || mech.two == Mechanism::kCbPas || mech.two == Mechanism::kPartition ||
          mech.two == Mechanism::kPartitionSteal || mech.two == Mechanism::kPartitionPlantSteal);
}

}  // namespace detail

/// Attaches the water-filling and cut-and-balance encodings of the predicted
/// values so that repeated runs do not recompute them.
template <ValueType V>
void attach_succinct(PredictionProfile<V>& preds, const Rational& epsilon, std::size_t exact_cap = kDefaultExactCap) {
  if (preds.n() != 2 || !preds.values) return;
  const auto& pv = *preds.values;
  bool positive = true;
  for (const auto& row : pv) {
    V total(0);
    for (const V& x : row) total = total + x;
    positive = positive && V(0) < total;
  }
  if (positive) preds.wf = encode_wf(pv[0], pv[1]);
  preds.cb = encode_cb(pv[0], pv[1], epsilon, nullptr, exact_cap);
}

/// A reproducible panel of prediction profiles over m items. Entry 0 has every
/// agent predicting the identity order, entry 1 the reverse; the rest are
/// uniform random orders. Predicted values are grid values placed along each
/// order, with positive totals.
inline std::vector<PredictionProfile<long long>> prediction_panel(std::size_t n, std::size_t m, std::size_t count,
                                                                  std::uint64_t seed, long long grid_max = 3,
                                                                  const Rational& epsilon = Rational(1, 4)) {
  std::vector<PredictionProfile<long long>> panel;
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, {m, k}));
    PredictionProfile<long long> p;
    std::vector<std::vector<long long>> values;
    for (Agent i = 0; i < n; ++i) {
      Ordering o = Ordering::identity(m);
      if (k == 1) o = o.reversed();
      if (k >= 2) {
        std::vector<Item> items = o.items();
        rng.shuffle(items);
        o = Ordering(items);
      }
      auto row = detail::random_grid_row(rng, m, grid_max, true);
      values.push_back(values_along(std::span<const long long>(row), o));
      p.orderings.push_back(o);
    }
    p.values = std::move(values);
    attach_succinct(p, epsilon);
    panel.push_back(std::move(p));
  }
  return panel;
}

// ---------------------------------------------------------------------------
// Truthfulness
// ---------------------------------------------------------------------------

enum class MisreportSpace { kPermutations, kGrid };

struct FuzzSpec {
  std::string mechanism;
  std::size_t n = 2;
  std::size_t min_m = 1;
  std::size_t max_m = 5;
  long long grid_max = 3;
  std::size_t panel = 50;
  std::size_t trials = 10000;
  std::uint64_t seed = kDefaultSeed;
  // Maximum number of mechanism runs; 0 means unlimited.
  std::uint64_t budget = 0;
  bool stop_at_first = false;
  std::optional<MisreportSpace> misreports;
  Rational epsilon{1, 4};
};

inline MisreportSpace default_misreports(const MechanismRef& mech) {
  return detail::reads_values_only(mech) ? MisreportSpace::kGrid : MisreportSpace::kPermutations;
}

/// Exhaustive search for a profitable misreport with two agents. For every m,
/// deviating agent, report of the other agent (all strict orderings), panel
/// prediction and true valuation in the grid, compares the truthful utility
/// with the best utility over the misreport space.
inline PropertyReport fuzz_truthfulness_exhaustive(const FuzzSpec& spec) {
  const MechanismRef mech = resolve_mechanism(spec.mechanism);
  if (mech.kind == MechanismKind::kNAgent) throw UnsupportedError("exhaustive fuzz covers two-agent mechanisms");
  const MisreportSpace space = spec.misreports.value_or(default_misreports(mech));
  PropertyReport rep;
  rep.property = "truthfulness";
  rep.mechanism = mech.name;
  rep.seed = spec.seed;
  MechanismOptions opt;
  opt.epsilon = spec.epsilon;
  std::size_t context = 0;

  for (std::size_t m = spec.min_m; m <= spec.max_m; ++m) {
    const auto panel = prediction_panel(2, m, spec.panel, derive_seed(spec.seed, {m}), spec.grid_max, spec.epsilon);
    const auto perms = detail::permutation_reports(m);
    const std::uint64_t g = detail::grid_size(m, spec.grid_max);
    std::vector<std::vector<long long>> grid;
    for (std::uint64_t c = 0; c < g; ++c) grid.push_back(detail::grid_point(c, m, spec.grid_max));
    const auto& mis = space == MisreportSpace::kGrid ? grid : perms;
    const std::uint64_t runs = g + (space == MisreportSpace::kGrid ? 0 : perms.size());

    for (Agent dev = 0; dev < 2; ++dev) {
      for (const auto& other : perms) {
        for (std::size_t pi = 0; pi < panel.size(); ++pi, ++context) {
          if (spec.budget && rep.evaluations + runs > spec.budget) {
            rep.partial = true;
            rep.notes.push_back("budget exhausted at m=" + std::to_string(m));
            return rep;
          }
          const auto& preds = panel[pi];
          opt.seed = derive_seed(spec.seed, {m, dev, pi});
          std::vector<std::vector<long long>> reports(2);
          reports[1 - dev] = other;
          auto outcome = [&](const std::vector<long long>& r) {
            reports[dev] = r;
            ++rep.evaluations;
            return detail::mask_of(allocate_by_name(mech, reports, preds, opt)[dev]);
          };
          std::vector<std::uint64_t> truthful(g);
          for (std::uint64_t c = 0; c < g; ++c) truthful[c] = outcome(grid[c]);
          // Distinct bundles reachable by some misreport, with a witness report.
          std::map<std::uint64_t, std::size_t> reachable;
          if (space == MisreportSpace::kGrid) {
            for (std::uint64_t c = 0; c < g; ++c) reachable.emplace(truthful[c], c);
          } else {
            for (std::size_t k = 0; k < mis.size(); ++k) reachable.emplace(outcome(mis[k]), k);
          }
          for (std::uint64_t c = 0; c < g; ++c) {
            ++rep.instances;
            const long long honest = detail::mask_value(grid[c], truthful[c]);
            for (const auto& [mask, k] : reachable) {
              const long long gain = detail::mask_value(grid[c], mask);
              if (gain <= honest) continue;
              reports[dev] = grid[c];
              Violation v = detail::make_violation(context, dev, "truthfulness", reports, preds);
              v.misreport = detail::to_rational_row(mis[k]);
              v.observed = "misreport utility " + std::to_string(gain);
              v.required = "at most truthful utility " + std::to_string(honest);
              rep.add(std::move(v));
              break;
            }
            if (spec.stop_at_first && !rep.pass()) return rep;
          }
        }
      }
    }
  }
  return rep;
}

/// Sampled search for a profitable misreport. Each trial draws m, a grid
/// valuation profile, a prediction profile (accurate in a third of the trials)
/// and a deviating agent, then tries every misreport in the space.
inline PropertyReport fuzz_truthfulness_sampled(const FuzzSpec& spec) {
  const MechanismRef mech = resolve_mechanism(spec.mechanism);
  const std::size_t n = mech.two_agent_only() ? 2 : spec.n;
  if (n < 2) throw PreconditionError("fuzzing needs n >= 2");
  const MisreportSpace space = spec.misreports.value_or(default_misreports(mech));
  PropertyReport rep;
  rep.property = "truthfulness";
  rep.mechanism = mech.name;
  rep.seed = spec.seed;
  MechanismOptions opt;
  opt.epsilon = spec.epsilon;
  std::map<std::size_t, std::vector<std::vector<long long>>> perm_cache;

  for (std::size_t t = 0; t < spec.trials; ++t) {
    Rng rng(derive_seed(spec.seed, {t}));
    const std::size_t m = spec.min_m + rng.below(spec.max_m - spec.min_m + 1);
    const std::uint64_t g = detail::grid_size(m, spec.grid_max);
    if (space == MisreportSpace::kPermutations && !perm_cache.count(m))
      perm_cache[m] = detail::permutation_reports(m);
    const std::uint64_t runs = 1 + (space == MisreportSpace::kGrid ? g : perm_cache[m].size());
    if (spec.budget && rep.evaluations + runs > spec.budget) {
      rep.partial = true;
      rep.notes.push_back("budget exhausted after " + std::to_string(t) + " trials");
      break;
    }

    std::vector<std::vector<long long>> truth;
    for (Agent i = 0; i < n; ++i) truth.push_back(detail::random_grid_row(rng, m, spec.grid_max, false));
    PredictionProfile<long long> preds;
    if (rng.below(3) == 0) {
      std::vector<std::vector<long long>> pv = truth;
      for (auto& row : pv)
        if (std::all_of(row.begin(), row.end(), [](long long x) { return x == 0; }))
          row = detail::random_grid_row(rng, m, spec.grid_max, true);
      preds = PredictionProfile<long long>::from_values(std::move(pv));
    } else {
      std::vector<std::vector<long long>> pv;
      for (Agent i = 0; i < n; ++i) pv.push_back(detail::random_grid_row(rng, m, spec.grid_max, true));
      preds = PredictionProfile<long long>::from_values(std::move(pv));
    }
    if (n == 2) attach_succinct(preds, spec.epsilon);
    opt.seed = rng.next();
    const Agent dev = static_cast<Agent>(rng.below(n));

    auto reports = truth;
    ++rep.evaluations;
    const long long honest =
        detail::mask_value(truth[dev], detail::mask_of(allocate_by_name(mech, reports, preds, opt)[dev]));
    ++rep.instances;
    auto try_report = [&](const std::vector<long long>& r) {
      reports[dev] = r;
      ++rep.evaluations;
      const long long gain =
          detail::mask_value(truth[dev], detail::mask_of(allocate_by_name(mech, reports, preds, opt)[dev]));
      if (gain <= honest) return false;
      Violation v = detail::make_violation(t, dev, "truthfulness", truth, preds);
      v.misreport = detail::to_rational_row(r);
      v.observed = "misreport utility " + std::to_string(gain);
      v.required = "at most truthful utility " + std::to_string(honest);
      rep.add(std::move(v));
      return true;
    };
    if (space == MisreportSpace::kGrid) {
      for (std::uint64_t c = 0; c < g; ++c)
        if (try_report(detail::grid_point(c, m, spec.grid_max))) break;
    } else {
      for (const auto& r : perm_cache[m])
        if (try_report(r)) break;
    }
    if (spec.stop_at_first && !rep.pass()) break;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Random instances and adversarial predictions
// ---------------------------------------------------------------------------

/// A row of non-negative integer values in one of several shapes: small
/// uniform, wide uniform, a few heavy items over light ones, or 0/1. Rows with
/// zero total are redrawn.
inline std::vector<Rational> random_value_row(Rng& rng, std::size_t m, int style) {
  std::vector<Rational> v;
  while (v.size() < m) {
    long long x = 0;
    switch (style) {
      case 0:
        x = static_cast<long long>(rng.below(10));
        break;
      case 1:
        x = 1 + static_cast<long long>(rng.below(100));
        break;
      case 2:
        x = rng.below(5) == 0 ? 50 + static_cast<long long>(rng.below(51)) : static_cast<long long>(rng.below(6));
        break;
      default:
        x = static_cast<long long>(rng.below(2));
        break;
    }
    v.emplace_back(x);
    if (v.size() == m && std::all_of(v.begin(), v.end(), [](const Rational& y) { return y == Rational(0); })) v.clear();
  }
  return v;
}

inline Instance<Rational> random_instance(Rng& rng, std::size_t n, std::size_t m) {
  const int style = static_cast<int>(rng.below(4));
  std::vector<std::vector<Rational>> rows;
  for (Agent i = 0; i < n; ++i) rows.push_back(random_value_row(rng, m, style));
  return Instance<Rational>(std::move(rows));
}

enum class Adversary { kTruth, kReverse, kTied, kRandom };

inline const char* to_string(Adversary a) {
  switch (a) {
    case Adversary::kTruth:
      return "truth";
    case Adversary::kReverse:
      return "reverse";
    case Adversary::kTied:
      return "tied";
    case Adversary::kRandom:
      return "random";
  }
  return "?";
}

/// Predictions of one adversarial kind. Predicted values keep each agent's
/// multiset of true values, rearranged along the predicted order; the tied
/// kind predicts all ones (ties broken by id).
template <ValueType V>
PredictionProfile<V> adversarial_predictions(const Instance<V>& inst, Adversary kind, Rng& rng) {
  PredictionProfile<V> p;
  std::vector<std::vector<V>> values;
  for (Agent i = 0; i < inst.n(); ++i) {
    Ordering o = induced_ordering(inst, i);
    if (kind == Adversary::kReverse) o = o.reversed();
    if (kind == Adversary::kTied) o = Ordering::identity(inst.m());
    if (kind == Adversary::kRandom) {
      std::vector<Item> items = o.items();
      rng.shuffle(items);
      o = Ordering(items);
    }
    values.push_back(kind == Adversary::kTied ? std::vector<V>(inst.m(), V(1)) : values_along(inst.values(i), o));
    p.orderings.push_back(o);
  }
  p.values = std::move(values);
  return p;
}

// ---------------------------------------------------------------------------
// Consistency and robustness
// ---------------------------------------------------------------------------

/// Proven approximation factor against mu^n under accurate predictions.
inline std::optional<Rational> consistency_bound(std::string_view name, const Rational& epsilon) {
  const MechanismRef mech = resolve_mechanism(name);
  if (mech.kind == MechanismKind::kNAgent) return Rational(2);
  if (mech.kind != MechanismKind::kTwoAgent) return std::nullopt;
  switch (mech.two) {
    case Mechanism::kBrrPas:
      return Rational(2);
    case Mechanism::kOneTwoRrPas:
      return Rational(3, 2);
    case Mechanism::kWfPas:
      return Rational(4);
    case Mechanism::kCbPas:
      return Rational(2) + epsilon;
    default:
      return std::nullopt;
  }
}

/// Benchmark bundle count for robustness: 2 for two-agent mechanisms,
/// ceil(3n/2) for the n-agent mechanism.
inline std::size_t robustness_k(std::string_view name, std::size_t n) {
  return resolve_mechanism(name).kind == MechanismKind::kNAgent ? relaxed_k(n) : 2;
}

/// Proven robustness factor for m items; none when the bound is vacuous or
/// unknown.
inline std::optional<Rational> robustness_bound(std::string_view name, std::size_t m, std::size_t n) {
  const MechanismRef mech = resolve_mechanism(name);
  const auto mm = static_cast<long long>(m);
  if (mech.kind == MechanismKind::kNAgent) {
    const auto k = static_cast<long long>(relaxed_k(n));
    if (mm <= k + 1) return std::nullopt;
    return Rational(mm - k - 1);
  }
  if (mech.kind != MechanismKind::kTwoAgent) return std::nullopt;
  switch (mech.two) {
    case Mechanism::kBrrPas:
    case Mechanism::kCbPas:
      return Rational((mm + 1) / 2);
    case Mechanism::kOneTwoRrPas:
      return Rational(2 * mm / 3);
    case Mechanism::kWfPas:
      return Rational(mm - 1);
    default:
      return std::nullopt;
  }
}

struct CheckSpec {
  std::string mechanism;
  // Agent counts to draw from; two-agent mechanisms always use n = 2.
  std::vector<std::size_t> agents{2};
  std::size_t trials = 1000;
  std::size_t min_m = 1;
  std::size_t max_m = 12;
  std::uint64_t seed = kDefaultSeed;
  // Random orderings per instance, on top of truth, reverse and tied.
  std::size_t random_predictions = 2;
  std::size_t exact_cap = kDefaultExactCap;
  Rational epsilon{1, 4};
  std::optional<Rational> bound;
  std::uint64_t budget = 0;
};

namespace detail {

inline std::string ratio_text(const Rational& mu, const Rational& v) { return to_string(approx_ratio(mu, v)); }

inline Rational best_item_value(std::span<const Rational> v, const Bundle& b) {
  Rational best(0);
  for (Item it : b) best = std::max(best, v[it]);
  return best;
}

struct Drawn {
  std::size_t n;
  Instance<Rational> inst;
};

inline Drawn draw_instance(const CheckSpec& spec, const MechanismRef& mech, Rng& rng) {
  const std::size_t n = mech.two_agent_only() ? 2 : spec.agents[rng.below(spec.agents.size())];
  const std::size_t m = spec.min_m + rng.below(spec.max_m - spec.min_m + 1);
  return {n, random_instance(rng, n, m)};
}

}  // namespace detail

/// With accurate predictions, every agent gets at least mu_i^n / gamma.
inline PropertyReport check_consistency(const CheckSpec& spec) {
  const MechanismRef mech = resolve_mechanism(spec.mechanism);
  const auto gamma = spec.bound ? spec.bound : consistency_bound(spec.mechanism, spec.epsilon);
  if (!gamma) throw UnsupportedError("no consistency bound known for " + mech.name + "; pass one explicitly");
  PropertyReport rep;
  rep.property = "consistency";
  rep.mechanism = mech.name;
  rep.seed = spec.seed;
  rep.notes.push_back("bound " + to_string(*gamma));
  MechanismOptions opt;
  opt.epsilon = spec.epsilon;
  opt.exact_cap = spec.exact_cap;
  NAgentOptions nopt;
  nopt.exact_cap = spec.exact_cap;

  for (std::size_t t = 0; t < spec.trials; ++t) {
    if (spec.budget && rep.evaluations >= spec.budget) {
      rep.partial = true;
      break;
    }
    Rng rng(derive_seed(spec.seed, {t}));
    auto [n, inst] = detail::draw_instance(spec, mech, rng);
    opt.seed = rng.next();
    const auto preds = accurate_predictions(inst);
    const Allocation x = allocate_by_name(mech, inst.valuations(), preds, opt, nopt);
    ++rep.evaluations;
    ++rep.instances;
    for (Agent i = 0; i < n; ++i) {
      const auto mu = mms_auto(inst.values(i), n, spec.exact_cap);
      if (mu.method == MmsMethod::kHeuristic) rep.lower_bound_only = true;
      const Rational v = bundle_value(inst, i, x[i]);
      if (!(v * *gamma < mu.mu)) continue;
      Violation viol = detail::make_violation(t, i, "consistency", inst.valuations(), preds);
      viol.observed = "ratio " + detail::ratio_text(mu.mu, v);
      viol.required = "ratio <= " + to_string(*gamma);
      rep.add(std::move(viol));
    }
  }
  if (rep.lower_bound_only) rep.notes.push_back("lower-bound check only: some maximin shares are heuristic");
  return rep;
}

/// Under adversarial predictions (truth, reverse, tied and random orders),
/// every agent gets at least mu_i^k / beta. Also checks that two-agent
/// outcomes hold a top-2 item and n-agent outcomes an item of rank at most
/// ceil(3n/2), both by value.
inline PropertyReport check_robustness(const CheckSpec& spec) {
  const MechanismRef mech = resolve_mechanism(spec.mechanism);
  PropertyReport rep;
  rep.property = "robustness";
  rep.mechanism = mech.name;
  rep.seed = spec.seed;
  MechanismOptions opt;
  opt.epsilon = spec.epsilon;
  opt.exact_cap = spec.exact_cap;
  NAgentOptions nopt;
  nopt.exact_cap = spec.exact_cap;
  std::size_t vacuous = 0;

  std::vector<Adversary> kinds{Adversary::kTruth, Adversary::kReverse, Adversary::kTied};
  for (std::size_t r = 0; r < spec.random_predictions; ++r) kinds.push_back(Adversary::kRandom);

  for (std::size_t t = 0; t < spec.trials; ++t) {
    if (spec.budget && rep.evaluations >= spec.budget) {
      rep.partial = true;
      break;
    }
    Rng rng(derive_seed(spec.seed, {t}));
    auto [n, inst] = detail::draw_instance(spec, mech, rng);
    const std::size_t m = inst.m();
    const std::size_t k = robustness_k(spec.mechanism, n);
    const std::size_t rank = mech.two_agent_only() ? 2 : relaxed_k(n);
    const auto beta = spec.bound ? spec.bound : robustness_bound(spec.mechanism, m, n);
    if (!beta) ++vacuous;
    std::vector<MmsResult<Rational>> mu;
    for (Agent i = 0; i < n; ++i) {
      mu.push_back(mms_auto(inst.values(i), k, spec.exact_cap));
      if (mu.back().method == MmsMethod::kHeuristic) rep.lower_bound_only = true;
    }
    for (Adversary kind : kinds) {
      const auto preds = adversarial_predictions(inst, kind, rng);
      opt.seed = rng.next();
      const Allocation x = allocate_by_name(mech, inst.valuations(), preds, opt, nopt);
      ++rep.evaluations;
      ++rep.instances;
      for (Agent i = 0; i < n; ++i) {
        const Rational v = bundle_value(inst, i, x[i]);
        if (beta && v * *beta < mu[i].mu) {
          Violation viol = detail::make_violation(t, i, "bound", inst.valuations(), preds);
          viol.observed = "ratio " + detail::ratio_text(mu[i].mu, v) + " (" + to_string(kind) + " predictions)";
          viol.required = "ratio <= " + to_string(*beta) + " against mu^" + std::to_string(k);
          rep.add(std::move(viol));
        }
        const Rational best = detail::best_item_value(inst.values(i), x[i]);
        const Rational need = kth_value(inst.values(i), rank);
        if (best < need) {
          Violation viol = detail::make_violation(t, i, rank == 2 ? "top-2" : "rank", inst.valuations(), preds);
          viol.observed = "best item value " + to_string(best) + " (" + to_string(kind) + " predictions)";
          viol.required = "at least the value of rank " + std::to_string(rank) + ", " + to_string(need);
          rep.add(std::move(viol));
        }
      }
    }
  }
  if (vacuous) rep.notes.push_back(std::to_string(vacuous) + " instances with a vacuous ratio bound");
  if (rep.lower_bound_only) rep.notes.push_back("lower-bound check only: some maximin shares are heuristic");
  return rep;
}

// ---------------------------------------------------------------------------
// Noise curve
// ---------------------------------------------------------------------------

struct NoiseSpec {
  std::vector<std::size_t> ms{8, 10, 12};
  std::size_t per_d = 200;
  // Sweep d = 0, stride, 2*stride, ... up to m(m-1)/2 (always including the end).
  std::uint64_t d_stride = 1;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t budget = 0;
};

struct NoisePoint {
  std::size_t m = 0;
  std::uint64_t d = 0;
  std::size_t instances = 0;
  double max_ratio = 0;
  double bound = 0;
  std::size_t violations = 0;
};

struct NoiseCurve {
  PropertyReport report;
  std::vector<NoisePoint> points;
};

/// Whether mu <= (2 sqrt(d) + 6) v, decided exactly.
inline bool within_noise_bound(const Rational& mu, const Rational& v, std::uint64_t d) {
  const Rational lhs = mu - Rational(6) * v;
  if (!(Rational(0) < lhs)) return true;
  return !(Rational(4) * Rational(static_cast<std::int64_t>(d)) * v * v < lhs * lhs);
}

/// Largest count shortfall of A against R over thresholds, i.e.
/// max_tau (|{g in R : v(g) >= tau}| - |{g in A : v(g) >= tau}|).
inline long long threshold_shortfall(std::span<const Rational> v, const Bundle& a, const Bundle& r) {
  std::vector<Rational> taus(v.begin(), v.end());
  taus.push_back(Rational(0));
  long long worst = 0;
  for (const Rational& tau : taus) {
    long long ca = 0, cr = 0;
    for (Item it : a) ca += !(v[it] < tau);
    for (Item it : r) cr += !(v[it] < tau);
    worst = std::max(worst, cr - ca);
  }
  return worst;
}

/// Items at even true ranks 2, 4, ... (1-based).
inline Bundle even_rank_items(std::span<const Rational> v) {
  const Ordering o = induced_ordering(v);
  Bundle r;
  for (std::size_t p = 1; p < o.size(); p += 2) r.insert(o[p]);
  return r;
}

/// B-RR-PAS under predictions at exact Kendall tau distance d from the truth
/// (each agent's prediction is perturbed to distance d). Checks the ratio
/// against 2 sqrt(d) + 6 and the additive threshold-count bound sqrt(d) for
/// the round robin bundle A_i against the even-rank items R_i.
inline NoiseCurve check_noise_curve(const NoiseSpec& spec) {
  NoiseCurve out;
  auto& rep = out.report;
  rep.property = "noise";
  rep.mechanism = "B-RR-PAS";
  rep.seed = spec.seed;
  for (std::size_t m : spec.ms) {
    const std::uint64_t dmax = max_kendall_tau(m);
    std::vector<std::uint64_t> ds;
    for (std::uint64_t d = 0; d <= dmax; d += std::max<std::uint64_t>(spec.d_stride, 1)) ds.push_back(d);
    if (ds.back() != dmax) ds.push_back(dmax);
    for (std::uint64_t d : ds) {
      NoisePoint pt;
      pt.m = m;
      pt.d = d;
      pt.bound = 2 * std::sqrt(static_cast<double>(d)) + 6;
      for (std::size_t t = 0; t < spec.per_d; ++t) {
        if (spec.budget && rep.evaluations >= spec.budget) {
          rep.partial = true;
          out.points.push_back(pt);
          return out;
        }
        Rng rng(derive_seed(spec.seed, {m, d, t}));
        const Instance<Rational> inst = random_instance(rng, 2, m);
        PredictionProfile<Rational> preds;
        for (Agent i = 0; i < 2; ++i)
          preds.orderings.push_back(perturb_to_distance(induced_ordering(inst, i), d, rng.next()));
        const auto outcome = allocate_two_agent(Mechanism::kBrrPas, inst.valuations(), preds);
        ++rep.evaluations;
        ++rep.instances;
        ++pt.instances;
        const Bundle* initial[2] = {&outcome.trace.initial.first, &outcome.trace.initial.second};
        for (Agent i = 0; i < 2; ++i) {
          const Rational mu = mms_exact(inst.values(i), 2).mu;
          const Rational v = bundle_value(inst, i, outcome.allocation[i]);
          const auto ratio = approx_ratio(mu, v);
          pt.max_ratio = std::max(pt.max_ratio, ratio.infinite ? INFINITY : to_double(ratio.value));
          if (!within_noise_bound(mu, v, d)) {
            ++pt.violations;
            Violation viol = detail::make_violation(t, i, "ratio", inst.valuations(), preds);
            viol.observed = "ratio " + detail::ratio_text(mu, v) + " at d=" + std::to_string(d);
            viol.required = "ratio <= 2 sqrt(d) + 6";
            rep.add(std::move(viol));
          }
          const long long shortfall = threshold_shortfall(inst.values(i), *initial[i], even_rank_items(inst.values(i)));
          if (shortfall > 0 && static_cast<std::uint64_t>(shortfall * shortfall) > d) {
            ++pt.violations;
            Violation viol = detail::make_violation(t, i, "threshold", inst.valuations(), preds);
            viol.observed = "count shortfall " + std::to_string(shortfall) + " at d=" + std::to_string(d);
            viol.required = "shortfall <= sqrt(d)";
            rep.add(std::move(viol));
          }
        }
      }
      out.points.push_back(pt);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lower-bound fixture
// ---------------------------------------------------------------------------

/// Both agents value the items (1/2, 1/2, 1/3, 1/3, 1/3); each has maximin
/// share 1.
inline Instance<Rational> lower_bound_fixture() {
  const std::vector<Rational> row{Rational(1, 2), Rational(1, 2), Rational(1, 3), Rational(1, 3), Rational(1, 3)};
  return Instance<Rational>({row, row});
}

}  // namespace pas
