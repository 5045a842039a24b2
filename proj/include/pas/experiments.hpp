#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "pas/core.hpp"
#include "pas/mms.hpp"
#include "pas/predictions.hpp"
#include "pas/rng.hpp"
#include "pas/two_agent.hpp"

namespace pas {

enum class Correlation { kCorrelated, kUncorrelated };

inline const char* to_string(Correlation c) { return c == Correlation::kCorrelated ? "correlated" : "uncorrelated"; }

enum class Tier { kHigh, kMedium, kLow, kResidual };

/// High-Med-Low generator. Each item independently falls in the high tier with
/// probability p_high (8/m when unset), else medium with p_medium, else low
/// with p_low, else the residual tier; magnitudes are uniform in the tier's
/// range.
struct GenSpec {
  std::size_t m = 100;
  Correlation mode = Correlation::kUncorrelated;
  double p_high = -1;
  double p_medium = 0.25;
  double p_low = 0.5;
  double high_lo = 1000, high_hi = 2000;
  double medium_lo = 400, medium_hi = 800;
  double low_lo = 100, low_hi = 200;
  double residual_lo = 1, residual_hi = 2;
  std::uint64_t seed = kDefaultSeed;
};

struct GeneratedProfile {
  Instance<double> instance;
  std::vector<std::vector<Tier>> tiers;
};

namespace detail {

inline Tier draw_tier(Rng& rng, const GenSpec& g) {
  const double ph = g.p_high < 0 ? 8.0 / static_cast<double>(g.m) : g.p_high;
  const double u = rng.unit();
  if (u < ph) return Tier::kHigh;
  if (u < ph + g.p_medium) return Tier::kMedium;
  if (u < ph + g.p_medium + g.p_low) return Tier::kLow;
  return Tier::kResidual;
}

inline double draw_magnitude(Rng& rng, const GenSpec& g, Tier t) {
  switch (t) {
    case Tier::kHigh:
      return rng.uniform(g.high_lo, g.high_hi);
    case Tier::kMedium:
      return rng.uniform(g.medium_lo, g.medium_hi);
    case Tier::kLow:
      return rng.uniform(g.low_lo, g.low_hi);
    case Tier::kResidual:
      break;
  }
  return rng.uniform(g.residual_lo, g.residual_hi);
}

}  // namespace detail

/// Two-agent profile. Uncorrelated: each agent draws tiers and magnitudes
/// independently. Correlated: agent 2 keeps agent 1's tier per item with fresh
/// magnitudes, rearranged so that both agents rank the items identically.
inline GeneratedProfile gen_valuations(const GenSpec& g) {
  if (g.m == 0) throw InputError("generator needs m >= 1");
  Rng rng(g.seed);
  GeneratedProfile out;
  std::vector<std::vector<double>> rows(2, std::vector<double>(g.m));
  out.tiers.assign(2, std::vector<Tier>(g.m));
  for (Agent i = 0; i < 2; ++i) {
    for (Item j = 0; j < g.m; ++j) {
      const Tier t = (i == 1 && g.mode == Correlation::kCorrelated) ? out.tiers[0][j] : detail::draw_tier(rng, g);
      out.tiers[i][j] = t;
      rows[i][j] = detail::draw_magnitude(rng, g, t);
    }
  }
  if (g.mode == Correlation::kCorrelated)
    rows[1] = values_along(std::span<const double>(rows[1]), induced_ordering(std::span<const double>(rows[0])));
  out.instance = Instance<double>(std::move(rows));
  return out;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

inline const std::vector<Mechanism>& experiment_mechanisms() {
  static const std::vector<Mechanism> all{Mechanism::kRandom, Mechanism::kRandomSteal, Mechanism::kPartition,
                                          Mechanism::kPartitionSteal, Mechanism::kPartitionPlantSteal};
  return all;
}

struct SweepSpec {
  std::size_t m = 100;
  std::vector<Correlation> modes{Correlation::kCorrelated, Correlation::kUncorrelated};
  std::vector<std::uint64_t> distances{1, 5, 10, 20, 40, 80, 160, 320, 640, 1280, 2560};
  std::vector<double> epsilons{0.02, 0.05, 0.1};
  std::size_t profiles = 100;
  std::size_t predictions = 20;
  std::vector<Mechanism> mechanisms = experiment_mechanisms();
  std::uint64_t seed = kDefaultSeed;
  std::size_t threads = 1;
  bool keep_raw = false;
};

struct ExperimentRecord {
  Correlation mode = Correlation::kUncorrelated;
  std::size_t profile = 0;
  std::size_t prediction = 0;
  Mechanism mechanism = Mechanism::kRandom;
  std::uint64_t d = 0;
  double value[2] = {0, 0};
  // mms_heuristic with k = 2, and half the total value.
  double mu[2] = {0, 0};
  double half_total[2] = {0, 0};
  double min_ratio = 0;

  bool success(double epsilon) const { return min_ratio >= 1 - epsilon; }
};

struct AggregateRow {
  Correlation mode = Correlation::kUncorrelated;
  Mechanism mechanism = Mechanism::kRandom;
  std::uint64_t d = 0;
  double epsilon = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double mean_min_ratio = 0;

  double success_rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0; }
};

struct SweepResult {
  std::vector<AggregateRow> rows;
  std::vector<ExperimentRecord> raw;
};

/// Seeds: profile p of a mode uses derive_seed(seed, {mode, p}); prediction q
/// at distance d uses derive_seed(seed, {mode, p, d, q}), from which the two
/// perturbations and the random split are drawn in that order.
inline std::vector<ExperimentRecord> run_profile(const SweepSpec& spec, Correlation mode, std::size_t profile) {
  const auto mode_id = static_cast<std::uint64_t>(mode);
  GenSpec g;
  g.m = spec.m;
  g.mode = mode;
  g.seed = derive_seed(spec.seed, {mode_id, profile});
  const Instance<double> inst = gen_valuations(g).instance;
  double mu[2], half[2];
  Ordering truth[2];
  for (Agent i = 0; i < 2; ++i) {
    mu[i] = mms_heuristic(inst.values(i), 2).mu;
    double total = 0;
    for (double x : inst.values(i)) total += x;
    half[i] = total / 2;
    truth[i] = induced_ordering(inst, i);
  }

  std::vector<ExperimentRecord> out;
  for (std::uint64_t d : spec.distances) {
    for (std::size_t q = 0; q < spec.predictions; ++q) {
      Rng rng(derive_seed(spec.seed, {mode_id, profile, d, q}));
      std::vector<Ordering> orders;
      std::vector<std::vector<double>> pv;
      for (Agent i = 0; i < 2; ++i) {
        orders.push_back(perturb_to_distance(truth[i], d, rng.next()));
        pv.push_back(values_along(inst.values(i), orders.back()));
      }
      PredictionProfile<double> preds;
      preds.orderings = std::move(orders);
      preds.values = std::move(pv);
      MechanismOptions opt;
      opt.seed = rng.next();
      for (Mechanism mech : spec.mechanisms) {
        const Allocation x = allocate_two_agent(mech, inst.valuations(), preds, opt).allocation;
        ExperimentRecord r;
        r.mode = mode;
        r.profile = profile;
        r.prediction = q;
        r.mechanism = mech;
        r.d = d;
        r.min_ratio = INFINITY;
        for (Agent i = 0; i < 2; ++i) {
          r.value[i] = bundle_value(inst, i, x[i]);
          r.mu[i] = mu[i];
          r.half_total[i] = half[i];
          r.min_ratio = std::min(r.min_ratio, mu[i] > 0 ? r.value[i] / mu[i] : 1.0);
        }
        out.push_back(r);
      }
    }
  }
  return out;
}

/// Runs every profile (in parallel when threads > 1) and reduces the results
/// in profile order, so the output does not depend on the thread count.
inline SweepResult run_sweep(const SweepSpec& spec) {
  const std::uint64_t dmax = max_kendall_tau(spec.m);
  for (std::uint64_t d : spec.distances)
    if (d > dmax) throw InputError("distance " + std::to_string(d) + " exceeds m(m-1)/2");
  for (double e : spec.epsilons)
    if (!(e >= 0 && e < 1)) throw InputError("epsilon must lie in [0, 1)");

  SweepResult res;
  for (Correlation mode : spec.modes) {
    std::vector<std::vector<ExperimentRecord>> per(spec.profiles);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t p; (p = next++) < spec.profiles;) per[p] = run_profile(spec, mode, p);
    };
    const std::size_t nt = std::max<std::size_t>(1, std::min(spec.threads, spec.profiles));
    if (nt == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    // Index: mechanism position x distance position.
    const std::size_t nm = spec.mechanisms.size(), nd = spec.distances.size(), ne = spec.epsilons.size();
    std::vector<AggregateRow> rows(nm * nd * ne);
    std::vector<double> ratio_sum(nm * nd, 0.0);
    std::vector<std::size_t> count(nm * nd, 0);
    for (std::size_t mi = 0; mi < nm; ++mi)
      for (std::size_t di = 0; di < nd; ++di)
        for (std::size_t ei = 0; ei < ne; ++ei) {
          auto& row = rows[(mi * nd + di) * ne + ei];
          row.mode = mode;
          row.mechanism = spec.mechanisms[mi];
          row.d = spec.distances[di];
          row.epsilon = spec.epsilons[ei];
        }
    for (const auto& recs : per) {
      // Records come out of run_profile ordered by d, prediction, mechanism.
      std::size_t idx = 0;
      for (std::size_t di = 0; di < nd; ++di)
        for (std::size_t q = 0; q < spec.predictions; ++q)
          for (std::size_t mi = 0; mi < nm; ++mi, ++idx) {
            const ExperimentRecord& r = recs[idx];
            ratio_sum[mi * nd + di] += r.min_ratio;
            ++count[mi * nd + di];
            for (std::size_t ei = 0; ei < ne; ++ei) {
              auto& row = rows[(mi * nd + di) * ne + ei];
              ++row.trials;
              row.successes += r.success(spec.epsilons[ei]);
            }
          }
      if (spec.keep_raw) res.raw.insert(res.raw.end(), recs.begin(), recs.end());
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::size_t cell = k / ne;
      rows[k].mean_min_ratio = count[cell] ? ratio_sum[cell] / static_cast<double>(count[cell]) : 0;
    }
    res.rows.insert(res.rows.end(), rows.begin(), rows.end());
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string fmt_eps(double e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", e);
  return buf;
}

}  // namespace detail

inline constexpr const char* kAggregateHeader = "mechanism,d,epsilon,trials,success_rate,mean_min_ratio";

/// Rows of one correlation mode, one line per (mechanism, d, epsilon).
inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows, Correlation mode) {
  os << kAggregateHeader << '\n';
  for (const auto& r : rows) {
    if (r.mode != mode) continue;
    os << mechanism_name(r.mechanism) << ',' << r.d << ',' << detail::fmt_eps(r.epsilon) << ',' << r.trials << ','
       << detail::fmt(r.success_rate()) << ',' << detail::fmt(r.mean_min_ratio) << '\n';
  }
}

inline constexpr const char* kRawHeader =
    "mode,profile,prediction,mechanism,d,epsilon,value_1,value_2,mu_1,mu_2,half_total_1,half_total_2,min_ratio,"
    "success";

/// One line per record and epsilon.
inline void write_raw_csv(std::ostream& os, const std::vector<ExperimentRecord>& raw,
                          const std::vector<double>& epsilons) {
  os << kRawHeader << '\n';
  for (const auto& r : raw)
    for (double e : epsilons)
      os << to_string(r.mode) << ',' << r.profile << ',' << r.prediction << ',' << mechanism_name(r.mechanism) << ','
         << r.d << ',' << detail::fmt_eps(e) << ',' << detail::fmt(r.value[0]) << ',' << detail::fmt(r.value[1])
         << ',' << detail::fmt(r.mu[0]) << ',' << detail::fmt(r.mu[1]) << ',' << detail::fmt(r.half_total[0]) << ','
         << detail::fmt(r.half_total[1]) << ',' << detail::fmt(r.min_ratio) << ',' << (r.success(e) ? 1 : 0)
         << '\n';
}

/// Largest minus smallest success rate over d for a mechanism, mode and epsilon.
inline double spread_over_d(const std::vector<AggregateRow>& rows, Correlation mode, Mechanism mech,
                            double epsilon) {
  double lo = 2, hi = -1;
  for (const auto& r : rows)
    if (r.mode == mode && r.mechanism == mech && r.epsilon == epsilon) {
      lo = std::min(lo, r.success_rate());
      hi = std::max(hi, r.success_rate());
    }
  return hi < lo ? 0 : hi - lo;
}

inline const AggregateRow* find_row(const std::vector<AggregateRow>& rows, Correlation mode, Mechanism mech,
                                    std::uint64_t d, double epsilon) {
  for (const auto& r : rows)
    if (r.mode == mode && r.mechanism == mech && r.d == d && r.epsilon == epsilon) return &r;
  return nullptr;
}

}  // namespace pas
