#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pas/core.hpp"

namespace pas {

enum class MmsMethod { kExact, kHeuristic };

inline const char* to_string(MmsMethod m) { return m == MmsMethod::kExact ? "exact" : "heuristic"; }

template <ValueType V>
struct MmsResult {
  V mu{0};
  std::vector<Bundle> witness;
  MmsMethod method = MmsMethod::kExact;
};

inline constexpr std::size_t kDefaultExactCap = 20;

namespace detail {

template <ValueType V>
std::vector<Item> by_value_desc(std::span<const V> values) {
  return induced_ordering(values).items();
}

template <ValueType V>
V min_load(const std::vector<V>& loads) {
  return *std::min_element(loads.begin(), loads.end());
}

// Partitions with fewer than k non-empty bundles when k > m.
template <ValueType V>
MmsResult<V> degenerate(std::size_t m, std::size_t k, MmsMethod method) {
  MmsResult<V> r;
  r.method = method;
  r.witness.resize(k);
  for (Item j = 0; j < m; ++j) r.witness[j].insert(j);
  r.mu = V(0);
  return r;
}

// Decision search: is there a partition whose every bundle is above the
// target (>= or >)? An item never goes to a bundle that already meets the
// target, since moving it elsewhere cannot hurt; bundles with equal loads are
// interchangeable.
template <ValueType V>
class ExactSearch {
 public:
  ExactSearch(std::span<const V> values, std::size_t k)
      : values_(values), k_(k), order_(by_value_desc(values)), loads_(k, V(0)), assign_(values.size(), 0) {
    suffix_.assign(order_.size() + 1, V(0));
    for (std::size_t t = order_.size(); t-- > 0;) suffix_[t] = suffix_[t + 1] + values_[order_[t]];
  }

  const V& total() const { return suffix_[0]; }

  bool feasible(const V& target, bool strict) {
    target_ = target;
    strict_ = strict;
    std::fill(loads_.begin(), loads_.end(), V(0));
    return dfs(0);
  }

  /// Partition found by the last successful feasible() call.
  std::vector<Bundle> witness() const {
    std::vector<std::vector<Item>> b(k_);
    for (std::size_t t = 0; t < order_.size(); ++t) b[assign_[t]].push_back(order_[t]);
    std::vector<Bundle> out;
    for (auto& items : b) out.emplace_back(std::move(items));
    return out;
  }

 private:
  bool met(const V& l) const { return strict_ ? target_ < l : !(l < target_); }

  bool dfs(std::size_t t) {
    V deficit(0);
    std::size_t open = 0;
    for (const V& l : loads_)
      if (!met(l)) {
        deficit = deficit + (target_ - l);
        ++open;
      }
    if (open == 0) {
      for (std::size_t u = t; u < order_.size(); ++u) assign_[u] = 0;
      return true;
    }
    if (t == order_.size() || open > order_.size() - t) return false;
    const V& rest = suffix_[t];
    if (strict_ ? !(deficit < rest) : rest < deficit) return false;

    const V& w = values_[order_[t]];
    for (std::size_t b = 0; b < k_; ++b) {
      if (met(loads_[b])) continue;
      bool repeat = false;
      for (std::size_t c = 0; c < b && !repeat; ++c) repeat = !met(loads_[c]) && loads_[c] == loads_[b];
      if (repeat) continue;
      loads_[b] = loads_[b] + w;
      assign_[t] = b;
      const bool ok = dfs(t + 1);
      loads_[b] = loads_[b] - w;
      if (ok) return true;
    }
    return false;
  }

  std::span<const V> values_;
  std::size_t k_;
  std::vector<Item> order_;
  std::vector<V> loads_;
  std::vector<V> suffix_;
  std::vector<std::size_t> assign_;
  V target_{0};
  bool strict_ = false;
};

}  // namespace detail

/// LPT greedy followed by pairwise move/swap local search. Returns a lower
/// bound on the maximin share together with the partition achieving it.
template <ValueType V>
MmsResult<V> mms_heuristic(std::span<const V> values, std::size_t k) {
  if (k == 0) throw PreconditionError("mms needs k >= 1");
  const std::size_t m = values.size();
  if (k > m) return detail::degenerate<V>(m, k, MmsMethod::kHeuristic);

  std::vector<std::vector<Item>> bins(k);
  std::vector<V> loads(k, V(0));
  for (Item j : detail::by_value_desc(values)) {
    std::size_t b = static_cast<std::size_t>(std::min_element(loads.begin(), loads.end()) - loads.begin());
    bins[b].push_back(j);
    loads[b] = loads[b] + values[j];
  }

  // Each accepted step raises the smaller load of the touched pair without
  // pushing the larger one below it, so the sorted load vector increases
  // lexicographically and the loop terminates.
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t a = 0; a < k && !improved; ++a) {
      for (std::size_t b = 0; b < k && !improved; ++b) {
        if (a == b || !(loads[b] < loads[a])) continue;
        const V lo = loads[b];
        for (std::size_t x = 0; x < bins[a].size() && !improved; ++x) {
          const V vx = values[bins[a][x]];
          V na = loads[a] - vx, nb = loads[b] + vx;
          if (lo < std::min(na, nb)) {
            bins[b].push_back(bins[a][x]);
            bins[a].erase(bins[a].begin() + static_cast<std::ptrdiff_t>(x));
            loads[a] = na;
            loads[b] = nb;
            improved = true;
            break;
          }
          for (std::size_t y = 0; y < bins[b].size(); ++y) {
            const V vy = values[bins[b][y]];
            na = loads[a] - vx + vy;
            nb = loads[b] + vx - vy;
            if (lo < std::min(na, nb)) {
              std::swap(bins[a][x], bins[b][y]);
              loads[a] = na;
              loads[b] = nb;
              improved = true;
              break;
            }
          }
        }
      }
    }
  }

  MmsResult<V> r;
  r.method = MmsMethod::kHeuristic;
  r.mu = detail::min_load(loads);
  for (auto& items : bins) r.witness.emplace_back(std::move(items));
  return r;
}

namespace detail {

// True once some t in [0, k) has mu * (k - t) >= total minus the t largest
// values: k - t bundles avoid those items, so one of them is worth at most that
// average.
template <ValueType V>
bool at_upper_bound(std::span<const V> values, std::size_t k, const V& mu) {
  std::vector<V> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), [](const V& x, const V& y) { return y < x; });
  V rest(0);
  for (const V& x : sorted) rest = rest + x;
  for (std::size_t t = 0; t < k && t <= sorted.size(); ++t) {
    if (!(mu * V(static_cast<long long>(k - t)) < rest)) return true;
    if (t < sorted.size()) rest = rest - sorted[t];
  }
  return false;
}

template <ValueType S>
std::vector<Bundle> optimal_partition(std::span<const S> values, std::size_t k) {
  MmsResult<S> r = mms_heuristic(values, k);
  ExactSearch<S> search(values, k);
  // Raise the incumbent until no partition beats it.
  while (!at_upper_bound(values, k, r.mu) && search.feasible(r.mu, true)) {
    r.witness = search.witness();
    r.mu = bundle_value(values, r.witness[0]);
    for (const Bundle& b : r.witness) r.mu = std::min(r.mu, bundle_value(values, b));
  }
  return r.witness;
}

// Rationals scaled to a common denominator, when everything fits comfortably
// in 64 bits.
inline std::optional<std::vector<long long>> scaled_integers(std::span<const Rational> values) {
  constexpr long long kLimit = 1LL << 52;
  long long den = 1;
  for (const Rational& x : values) {
    const long long g = std::gcd(den, x.denominator());
    if (den / g > kLimit / x.denominator()) return std::nullopt;
    den = den / g * x.denominator();
  }
  std::vector<long long> out;
  long long total = 0;
  for (const Rational& x : values) {
    const long long f = den / x.denominator();
    if (x.numerator() != 0 && f > kLimit / x.numerator()) return std::nullopt;
    out.push_back(x.numerator() * f);
    if (out.back() > kLimit - total) return std::nullopt;
    total += out.back();
  }
  return out;
}

}  // namespace detail

/// Exact maximin share by branch and bound. Refuses instances with more than
/// `cap` items.
template <ValueType V>
MmsResult<V> mms_exact(std::span<const V> values, std::size_t k, std::size_t cap = kDefaultExactCap) {
  if (k == 0) throw PreconditionError("mms needs k >= 1");
  const std::size_t m = values.size();
  if (m > cap)
    throw CapExceededError("exact mms limited to " + std::to_string(cap) + " items (got " + std::to_string(m) +
                           "); use the heuristic");
  if (k > m) return detail::degenerate<V>(m, k, MmsMethod::kExact);

  MmsResult<V> r;
  r.method = MmsMethod::kExact;
  if constexpr (std::is_same_v<V, Rational>) {
    if (auto ints = detail::scaled_integers(values))
      r.witness = detail::optimal_partition(std::span<const long long>(*ints), k);
  }
  if (r.witness.empty()) r.witness = detail::optimal_partition(values, k);
  r.mu = bundle_value(values, r.witness[0]);
  for (const Bundle& b : r.witness) r.mu = std::min(r.mu, bundle_value(values, b));
  return r;
}

template <ValueType V>
MmsResult<V> mms_exact(const std::vector<V>& values, std::size_t k, std::size_t cap = kDefaultExactCap) {
  return mms_exact(std::span<const V>(values), k, cap);
}

template <ValueType V>
MmsResult<V> mms_heuristic(const std::vector<V>& values, std::size_t k) {
  return mms_heuristic(std::span<const V>(values), k);
}

/// Exact when m <= cap, heuristic otherwise.
template <ValueType V>
MmsResult<V> mms_auto(std::span<const V> values, std::size_t k, std::size_t cap = kDefaultExactCap) {
  return values.size() <= cap ? mms_exact(values, k, cap) : mms_heuristic(values, k);
}

/// mu / v, with +inf when v = 0 < mu and 1 when both vanish.
template <ValueType V>
struct Ratio {
  bool infinite = false;
  V value{1};

  bool at_most(const V& bound) const { return !infinite && !(bound < value); }
};

template <ValueType V>
Ratio<V> approx_ratio(const V& mu, const V& value) {
  if (value == V(0)) return mu == V(0) ? Ratio<V>{false, V(1)} : Ratio<V>{true, V(0)};
  return Ratio<V>{false, mu / value};
}

template <ValueType V>
Ratio<V> approx_ratio(const Instance<V>& inst, Agent agent, const Bundle& bundle, std::size_t k,
                      std::size_t cap = kDefaultExactCap) {
  const V mu = mms_auto(inst.values(agent), k, cap).mu;
  return approx_ratio(mu, bundle_value(inst, agent, bundle));
}

template <ValueType V>
std::string to_string(const Ratio<V>& r) {
  if (r.infinite) return "inf";
  if constexpr (std::is_same_v<V, Rational>)
    return to_string(r.value);
  else
    return std::to_string(r.value);
}

}  // namespace pas
