#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pas/core.hpp"
#include "pas/mms.hpp"
#include "pas/rng.hpp"

namespace pas {

// ---------------------------------------------------------------------------
// Kendall tau
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t count_inversions(std::vector<std::size_t>& a, std::vector<std::size_t>& buf, std::size_t lo,
                                      std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(a, buf, lo, mid) + count_inversions(a, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (a[j] < a[i]) {
      inv += mid - i;
      buf[k++] = a[j++];
    } else {
      buf[k++] = a[i++];
    }
  }
  while (i < mid) buf[k++] = a[i++];
  while (j < hi) buf[k++] = a[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            a.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace detail

/// Number of item pairs ordered differently by a and b. O(m log m).
inline std::uint64_t kendall_tau(const Ordering& a, const Ordering& b) {
  if (a.size() != b.size()) throw InputError("kendall tau of orderings over different item sets");
  std::vector<std::size_t> seq(a.size()), buf(a.size());
  for (std::size_t r = 0; r < a.size(); ++r) seq[r] = b.position(a[r]);
  return detail::count_inversions(seq, buf, 0, seq.size());
}

/// Largest per-agent distance between the true and predicted orderings.
inline std::uint64_t kt_profile_distance(const std::vector<Ordering>& truth, const std::vector<Ordering>& predicted) {
  if (truth.size() != predicted.size()) throw InputError("profile sizes differ");
  std::uint64_t d = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) d = std::max(d, kendall_tau(truth[i], predicted[i]));
  return d;
}

inline std::uint64_t max_kendall_tau(std::size_t m) { return m < 2 ? 0 : std::uint64_t{m} * (m - 1) / 2; }

/// Random ordering at exactly distance d from base. Repeatedly draws a pair of
/// positions j < k and bubbles across r = j..k-1, swapping neighbours only when
/// that adds one disagreement with base.
inline Ordering perturb_to_distance(const Ordering& base, std::uint64_t d, std::uint64_t seed) {
  const std::size_t m = base.size();
  if (d > max_kendall_tau(m))
    throw InputError("distance " + std::to_string(d) + " exceeds the maximum " + std::to_string(max_kendall_tau(m)));
  std::vector<Item> cur = base.items();
  std::uint64_t dist = 0;
  Rng rng(seed);
  const std::uint64_t cap = 100ULL * m * m;
  std::uint64_t proposals = 0;
  while (dist < d) {
    if (++proposals > cap) throw InternalError("perturb_to_distance exceeded its proposal cap");
    std::size_t a = rng.below(m), b = rng.below(m - 1);
    if (b >= a) ++b;
    const std::size_t j = std::min(a, b), k = std::max(a, b);
    for (std::size_t r = j; r < k && dist < d; ++r) {
      if (base.position(cur[r]) < base.position(cur[r + 1])) {
        std::swap(cur[r], cur[r + 1]);
        ++dist;
      }
    }
  }
  return Ordering(std::move(cur));
}

/// Values rearranged so that the induced ordering is `order`: the item at rank r
/// receives the r-th largest of the given values.
template <ValueType V>
std::vector<V> values_along(std::span<const V> values, const Ordering& order) {
  std::vector<V> sorted(values.begin(), values.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const V& a, const V& b) { return b < a; });
  std::vector<V> out(values.size(), V(0));
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]] = sorted[r];
  return out;
}

// ---------------------------------------------------------------------------
// Bit helpers
// ---------------------------------------------------------------------------

/// Smallest w with 2^w >= n (0 for n <= 1).
inline std::size_t ceil_log2(std::size_t n) {
  std::size_t w = 0;
  while ((std::size_t{1} << w) < n) ++w;
  return w;
}

using Bits = std::vector<bool>;

namespace detail {

inline void put_bits(Bits& out, std::size_t value, std::size_t width) {
  for (std::size_t b = width; b-- > 0;) out.push_back((value >> b) & 1U);
}

inline std::size_t get_bits(const Bits& in, std::size_t& at, std::size_t width) {
  if (at + width > in.size()) throw DecodeError("bit string too short");
  std::size_t v = 0;
  for (std::size_t b = 0; b < width; ++b) v = (v << 1) | (in[at++] ? 1U : 0U);
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Water-filling hint
// ---------------------------------------------------------------------------

/// Where water-filling stops: prefix length j0 (1-based) and the agent b who
/// reached half of their total first.
struct SuccinctWF {
  std::size_t j0 = 1;
  int b = 1;
  friend bool operator==(const SuccinctWF&, const SuccinctWF&) = default;
};

/// Runs the water-filling scan on two value vectors. An agent with zero
/// predicted total never stops the scan; both at zero is an input error.
template <ValueType V>
SuccinctWF encode_wf(std::span<const V> v1, std::span<const V> v2) {
  const std::size_t m = v1.size();
  if (m == 0 || v2.size() != m) throw InputError("water-filling needs two value vectors of equal positive length");
  V t1(0), t2(0);
  for (std::size_t j = 0; j < m; ++j) {
    t1 = t1 + v1[j];
    t2 = t2 + v2[j];
  }
  if (t1 == V(0) && t2 == V(0)) throw InputError("water-filling needs a positive predicted total");
  V p1(0), p2(0);
  for (std::size_t j = 0; j < m; ++j) {
    p1 = p1 + v1[j];
    p2 = p2 + v2[j];
    if (V(0) < t1 && !(p1 + p1 < t1)) return {j + 1, 1};
    if (V(0) < t2 && !(p2 + p2 < t2)) return {j + 1, 2};
  }
  throw InternalError("water-filling scan did not terminate");
}

template <ValueType V>
SuccinctWF encode_wf(const std::vector<V>& v1, const std::vector<V>& v2) {
  return encode_wf(std::span<const V>(v1), std::span<const V>(v2));
}

inline std::size_t wf_bit_size(std::size_t m) { return ceil_log2(m) + 1; }

inline Bits pack_wf(const SuccinctWF& e, std::size_t m) {
  if (e.j0 < 1 || e.j0 > m || (e.b != 1 && e.b != 2)) throw DecodeError("invalid water-filling hint");
  Bits out;
  detail::put_bits(out, e.j0 - 1, ceil_log2(m));
  out.push_back(e.b == 2);
  return out;
}

inline SuccinctWF unpack_wf(const Bits& bits, std::size_t m) {
  std::size_t at = 0;
  SuccinctWF e;
  e.j0 = detail::get_bits(bits, at, ceil_log2(m)) + 1;
  e.b = detail::get_bits(bits, at, 1) ? 2 : 1;
  if (at != bits.size() || e.j0 > m) throw DecodeError("invalid water-filling bit string");
  return e;
}

// ---------------------------------------------------------------------------
// Cut-and-balance hint
// ---------------------------------------------------------------------------

/// Interval endpoints are item identifiers. An interval with alpha > beta or
/// alpha == m is empty; (m, m) is the canonical empty interval.
struct SuccinctCB {
  std::vector<Item> L1, L2;
  std::array<std::size_t, 4> alpha{};
  std::array<std::size_t, 4> beta{};
  int i2 = 1;
  friend bool operator==(const SuccinctCB&, const SuccinctCB&) = default;
};

struct CutSets {
  Bundle S1, S2, Sprime;
  int i2 = 1;
  friend bool operator==(const CutSets&, const CutSets&) = default;
};

/// What the encoder achieved, for reporting.
struct CbDiagnostics {
  Rational epsilon{1, 4};
  bool explicit_branch = false;
  bool mu_exact = true;
  std::size_t large_items = 0;
};

namespace detail {

inline bool interval_empty(std::size_t a, std::size_t b, std::size_t m) { return a > b || a >= m; }

inline Bundle restrict(const Bundle& s, std::size_t a, std::size_t b, std::size_t m) {
  if (interval_empty(a, b, m)) return {};
  if (b >= m) throw DecodeError("interval end beyond the last item");
  std::vector<Item> out;
  for (Item it : s)
    if (it >= a && it <= b) out.push_back(it);
  return Bundle(std::move(out));
}

inline bool disjoint(const Bundle& a, const Bundle& b) { return set_difference(a, b).size() == a.size(); }

}  // namespace detail

/// Set arithmetic only; decode_cb adds the structural checks.
inline CutSets decode_cb_unchecked(const SuccinctCB& e, std::size_t m) {
  for (std::size_t t = 0; t < 4; ++t)
    if (e.alpha[t] > m || e.beta[t] > m) throw DecodeError("interval index out of range");
  if (e.i2 != 1 && e.i2 != 2) throw DecodeError("chooser bit must be 1 or 2");
  for (Item it : e.L1)
    if (it >= m) throw DecodeError("L1 item out of range");
  for (Item it : e.L2)
    if (it >= m) throw DecodeError("L2 item out of range");
  Bundle L1, L2;
  try {
    L1 = Bundle(e.L1);
    L2 = Bundle(e.L2);
  } catch (const InputError&) {
    throw DecodeError("duplicate item in L1 or L2");
  }
  if (!detail::disjoint(L1, L2)) throw DecodeError("L1 and L2 overlap");
  const Bundle S = set_difference(Bundle::range(m), set_union(L1, L2));
  const Bundle I1 = detail::restrict(S, e.alpha[0], e.beta[0], m);
  const Bundle I2 = detail::restrict(S, e.alpha[1], e.beta[1], m);
  const Bundle I3 = detail::restrict(S, e.alpha[2], e.beta[2], m);
  const Bundle I4 = detail::restrict(S, e.alpha[3], e.beta[3], m);
  if (!detail::disjoint(I1, I2)) throw DecodeError("intervals 1 and 2 overlap");
  if (!detail::disjoint(I3, I4)) throw DecodeError("intervals 3 and 4 overlap");
  CutSets out;
  out.S1 = set_union(L1, I1);
  out.S2 = set_union(L2, I2);
  out.Sprime = set_union(I3, I4);
  out.i2 = e.i2;
  return out;
}

/// Rebuilds S1, S2 and S' from the hint. Throws DecodeError on anything that
/// does not describe a partition with |S1| >= |S2| and S' inside S1.
inline CutSets decode_cb(const SuccinctCB& e, std::size_t m) {
  CutSets out = decode_cb_unchecked(e, m);
  if (out.S1.size() + out.S2.size() != m) throw DecodeError("S1 and S2 do not cover every item");
  if (out.S1.size() < out.S2.size()) throw DecodeError("|S1| < |S2|");
  if (set_difference(out.Sprime, out.S1).size() != 0) throw DecodeError("S' is not inside S1");
  return out;
}

/// ceil(log2(m+1)) bits per field: L1 ids, separator, L2 ids, separator,
/// alpha/beta of intervals 1, 3, 4, then the chooser bit. Interval 2 is the
/// complement of interval 1 and is not stored.
inline std::size_t cb_bit_size(const SuccinctCB& e, std::size_t m) {
  return (e.L1.size() + e.L2.size() + 8) * ceil_log2(m + 1) + 1;
}

namespace detail {

// Interval 2 as stored implicitly: complement of interval 1 inside [0, m-1].
inline std::pair<std::size_t, std::size_t> complement_interval(std::size_t a, std::size_t b, std::size_t m) {
  if (interval_empty(a, b, m)) return {0, m - 1};
  if (a == 0 && b + 1 >= m) return {m, m};
  if (a == 0) return {b + 1, m - 1};
  if (b + 1 >= m) return {0, a - 1};
  throw DecodeError("interval 1 must be a prefix or suffix of the item range");
}

}  // namespace detail

inline Bits pack_cb(const SuccinctCB& e, std::size_t m) {
  if (m == 0) throw DecodeError("empty item range");
  auto [a2, b2] = detail::complement_interval(e.alpha[0], e.beta[0], m);
  const bool stored_empty = detail::interval_empty(e.alpha[1], e.beta[1], m);
  const bool derived_empty = detail::interval_empty(a2, b2, m);
  if (stored_empty != derived_empty || (!stored_empty && (a2 != e.alpha[1] || b2 != e.beta[1])))
    throw DecodeError("interval 2 is not the complement of interval 1");
  const std::size_t w = ceil_log2(m + 1);
  Bits out;
  for (Item it : e.L1) detail::put_bits(out, it, w);
  detail::put_bits(out, m, w);
  for (Item it : e.L2) detail::put_bits(out, it, w);
  detail::put_bits(out, m, w);
  for (std::size_t t : {0, 2, 3}) {
    detail::put_bits(out, e.alpha[t], w);
    detail::put_bits(out, e.beta[t], w);
  }
  out.push_back(e.i2 == 2);
  return out;
}

inline SuccinctCB unpack_cb(const Bits& bits, std::size_t m) {
  if (m == 0) throw DecodeError("empty item range");
  const std::size_t w = ceil_log2(m + 1);
  std::size_t at = 0;
  SuccinctCB e;
  for (auto* list : {&e.L1, &e.L2}) {
    for (;;) {
      std::size_t v = detail::get_bits(bits, at, w);
      if (v == m) break;
      if (v > m) throw DecodeError("item id out of range");
      list->push_back(v);
    }
  }
  for (std::size_t t : {0, 2, 3}) {
    e.alpha[t] = detail::get_bits(bits, at, w);
    e.beta[t] = detail::get_bits(bits, at, w);
  }
  auto [a2, b2] = detail::complement_interval(e.alpha[0], e.beta[0], m);
  e.alpha[1] = a2;
  e.beta[1] = b2;
  e.i2 = detail::get_bits(bits, at, 1) ? 2 : 1;
  if (at != bits.size()) throw DecodeError("trailing bits");
  return e;
}

namespace detail {

template <ValueType V>
V sum_over(std::span<const V> v, const Bundle& b) {
  return bundle_value(v, b);
}

// S' requirements for a given (S1, S2).
template <ValueType V>
bool sprime_ok(std::span<const V> v, const Bundle& S1, const Bundle& S2, const Bundle& Sp, std::size_t m) {
  if (Sp.size() != m / 2 - S2.size()) return false;
  if (set_difference(Sp, S1).size() != 0) return false;
  const V sp = sum_over(v, Sp);
  const V s1 = sum_over(v, S1);
  if (s1 < sp + sp) return false;
  if (S2.size() > 1) {
    Bundle rest = S1;
    for (int t = 0; t < 2 && !rest.empty(); ++t) rest.erase(favorite(v, rest));
    if (sum_over(v, rest) < sp + sp) return false;
  }
  return true;
}

template <ValueType V>
V min_target(const V& mu, const Rational& eps);

template <>
inline Rational min_target<Rational>(const Rational& mu, const Rational& eps) {
  return (Rational(1) - eps / 4) * mu;
}
template <>
inline double min_target<double>(const double& mu, const Rational& eps) {
  return (1.0 - to_double(eps) / 4.0) * mu;
}
template <>
inline long long min_target<long long>(const long long& mu, const Rational& eps) {
  // Compare in exact arithmetic by rounding the target up.
  Rational t = (Rational(1) - eps / 4) * Rational(mu);
  return static_cast<long long>((t.numerator() + t.denominator() - 1) / t.denominator());
}

}  // namespace detail

/// Builds the succinct cut-and-balance hint from agent 1's values (for the cut)
/// and agent 2's values (for the chooser bit).
template <ValueType V>
SuccinctCB encode_cb(std::span<const V> v1, std::span<const V> v2, const Rational& epsilon,
                     CbDiagnostics* diag = nullptr, std::size_t exact_cap = kDefaultExactCap) {
  const std::size_t m = v1.size();
  if (m == 0 || v2.size() != m) throw InputError("cut-and-balance needs two value vectors of equal positive length");
  if (!(Rational(0) < epsilon) || Rational(1) < epsilon) throw InputError("epsilon must lie in (0, 1]");

  const bool exact = m <= exact_cap;
  const V mu = exact ? mms_exact(v1, 2, exact_cap).mu : mms_heuristic(v1, 2).mu;
  const V target = detail::min_target(mu, epsilon);
  CbDiagnostics d;
  d.epsilon = epsilon;
  d.mu_exact = exact;

  auto finish = [&](SuccinctCB e) {
    const CutSets cs = decode_cb(e, m);
    const Bundle t1 = set_difference(cs.S1, cs.Sprime);
    const Bundle t2 = set_union(cs.S2, cs.Sprime);
    e.i2 = bundle_value(v2, t2) < bundle_value(v2, t1) ? 1 : (bundle_value(v2, t1) < bundle_value(v2, t2) ? 2 : 1);
    if (diag) *diag = d;
    return e;
  };

  // Sweep construction over large items L and small items S.
  {
    const Rational eps_over_4 = epsilon / 4;
    std::vector<Item> large;
    for (Item j = 0; j < m; ++j) {
      bool is_large;
      if constexpr (std::is_same_v<V, double>)
        is_large = v1[j] > to_double(eps_over_4) * mu;
      else
        is_large = Rational(eps_over_4) * Rational(mu) < Rational(v1[j]);
      if (is_large) large.push_back(j);
    }
    d.large_items = large.size();
    std::vector<V> lv;
    for (Item j : large) lv.push_back(v1[j]);
    Bundle L1, L2;
    if (!large.empty()) {
      const auto split = large.size() <= exact_cap ? mms_exact(lv, 2, exact_cap) : mms_heuristic(lv, 2);
      std::vector<Item> a, b;
      for (Item t : split.witness[0]) a.push_back(large[t]);
      for (Item t : split.witness[1]) b.push_back(large[t]);
      L1 = Bundle(std::move(a));
      L2 = Bundle(std::move(b));
    }
    Bundle S = set_difference(Bundle::range(m), set_union(L1, L2));
    std::vector<V> small_prefix(m + 1, V(0));
    for (Item j = 0; j < m; ++j) small_prefix[j + 1] = small_prefix[j] + (S.contains(j) ? v1[j] : V(0));
    const V vl1 = bundle_value(v1, L1), vl2 = bundle_value(v1, L2);
    std::size_t jl = 0, jr = m;
    while (jl != jr) {
      const V left = vl1 + small_prefix[jl];
      const V right = vl2 + (small_prefix[m] - small_prefix[jr]);
      if (left < right)
        ++jl;
      else
        --jr;
    }
    SuccinctCB e;
    const std::size_t j = jl;
    // Interval of S1 is [0, j-1], of S2 is [j, m-1]; both may be empty.
    auto set_iv = [&](std::size_t t, std::size_t a, std::size_t b) {
      if (a > b || a >= m) {
        e.alpha[t] = m;
        e.beta[t] = m;
      } else {
        e.alpha[t] = a;
        e.beta[t] = b;
      }
    };
    e.alpha.fill(m);
    e.beta.fill(m);
    if (j == 0)
      set_iv(0, m, m);
    else
      set_iv(0, 0, j - 1);
    set_iv(1, j, m - 1);
    e.L1 = L1.items();
    e.L2 = L2.items();
    CutSets cs = decode_cb_unchecked(e, m);
    if (cs.S1.size() < cs.S2.size()) {
      std::swap(e.L1, e.L2);
      std::swap(e.alpha[0], e.alpha[1]);
      std::swap(e.beta[0], e.beta[1]);
      std::swap(cs.S1, cs.S2);
    }
    // The two best items of S1 join L1.
    {
      Bundle l1(e.L1);
      Bundle rest = cs.S1;
      for (int t = 0; t < 2 && !rest.empty(); ++t) {
        Item top = favorite(v1, rest);
        rest.erase(top);
        if (!l1.contains(top)) l1.insert(top);
      }
      e.L1 = l1.items();
    }
    const Bundle Snow = set_difference(Bundle::range(m), set_union(Bundle(e.L1), Bundle(e.L2)));
    const Bundle W = detail::restrict(Snow, e.alpha[0], e.beta[0], m);
    const std::size_t k2 = m / 2 - cs.S2.size();
    bool ok = cs.S2.size() <= m / 2 && k2 <= W.size();
    if (ok && k2 > 0) {
      const std::vector<Item>& w = W.items();
      const std::size_t k1 = w.size();
      std::size_t best_start = 0;
      V best_sum(0);
      for (std::size_t s = 0; s < k1; ++s) {
        V sum(0);
        for (std::size_t t = 0; t < k2; ++t) sum = sum + v1[w[(s + t) % k1]];
        if (s == 0 || sum < best_sum) {
          best_sum = sum;
          best_start = s;
        }
      }
      // Averaging argument: the cheapest window is at most the mean.
      if (V(static_cast<long long>(k1)) * best_sum > V(static_cast<long long>(k2)) * bundle_value(v1, W))
        throw InternalError("cyclic window above the average");
      const std::size_t end = best_start + k2 - 1;
      if (end < k1) {
        set_iv(2, w[best_start], w[end]);
      } else {
        set_iv(2, w[best_start], w[k1 - 1]);
        set_iv(3, w[0], w[end - k1]);
      }
    }
    if (ok) {
      cs = decode_cb_unchecked(e, m);
      ok = !(std::min(bundle_value(v1, cs.S1), bundle_value(v1, cs.S2)) < target) &&
           detail::sprime_ok(v1, cs.S1, cs.S2, cs.Sprime, m) && cs.S1.size() >= cs.S2.size();
    }
    if (ok) return finish(e);
  }

  // Explicit branch: optimal split, L2 = S2, S' = the cheapest items of S1.
  d.explicit_branch = true;
  auto split = exact ? mms_exact(v1, 2, exact_cap) : mms_heuristic(v1, 2);
  Bundle S1 = split.witness[0], S2 = split.witness[1];
  if (S1.size() < S2.size()) std::swap(S1, S2);
  const std::size_t k2 = m / 2 - S2.size();
  const Ordering ord = induced_ordering(v1);
  std::vector<Item> s1_by_rank(S1.begin(), S1.end());
  std::sort(s1_by_rank.begin(), s1_by_rank.end(), [&](Item a, Item b) { return ord.position(a) < ord.position(b); });
  Bundle Sp(std::vector<Item>(s1_by_rank.end() - static_cast<std::ptrdiff_t>(k2), s1_by_rank.end()));
  SuccinctCB e;
  e.L1 = set_difference(S1, Sp).items();
  e.L2 = S2.items();
  e.alpha = {0, m, 0, m};
  e.beta = {m - 1, m, m - 1, m};
  return finish(e);
}

template <ValueType V>
SuccinctCB encode_cb(const std::vector<V>& v1, const std::vector<V>& v2, const Rational& epsilon,
                     CbDiagnostics* diag = nullptr, std::size_t exact_cap = kDefaultExactCap) {
  return encode_cb(std::span<const V>(v1), std::span<const V>(v2), epsilon, diag, exact_cap);
}

}  // namespace pas
