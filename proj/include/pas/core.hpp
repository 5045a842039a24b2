#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

namespace pas {

/// Exact value type used by the library core.
using Rational = boost::rational<std::int64_t>;

using Item = std::size_t;
using Agent = std::size_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (bad item ids, bad dimensions, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A succinct encoding that cannot be decoded.
class DecodeError : public InputError {
 public:
  using InputError::InputError;
};

/// The exact maximin-share search refused an instance above its item cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

/// The requested mechanism does not support the instance (e.g. n != 2).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A broken internal invariant; always a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Additive, totally ordered value types: Rational, integers, double.
template <class V>
concept ValueType = requires(V a, V b) {
  { a + b } -> std::convertible_to<V>;
  { a - b } -> std::convertible_to<V>;
  { a < b } -> std::convertible_to<bool>;
  { a == b } -> std::convertible_to<bool>;
  V(0);
};

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

/// A set of items, stored sorted by identifier.
class Bundle {
 public:
  using const_iterator = std::vector<Item>::const_iterator;

  Bundle() = default;
  Bundle(std::initializer_list<Item> items) : Bundle(std::vector<Item>(items)) {}
  explicit Bundle(std::vector<Item> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    if (std::adjacent_find(items_.begin(), items_.end()) != items_.end())
      throw InputError("bundle contains a duplicate item");
  }

  /// The contiguous range 0..m-1.
  static Bundle range(std::size_t m) {
    Bundle b;
    b.items_.resize(m);
    std::iota(b.items_.begin(), b.items_.end(), Item{0});
    return b;
  }

  bool contains(Item item) const {
    return std::binary_search(items_.begin(), items_.end(), item);
  }

  void insert(Item item) {
    auto it = std::lower_bound(items_.begin(), items_.end(), item);
    if (it != items_.end() && *it == item) throw InternalError("item already in bundle");
    items_.insert(it, item);
  }

  void erase(Item item) {
    auto it = std::lower_bound(items_.begin(), items_.end(), item);
    if (it == items_.end() || *it != item) throw InternalError("item not in bundle");
    items_.erase(it);
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const_iterator begin() const { return items_.begin(); }
  const_iterator end() const { return items_.end(); }
  const std::vector<Item>& items() const { return items_; }

  friend bool operator==(const Bundle&, const Bundle&) = default;
  friend auto operator<=>(const Bundle& a, const Bundle& b) { return a.items_ <=> b.items_; }

 private:
  std::vector<Item> items_;
};

inline Bundle set_union(const Bundle& a, const Bundle& b) {
  std::vector<Item> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Bundle(std::move(out));
}

inline Bundle set_difference(const Bundle& a, const Bundle& b) {
  std::vector<Item> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Bundle(std::move(out));
}

inline std::string to_string(const Bundle& b) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < b.size(); ++k) os << (k ? "," : "") << b.items()[k];
  os << '}';
  return os.str();
}

// ---------------------------------------------------------------------------
// Ordering
// ---------------------------------------------------------------------------

/// A strict preference order over items 0..m-1, highest-ranked first.
class Ordering {
 public:
  Ordering() = default;
  explicit Ordering(std::vector<Item> ranked) : ranked_(std::move(ranked)), position_(ranked_.size()) {
    std::vector<bool> seen(ranked_.size(), false);
    for (std::size_t r = 0; r < ranked_.size(); ++r) {
      Item it = ranked_[r];
      if (it >= ranked_.size() || seen[it]) throw InputError("ordering is not a permutation of 0..m-1");
      seen[it] = true;
      position_[it] = r;
    }
  }

  static Ordering identity(std::size_t m) {
    std::vector<Item> v(m);
    std::iota(v.begin(), v.end(), Item{0});
    return Ordering(std::move(v));
  }

  Ordering reversed() const { return Ordering(std::vector<Item>(ranked_.rbegin(), ranked_.rend())); }

  std::size_t size() const { return ranked_.size(); }
  const std::vector<Item>& items() const { return ranked_; }
  Item operator[](std::size_t rank0) const { return ranked_[rank0]; }
  /// Zero-based position of an item; lower is better.
  std::size_t position(Item item) const { return position_.at(item); }
  bool prefers(Item a, Item b) const { return position_.at(a) < position_.at(b); }

  friend bool operator==(const Ordering& a, const Ordering& b) { return a.ranked_ == b.ranked_; }

 private:
  std::vector<Item> ranked_;
  std::vector<std::size_t> position_;
};

// ---------------------------------------------------------------------------
// Instance and Allocation
// ---------------------------------------------------------------------------

/// n agents with additive valuations over items 0..m-1.
template <ValueType V = Rational>
class Instance {
 public:
  Instance() = default;
  explicit Instance(std::vector<std::vector<V>> valuations) : valuations_(std::move(valuations)) {
    if (valuations_.empty()) throw InputError("instance needs at least one agent");
    m_ = valuations_.front().size();
    for (const auto& row : valuations_) {
      if (row.size() != m_) throw InputError("valuation matrix is not rectangular");
      for (const V& v : row)
        if (v < V(0)) throw InputError("valuations must be non-negative");
    }
  }

  std::size_t n() const { return valuations_.size(); }
  std::size_t m() const { return m_; }
  std::span<const V> values(Agent i) const { return valuations_.at(i); }
  const V& value(Agent i, Item j) const { return valuations_.at(i).at(j); }
  const std::vector<std::vector<V>>& valuations() const { return valuations_; }
  Bundle items() const { return Bundle::range(m_); }

 private:
  std::vector<std::vector<V>> valuations_;
  std::size_t m_ = 0;
};

/// One bundle per agent. Partial allocations may leave items unassigned.
struct Allocation {
  std::vector<Bundle> bundles;

  std::size_t n() const { return bundles.size(); }
  const Bundle& operator[](Agent i) const { return bundles.at(i); }
  Bundle& operator[](Agent i) { return bundles.at(i); }

  /// Bundles are pairwise disjoint and only use items < m.
  bool is_valid(std::size_t m) const {
    std::vector<bool> seen(m, false);
    for (const Bundle& b : bundles)
      for (Item it : b) {
        if (it >= m || seen[it]) return false;
        seen[it] = true;
      }
    return true;
  }

  /// Valid and covering every item.
  bool is_complete(std::size_t m) const {
    if (!is_valid(m)) return false;
    std::size_t total = 0;
    for (const Bundle& b : bundles) total += b.size();
    return total == m;
  }

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

// ---------------------------------------------------------------------------
// Elementary operations
// ---------------------------------------------------------------------------

template <ValueType V>
V bundle_value(std::span<const V> values, const Bundle& b) {
  V total(0);
  for (Item it : b) {
    if (it >= values.size()) throw InputError("unknown item identifier " + std::to_string(it));
    total = total + values[it];
  }
  return total;
}

template <ValueType V>
V bundle_value(const Instance<V>& inst, Agent agent, const Bundle& b) {
  if (agent >= inst.n()) throw InputError("agent index out of range");
  return bundle_value(inst.values(agent), b);
}

/// Argmax of values over the pool; ties go to the lowest identifier.
template <ValueType V>
Item favorite(std::span<const V> values, const Bundle& pool) {
  if (pool.empty()) throw PreconditionError("favorite of an empty pool");
  Item best = *pool.begin();
  for (Item it : pool) {
    if (it >= values.size()) throw InputError("unknown item identifier " + std::to_string(it));
    if (values[best] < values[it]) best = it;
  }
  return best;
}

/// First pool member in rank order.
inline Item favorite(const Ordering& order, const Bundle& pool) {
  if (pool.empty()) throw PreconditionError("favorite of an empty pool");
  Item best = *pool.begin();
  for (Item it : pool)
    if (order.position(it) < order.position(best)) best = it;
  return best;
}

/// Last pool member in rank order.
inline Item least_favorite(const Ordering& order, const Bundle& pool) {
  if (pool.empty()) throw PreconditionError("least favorite of an empty pool");
  Item worst = *pool.begin();
  for (Item it : pool)
    if (order.position(it) > order.position(worst)) worst = it;
  return worst;
}

/// Items sorted by value descending, ties by lowest identifier.
template <ValueType V>
Ordering induced_ordering(std::span<const V> values) {
  std::vector<Item> ids(values.size());
  std::iota(ids.begin(), ids.end(), Item{0});
  std::stable_sort(ids.begin(), ids.end(), [&](Item a, Item b) { return values[b] < values[a]; });
  return Ordering(std::move(ids));
}

template <ValueType V>
Ordering induced_ordering(const Instance<V>& inst, Agent agent) {
  return induced_ordering(inst.values(agent));
}

/// 1-based rank of an item in the induced total order.
template <ValueType V>
std::size_t rank_of(std::span<const V> values, Item item) {
  if (item >= values.size()) throw InputError("unknown item identifier " + std::to_string(item));
  std::size_t before = 0;
  for (Item j = 0; j < values.size(); ++j)
    if (values[item] < values[j] || (j < item && values[j] == values[item])) ++before;
  return before + 1;
}

template <ValueType V>
std::size_t rank_of(const Instance<V>& inst, Agent agent, Item item) {
  return rank_of(inst.values(agent), item);
}

/// Value of the agent's l-th best item (1-based); zero when l > m.
template <ValueType V>
V kth_value(std::span<const V> values, std::size_t l) {
  if (l == 0 || l > values.size()) return V(0);
  std::vector<V> sorted(values.begin(), values.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(l - 1), sorted.end(),
                   [](const V& a, const V& b) { return b < a; });
  return sorted[l - 1];
}

/// Best (lowest) true rank among the bundle's items; 0 for an empty bundle.
template <ValueType V>
std::size_t best_rank(std::span<const V> values, const Bundle& b) {
  if (b.empty()) return 0;
  const Ordering order = induced_ordering(values);
  std::size_t best = values.size();
  for (Item it : b) best = std::min(best, order.position(it));
  return best + 1;
}

/// Converts a sequence of reported or predicted values into the induced
/// orderings, one per agent.
template <ValueType V>
std::vector<Ordering> induced_orderings(const std::vector<std::vector<V>>& rows) {
  std::vector<Ordering> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(induced_ordering(std::span<const V>(row)));
  return out;
}

inline std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

inline double to_double(const Rational& r) {
  return boost::rational_cast<double>(r);
}
inline double to_double(double d) { return d; }
inline double to_double(long long v) { return static_cast<double>(v); }

}  // namespace pas
