#pragma once

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pas/n_agent.hpp"
#include "pas/verify.hpp"

namespace pas {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Rationals
// ---------------------------------------------------------------------------

/// Integers stay JSON numbers; anything else becomes a "p/q" string.
inline Json to_json(const Rational& r) {
  if (r.denominator() == 1) return r.numerator();
  return to_string(r);
}

namespace detail {

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
  std::int64_t out = 0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw InputError("malformed " + std::string(what) + " '" + std::string(s) + "'");
  return out;
}

// Exact value of a decimal literal such as -1.25e-3.
inline Rational parse_decimal(std::string_view s) {
  const std::string text(s);
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  std::int64_t exp10 = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    exp10 = parse_int(s.substr(e + 1), "exponent");
    s = s.substr(0, e);
  }
  std::int64_t num = 0;
  bool any = false, dot = false;
  for (char c : s) {
    if (c == '.' && !dot) {
      dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw InputError("malformed number '" + text + "'");
    any = true;
    if (num > (std::numeric_limits<std::int64_t>::max() - 9) / 10)
      throw InputError("number '" + text + "' has too many digits");
    num = num * 10 + (c - '0');
    if (dot) --exp10;
  }
  if (!any) throw InputError("malformed number '" + text + "'");
  Rational r(neg ? -num : num);
  for (; exp10 > 0; --exp10) {
    if (std::abs(r.numerator()) > std::numeric_limits<std::int64_t>::max() / 10)
      throw InputError("number '" + text + "' is out of range");
    r *= 10;
  }
  for (; exp10 < 0; ++exp10) {
    if (r.denominator() > std::numeric_limits<std::int64_t>::max() / 10)
      throw InputError("number '" + text + "' needs too much precision");
    r /= 10;
  }
  return r;
}

}  // namespace detail

/// Accepts "p/q", "p", or a decimal literal.
inline Rational parse_rational(std::string_view s) {
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    const auto p = detail::parse_int(s.substr(0, slash), "numerator");
    const auto q = detail::parse_int(s.substr(slash + 1), "denominator");
    if (q == 0) throw InputError("zero denominator in '" + std::string(s) + "'");
    return Rational(p, q);
  }
  return detail::parse_decimal(s);
}

inline Rational rational_from_json(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  // The dump is the shortest round-trip form, so 0.1 reads back as 1/10.
  if (j.is_number_float()) return detail::parse_decimal(j.dump());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw InputError("expected a number or a \"p/q\" string, got " + j.dump());
}

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

inline Json to_json(const Bundle& b) { return Json(b.items()); }

inline Json to_json(const Ordering& o) { return Json(o.items()); }

inline Json to_json(const TwoWaySplit& s) { return Json::array({to_json(s.first), to_json(s.second)}); }

inline Json to_json(const Allocation& a) {
  Json out = Json::array();
  for (const auto& b : a.bundles) out.push_back(to_json(b));
  return out;
}

inline Json to_json(const std::vector<Rational>& row) {
  Json out = Json::array();
  for (const auto& x : row) out.push_back(to_json(x));
  return out;
}

inline Json to_json(const std::vector<std::vector<Rational>>& rows) {
  Json out = Json::array();
  for (const auto& row : rows) out.push_back(to_json(row));
  return out;
}

inline Json to_json(const Ratio<Rational>& r) { return r.infinite ? Json("inf") : to_json(r.value); }

template <class T>
Json optional_json(const std::optional<T>& x) {
  return x ? Json(*x) : Json(nullptr);
}

namespace detail {

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline std::size_t size_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw InputError(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

inline std::vector<Item> item_list(const Json& j, std::size_t m, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array of item ids");
  std::vector<Item> out;
  for (const auto& x : j) {
    if (!x.is_number_integer() || x.get<std::int64_t>() < 0 || x.get<std::size_t>() >= m)
      throw InputError(std::string(what) + " holds an invalid item id " + x.dump());
    out.push_back(x.get<Item>());
  }
  return out;
}

inline std::vector<std::vector<Rational>> rational_rows(const Json& j, std::size_t n, std::size_t m,
                                                        const char* what) {
  if (!j.is_array() || j.size() != n)
    throw InputError(std::string(what) + " must hold " + std::to_string(n) + " rows");
  std::vector<std::vector<Rational>> rows;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != m)
      throw InputError(std::string(what) + " rows must hold " + std::to_string(m) + " entries");
    rows.emplace_back();
    for (const auto& x : row) rows.back().push_back(rational_from_json(x));
  }
  return rows;
}

inline std::vector<Ordering> ordering_rows(const Json& j, std::size_t n, std::size_t m) {
  if (!j.is_array() || j.size() != n) throw InputError("orderings must hold " + std::to_string(n) + " rows");
  std::vector<Ordering> out;
  for (const auto& row : j) {
    auto items = item_list(row, m, "ordering");
    if (items.size() != m) throw InputError("each ordering must rank all " + std::to_string(m) + " items");
    out.emplace_back(std::move(items));
  }
  return out;
}

inline std::array<std::size_t, 4> four(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_array() || v.size() != 4) throw InputError(std::string("'") + key + "' must hold 4 entries");
  std::array<std::size_t, 4> out{};
  for (std::size_t t = 0; t < 4; ++t) {
    if (!v[t].is_number_integer() || v[t].get<std::int64_t>() < 0)
      throw InputError(std::string("'") + key + "' entries must be non-negative integers");
    out[t] = v[t].get<std::size_t>();
  }
  return out;
}

inline int side(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != 2))
    throw InputError(std::string("'") + key + "' must be 1 or 2");
  return v.get<int>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Succinct hints
// ---------------------------------------------------------------------------

inline Json to_json(const SuccinctWF& e, std::size_t m) {
  return Json{{"kind", "wf"}, {"j0", e.j0}, {"b", e.b}, {"bit_size", wf_bit_size(m)}};
}

inline Json to_json(const SuccinctCB& e, std::size_t m) {
  return Json{{"kind", "cb"},   {"L1", e.L1},   {"L2", e.L2},
              {"alpha", e.alpha}, {"beta", e.beta}, {"i2", e.i2},
              {"bit_size", cb_bit_size(e, m)}};
}

inline SuccinctWF wf_from_json(const Json& j, std::size_t m) {
  SuccinctWF e;
  e.j0 = detail::size_field(j, "j0");
  e.b = detail::side(j, "b");
  if (e.j0 < 1 || e.j0 > m) throw DecodeError("j0 must lie in 1..m");
  return e;
}

inline SuccinctCB cb_from_json(const Json& j, std::size_t m) {
  SuccinctCB e;
  e.L1 = detail::item_list(detail::field(j, "L1"), m, "L1");
  e.L2 = detail::item_list(detail::field(j, "L2"), m, "L2");
  e.alpha = detail::four(j, "alpha");
  e.beta = detail::four(j, "beta");
  e.i2 = detail::side(j, "i2");
  decode_cb(e, m);  // structural checks
  return e;
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

struct InstanceFile {
  Instance<Rational> instance;
  PredictionProfile<Rational> predictions;
  // "accurate" when the file carries no predictions block.
  std::string prediction_kind = "accurate";
};

/// {"n","m","valuations","predictions":{"kind":"ordering"|"values"|"succinct",...}}.
/// Without a predictions block the predictions equal the valuations.
inline InstanceFile instance_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("instance must be a JSON object");
  const std::size_t n = detail::size_field(j, "n"), m = detail::size_field(j, "m");
  if (n == 0) throw InputError("instance needs at least one agent");
  InstanceFile out;
  out.instance = Instance<Rational>(detail::rational_rows(detail::field(j, "valuations"), n, m, "valuations"));
  if (!j.contains("predictions") || j.at("predictions").is_null()) {
    out.predictions = accurate_predictions(out.instance);
    return out;
  }
  const Json& p = j.at("predictions");
  const std::string kind = detail::field(p, "kind").is_string() ? p.at("kind").get<std::string>() : "";
  auto& pr = out.predictions;
  if (kind == "ordering") {
    pr = PredictionProfile<Rational>::from_orderings(detail::ordering_rows(detail::field(p, "orderings"), n, m));
  } else if (kind == "values") {
    pr = PredictionProfile<Rational>::from_values(detail::rational_rows(detail::field(p, "values"), n, m, "values"));
  } else if (kind == "succinct") {
    // Planting still needs orderings; take them from values when those are given instead.
    if (p.contains("orderings"))
      pr = PredictionProfile<Rational>::from_orderings(detail::ordering_rows(p.at("orderings"), n, m));
    else if (p.contains("values"))
      pr = PredictionProfile<Rational>::from_values(detail::rational_rows(p.at("values"), n, m, "values"));
    else
      throw InputError("succinct predictions need 'orderings' (or 'values') for planting");
    const Json& hint = detail::field(p, "hint");
    const std::string hk = detail::field(hint, "kind").is_string() ? hint.at("kind").get<std::string>() : "";
    if (hk == "wf")
      pr.wf = wf_from_json(hint, m);
    else if (hk == "cb")
      pr.cb = cb_from_json(hint, m);
    else
      throw InputError("succinct hint kind must be \"wf\" or \"cb\"");
  } else {
    throw InputError("predictions.kind must be \"ordering\", \"values\" or \"succinct\"");
  }
  if (p.contains("large_mask")) {
    const Json& mask = p.at("large_mask");
    if (!mask.is_array() || mask.size() != n) throw InputError("large_mask must hold n rows");
    std::vector<std::vector<bool>> rows;
    for (const auto& row : mask) {
      if (!row.is_array() || row.size() != m) throw InputError("large_mask rows must hold m entries");
      rows.emplace_back();
      for (const auto& x : row) {
        if (x.is_boolean())
          rows.back().push_back(x.get<bool>());
        else if (x.is_number_integer() && (x.get<int>() == 0 || x.get<int>() == 1))
          rows.back().push_back(x.get<int>() == 1);
        else
          throw InputError("large_mask entries must be booleans or 0/1");
      }
    }
    pr.large_mask = std::move(rows);
  }
  out.prediction_kind = kind;
  return out;
}

inline Json instance_to_json(const Instance<Rational>& inst) {
  return Json{{"n", inst.n()}, {"m", inst.m()}, {"valuations", to_json(inst.valuations())}};
}

inline Json instance_to_json(const Instance<Rational>& inst, const PredictionProfile<Rational>& preds) {
  Json j = instance_to_json(inst);
  Json p;
  Json orders = Json::array();
  for (const auto& o : preds.orderings) orders.push_back(to_json(o));
  if (preds.wf || preds.cb) {
    p["kind"] = "succinct";
    p["orderings"] = orders;
    p["hint"] = preds.wf ? to_json(*preds.wf, inst.m()) : to_json(*preds.cb, inst.m());
  } else if (preds.values) {
    p["kind"] = "values";
    p["values"] = to_json(*preds.values);
  } else {
    p["kind"] = "ordering";
    p["orderings"] = orders;
  }
  if (preds.large_mask) p["large_mask"] = *preds.large_mask;
  j["predictions"] = std::move(p);
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline Json to_json(const MmsResult<Rational>& r) {
  Json w = Json::array();
  for (const auto& b : r.witness) w.push_back(to_json(b));
  return Json{{"mu", to_json(r.mu)}, {"witness", w}, {"method", to_string(r.method)}};
}

inline Json to_json(const PlantStealTrace& t) {
  Json j{{"initial", to_json(t.initial)}};
  if (t.padding) j["padding"] = Json{{"item", t.padding->first}, {"to", t.padding->second + 1}};
  j["plant"] = Json{{"agent1", optional_json(t.planted1)}, {"agent2", optional_json(t.planted2)}};
  j["after_plant"] = to_json(t.planted);
  j["steal"] = Json{{"agent1", optional_json(t.stolen1)}, {"agent2", optional_json(t.stolen2)}};
  j["final"] = to_json(t.final);
  return j;
}

inline Json picks_json(const std::vector<std::pair<Agent, Item>>& picks) {
  Json out = Json::array();
  for (const auto& [a, it] : picks) out.push_back(Json{{"agent", a}, {"item", it}});
  return out;
}

inline Json to_json(const NAgentTrace<Rational>& t) {
  Json large{{"used_mask", t.large.used_mask}, {"picks", picks_json(t.large.picks)}};
  if (!t.large.mu.empty()) {
    large["mu"] = to_json(t.large.mu);
    Json methods = Json::array();
    for (auto m : t.large.mu_method) methods.push_back(to_string(m));
    large["mu_method"] = methods;
  }
  large["leftover_agent"] = optional_json(t.large.leftover_agent);
  large["leftover"] = to_json(t.large.leftover);
  large["live"] = t.large.live;
  Json tentative = Json::array();
  for (const auto& b : t.tentative) tentative.push_back(to_json(b));
  Json events = Json::array();
  for (const auto& e : t.events)
    events.push_back(Json{{"level", e.level},
                          {"kind", to_string(e.kind)},
                          {"agent", e.agent},
                          {"other", e.other},
                          {"items", to_json(e.items)}});
  return Json{{"large", large},
              {"tentative_picks", picks_json(t.tentative_picks)},
              {"tentative", tentative},
              {"events", events},
              {"depth", t.depth},
              {"gray", t.gray},
              {"final", to_json(t.final)}};
}

inline Json to_json(const MechanismReport<Rational>& r) {
  Json methods = Json::array();
  for (auto m : r.mu_method) methods.push_back(to_string(m));
  Json ratios = Json::array();
  for (const auto& x : r.ratios) ratios.push_back(to_json(x));
  Json j{{"mechanism", r.mechanism},
         {"allocation", to_json(r.allocation)},
         {"values", to_json(r.values)},
         {"mu", to_json(r.mu)},
         {"mu_method", methods},
         {"ratios", ratios}};
  if (r.trace) j["trace"] = to_json(*r.trace);
  return j;
}

inline Json to_json(const NAgentReport<Rational>& r) {
  Json j = to_json(r.report);
  j["trace"] = to_json(r.trace);
  j["k_relaxed"] = r.k_relaxed;
  j["mu_relaxed"] = to_json(r.mu_relaxed);
  if (r.relaxed_bound_vacuous) {
    j["relaxed_ratios"] = "bound vacuous";
  } else {
    Json ratios = Json::array();
    for (const auto& x : r.relaxed_ratios) ratios.push_back(x ? to_json(*x) : Json(nullptr));
    j["relaxed_ratios"] = ratios;
  }
  return j;
}

inline Json to_json(const Violation& v) {
  Json preds = Json::array();
  for (const auto& o : v.predictions) preds.push_back(to_json(o));
  Json j{{"trial", v.trial},
         {"agent", v.agent},
         {"check", v.check},
         {"valuations", to_json(v.valuations)},
         {"predictions", preds}};
  if (v.prediction_values) j["prediction_values"] = to_json(*v.prediction_values);
  if (v.misreport) j["misreport"] = to_json(*v.misreport);
  j["observed"] = v.observed;
  j["required"] = v.required;
  return j;
}

inline Json to_json(const PropertyReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations) violations.push_back(to_json(v));
  Json by_check = Json::object();
  for (const auto& [k, c] : r.by_check) by_check[k] = c;
  return Json{{"property", r.property},
              {"mechanism", r.mechanism},
              {"pass", r.pass()},
              {"seed", r.seed},
              {"instances", r.instances},
              {"evaluations", r.evaluations},
              {"violation_count", r.violation_count},
              {"by_check", by_check},
              {"first_violation_trial", optional_json(r.first_violation_trial)},
              {"partial", r.partial},
              {"lower_bound_only", r.lower_bound_only},
              {"notes", r.notes},
              {"violations", violations}};
}

inline Json to_json(const NoiseCurve& c) {
  Json points = Json::array();
  for (const auto& p : c.points)
    points.push_back(Json{{"m", p.m},
                          {"d", p.d},
                          {"instances", p.instances},
                          {"max_ratio", p.max_ratio},
                          {"bound", p.bound},
                          {"violations", p.violations}});
  Json j = to_json(c.report);
  j["points"] = points;
  return j;
}

}  // namespace pas
