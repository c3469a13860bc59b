#pragma once

// Configuration-driven experiments: a JSON config names an experiment kind,
// a partition, an environment and an n-grid; running it yields one report
// row per grid point (per strategy for the strategy kind) plus a mergeable
// accumulator state per row.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "environment.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "parallel.hpp"
#include "partition.hpp"
#include "srw.hpp"
#include "stats.hpp"
#include "strategy.hpp"

namespace mixwalk {

using nlohmann::json;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"return-window", "range-stats",        "returns",
                                              "shape",         "strategy",           "decomposition-test",
                                              "srw-reference"};
  return kinds;
}

inline const std::vector<std::string>& srw_quantities() {
  static const std::vector<std::string> q{"max-local-time", "return-window", "range", "returns",
                                          "hitting"};
  return q;
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Shortest round-trip decimal, independent of locale.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

struct NGrid {
  struct Geometric {
    std::uint64_t base = 2;
    std::uint64_t from = 0;
    std::uint64_t to = 0;
    std::uint64_t step = 1;
  };
  std::vector<std::uint64_t> explicit_values;
  std::optional<Geometric> geometric;

  std::vector<std::uint64_t> values() const {
    if (!geometric) return explicit_values;
    std::vector<std::uint64_t> out;
    for (std::uint64_t e = geometric->from; e <= geometric->to; e += geometric->step) {
      std::uint64_t v = 1;
      for (std::uint64_t i = 0; i < e; ++i) {
        if (v > (UINT64_MAX / geometric->base)) throw ConfigError("config field 'n_grid': value overflows");
        v *= geometric->base;
      }
      out.push_back(v);
    }
    return out;
  }
};

struct ExperimentConfig {
  std::string kind = "return-window";
  Partition partition{std::vector<int>{2, 2}};
  Environment environment;
  NGrid n_grid;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double bound_c = 10.0;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> replica_range;
  std::string out = "out";
  std::vector<std::string> strategies;  // strategy kind; empty = all built-ins
  std::size_t dimension = 2;            // strategy kind
  bool inverted = false;                // decomposition-test
  bool srw_baseline = false;            // returns
  std::string quantity = "max-local-time";  // srw-reference
  std::string t_rule = "n";                 // srw-reference return-window: "n" or "lower"
  bool exact = false;                       // return-window: attach the enumerated probability

  std::pair<std::uint64_t, std::uint64_t> effective_range() const {
    return replica_range.value_or(std::pair<std::uint64_t, std::uint64_t>{0, replicas});
  }
};

// --- JSON (de)serialization ----------------------------------------------------

inline json environment_to_json(const Environment& env) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Environment::Empty>) {
          return {{"type", "empty"}};
        } else if constexpr (std::is_same_v<T, Environment::Finite>) {
          json sites = json::array();
          for (const auto& [c, n] : s.sites) sites.push_back({{"site", c}, {"count", n}});
          return {{"type", "finite"}, {"sites", sites}};
        } else if constexpr (std::is_same_v<T, Environment::Line>) {
          return {{"type", "line"}, {"free_block", s.free_block}, {"fixed", s.fixed}, {"count", s.count}};
        } else {
          return {{"type", "trumpet"}, {"count", s.count}};
        }
      },
      env.spec());
}

namespace detail {

[[noreturn]] inline void field_error(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

inline std::uint64_t get_u64(const json& j, const std::string& field) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    field_error(field, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline std::int64_t get_i64(const json& j, const std::string& field) {
  if (!j.is_number_integer()) field_error(field, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::int32_t get_i32(const json& j, const std::string& field) {
  const std::int64_t v = get_i64(j, field);
  if (v < INT32_MIN || v > INT32_MAX) field_error(field, "coordinate does not fit in 32 bits");
  return static_cast<std::int32_t>(v);
}

inline std::uint32_t get_count(const json& j, const std::string& field) {
  const std::uint64_t v = get_u64(j, field);
  if (v < 1 || v > UINT32_MAX) field_error(field, "pre-visit count must be in 1..2^32-1");
  return static_cast<std::uint32_t>(v);
}

inline Coords get_coords(const json& j, const std::string& field) {
  if (!j.is_array()) field_error(field, "expected an array of integers");
  Coords c;
  for (std::size_t i = 0; i < j.size(); ++i) c.push_back(get_i32(j[i], field + "[" + std::to_string(i) + "]"));
  return c;
}

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) field_error(where.empty() ? key : where + "." + key, "unknown field");
  }
}

}  // namespace detail

inline Environment environment_from_json(const json& j) {
  using detail::field_error;
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    field_error("environment", "expected an object with a string 'type'");
  const std::string type = j["type"];
  if (type == "empty") {
    detail::check_keys(j, "environment", {"type"});
    return Environment::empty();
  }
  if (type == "finite") {
    detail::check_keys(j, "environment", {"type", "sites"});
    if (!j.contains("sites") || !j["sites"].is_array()) field_error("environment.sites", "expected an array");
    std::vector<std::pair<Coords, std::uint32_t>> sites;
    for (std::size_t i = 0; i < j["sites"].size(); ++i) {
      const json& s = j["sites"][i];
      const std::string f = "environment.sites[" + std::to_string(i) + "]";
      if (!s.is_object() || !s.contains("site")) field_error(f, "expected {\"site\": [...], \"count\": k}");
      detail::check_keys(s, f, {"site", "count"});
      sites.emplace_back(detail::get_coords(s["site"], f + ".site"),
                         s.contains("count") ? detail::get_count(s["count"], f + ".count") : 1u);
    }
    return Environment::finite(std::move(sites));
  }
  if (type == "line") {
    detail::check_keys(j, "environment", {"type", "free_block", "fixed", "count"});
    if (!j.contains("free_block")) field_error("environment.free_block", "missing");
    return Environment::line(detail::get_u64(j["free_block"], "environment.free_block"),
                             j.contains("fixed") ? detail::get_coords(j["fixed"], "environment.fixed") : Coords{},
                             j.contains("count") ? detail::get_count(j["count"], "environment.count") : 1u);
  }
  if (type == "trumpet") {
    detail::check_keys(j, "environment", {"type", "count"});
    return Environment::trumpet(j.contains("count") ? detail::get_count(j["count"], "environment.count") : 1u);
  }
  field_error("environment.type", "unknown environment type '" + type + "'");
}

inline json grid_to_json(const NGrid& g) {
  if (g.geometric)
    return {{"base", g.geometric->base}, {"from", g.geometric->from}, {"to", g.geometric->to},
            {"step", g.geometric->step}};
  return g.explicit_values;
}

inline NGrid grid_from_json(const json& j) {
  NGrid g;
  if (j.is_array()) {
    if (j.empty()) detail::field_error("n_grid", "must not be empty");
    for (std::size_t i = 0; i < j.size(); ++i)
      g.explicit_values.push_back(detail::get_u64(j[i], "n_grid[" + std::to_string(i) + "]"));
    return g;
  }
  if (j.is_object()) {
    detail::check_keys(j, "n_grid", {"base", "from", "to", "step"});
    NGrid::Geometric geo;
    if (!j.contains("from") || !j.contains("to")) detail::field_error("n_grid", "geometric grid needs 'from' and 'to'");
    geo.base = j.contains("base") ? detail::get_u64(j["base"], "n_grid.base") : 2;
    geo.from = detail::get_u64(j["from"], "n_grid.from");
    geo.to = detail::get_u64(j["to"], "n_grid.to");
    geo.step = j.contains("step") ? detail::get_u64(j["step"], "n_grid.step") : 1;
    if (geo.base < 2) detail::field_error("n_grid.base", "must be >= 2");
    if (geo.step < 1) detail::field_error("n_grid.step", "must be >= 1");
    if (geo.from > geo.to) detail::field_error("n_grid", "'from' exceeds 'to'");
    g.geometric = geo;
    return g;
  }
  detail::field_error("n_grid", "expected an array or {base, from, to, step}");
}

/// Fields that determine results; excludes workers, output path and the
/// replica sub-range so partial runs of one experiment share a digest.
inline json config_identity_json(const ExperimentConfig& c) {
  json j = {{"kind", c.kind},
            {"partition", c.partition.dims()},
            {"environment", environment_to_json(c.environment)},
            {"n_grid", grid_to_json(c.n_grid)},
            {"replicas", c.replicas},
            {"seed", c.seed},
            {"C", c.bound_c}};
  if (c.kind == "strategy") {
    j["strategies"] = c.strategies;
    j["dimension"] = c.dimension;
  }
  if (c.kind == "decomposition-test") j["inverted"] = c.inverted;
  if (c.kind == "return-window") j["exact"] = c.exact;
  if (c.kind == "returns") j["srw_baseline"] = c.srw_baseline;
  if (c.kind == "srw-reference") {
    j["quantity"] = c.quantity;
    j["t_rule"] = c.t_rule;
  }
  return j;
}

inline json config_to_json(const ExperimentConfig& c) {
  json j = config_identity_json(c);
  j["workers"] = c.workers;
  j["out"] = c.out;
  if (c.replica_range) j["replica_range"] = {c.replica_range->first, c.replica_range->second};
  return j;
}

inline std::string config_digest(const ExperimentConfig& c) {
  return fnv1a_hex(config_identity_json(c).dump());
}

/// Checks every precondition the experiment will rely on, before any
/// simulation starts.
inline void validate_config(const ExperimentConfig& c) {
  using detail::field_error;
  bool known = false;
  for (const auto& k : experiment_kinds()) known = known || k == c.kind;
  if (!known) field_error("kind", "unknown experiment kind '" + c.kind + "'");
  if (c.replicas < 1) field_error("replicas", "must be >= 1");
  if (c.replica_range) {
    const auto [b, e] = *c.replica_range;
    if (b >= e || e > c.replicas) field_error("replica_range", "must satisfy begin < end <= replicas");
  }
  if (!(c.bound_c > 0)) field_error("C", "must be > 0");
  try {
    c.environment.validate(c.partition);
  } catch (const ConfigError& e) {
    field_error("environment", e.what());
  }
  const auto grid = c.n_grid.values();
  if (grid.empty()) field_error("n_grid", "must not be empty");
  for (std::uint64_t n : grid)
    if (n > (1ULL << 40)) field_error("n_grid", "n = " + std::to_string(n) + " exceeds 2^40 steps");

  auto require_all = [&](auto pred, const std::string& what) {
    for (std::uint64_t n : grid)
      if (!pred(n)) field_error("n_grid", "n = " + std::to_string(n) + ": " + what);
  };
  if (c.kind == "range-stats") require_all([](auto n) { return n >= 2; }, "range statistics need n >= 2");
  if (c.kind == "returns") require_all([](auto n) { return n >= 1; }, "returns need n >= 1");
  if (c.kind == "shape" && c.partition.dims() != std::vector<int>{1, 1})
    field_error("partition", "shape experiments require M(1,1)");
  if (c.kind == "decomposition-test" && c.partition.blocks() != 2)
    field_error("partition", "decomposition test requires exactly two blocks");
  if (c.kind == "decomposition-test") require_all([](auto n) { return n >= 1; }, "need n >= 1");
  if (c.exact && c.kind != "return-window") field_error("exact", "only return-window experiments have an exact value");
  if (c.exact && c.environment.kind_name() == "trumpet")
    field_error("exact", "the trumpet environment cannot be enumerated");
  if (c.kind == "strategy") {
    if (c.dimension < 1 || c.dimension > kMaxDim) field_error("dimension", "must be in 1..8");
    for (const auto& s : c.strategies) {
      bool ok = false;
      for (const auto& b : builtin_strategy_names()) ok = ok || s == b;
      if (!ok) field_error("strategies", "unknown strategy '" + s + "'");
    }
  }
  if (c.kind == "srw-reference") {
    bool ok = false;
    for (const auto& q : srw_quantities()) ok = ok || q == c.quantity;
    if (!ok) field_error("quantity", "unknown srw quantity '" + c.quantity + "'");
    if (c.t_rule != "n" && c.t_rule != "lower") field_error("t_rule", "must be \"n\" or \"lower\"");
    if (c.quantity == "range" || c.quantity == "returns")
      require_all([](auto n) { return n >= 1; }, "need n >= 1");
    if (c.quantity == "hitting") require_all([](auto n) { return n >= 2; }, "hitting needs |x| >= 2");
    if (c.quantity == "return-window" && c.t_rule == "lower")
      require_all([](auto n) { return n >= 3; }, "the lower t rule needs n >= 3");
  }
}

inline ExperimentConfig config_from_json(const json& j) {
  using detail::field_error;
  if (!j.is_object()) field_error("<root>", "config must be a JSON object");
  detail::check_keys(j, "", {"kind", "partition", "environment", "n_grid", "replicas", "seed", "workers", "C",
                             "replica_range", "out", "strategies", "dimension", "inverted", "srw_baseline",
                             "quantity", "t_rule", "exact"});
  ExperimentConfig c;
  if (!j.contains("kind") || !j["kind"].is_string()) field_error("kind", "missing or not a string");
  c.kind = j["kind"];
  if (j.contains("partition")) {
    const json& p = j["partition"];
    if (!p.is_array()) field_error("partition", "expected an array of block sizes");
    std::vector<int> dims;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string f = "partition[" + std::to_string(i) + "]";
      const std::int64_t v = detail::get_i64(p[i], f);
      if (v < 1) field_error(f, "d_" + std::to_string(i + 1) + " = " + std::to_string(v) + " must be >= 1");
      dims.push_back(static_cast<int>(std::min<std::int64_t>(v, 1000)));
    }
    try {
      c.partition = Partition(std::move(dims));
    } catch (const ConfigError& e) {
      field_error("partition", e.what());
    }
  }
  if (j.contains("environment")) c.environment = environment_from_json(j["environment"]);
  if (!j.contains("n_grid")) field_error("n_grid", "missing");
  c.n_grid = grid_from_json(j["n_grid"]);
  if (j.contains("replicas")) c.replicas = detail::get_u64(j["replicas"], "replicas");
  if (j.contains("seed")) c.seed = detail::get_u64(j["seed"], "seed");
  if (j.contains("workers")) c.workers = static_cast<unsigned>(detail::get_u64(j["workers"], "workers"));
  if (j.contains("C")) {
    if (!j["C"].is_number()) field_error("C", "expected a number");
    c.bound_c = j["C"].get<double>();
  }
  if (j.contains("replica_range")) {
    const json& r = j["replica_range"];
    if (!r.is_array() || r.size() != 2) field_error("replica_range", "expected [begin, end]");
    c.replica_range = std::pair{detail::get_u64(r[0], "replica_range[0]"), detail::get_u64(r[1], "replica_range[1]")};
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) field_error("out", "expected a string");
    c.out = j["out"];
  }
  if (j.contains("strategies")) {
    if (!j["strategies"].is_array()) field_error("strategies", "expected an array of names");
    for (const auto& s : j["strategies"]) {
      if (!s.is_string()) field_error("strategies", "expected strings");
      c.strategies.push_back(s);
    }
  }
  if (j.contains("dimension")) c.dimension = detail::get_u64(j["dimension"], "dimension");
  if (j.contains("inverted")) {
    if (!j["inverted"].is_boolean()) field_error("inverted", "expected a boolean");
    c.inverted = j["inverted"];
  }
  if (j.contains("srw_baseline")) {
    if (!j["srw_baseline"].is_boolean()) field_error("srw_baseline", "expected a boolean");
    c.srw_baseline = j["srw_baseline"];
  }
  if (j.contains("quantity")) {
    if (!j["quantity"].is_string()) field_error("quantity", "expected a string");
    c.quantity = j["quantity"];
  }
  if (j.contains("t_rule")) {
    if (!j["t_rule"].is_string()) field_error("t_rule", "expected a string");
    c.t_rule = j["t_rule"];
  }
  if (j.contains("exact")) {
    if (!j["exact"].is_boolean()) field_error("exact", "expected a boolean");
    c.exact = j["exact"];
  }
  if (c.kind == "strategy" && c.strategies.empty()) c.strategies = builtin_strategy_names();
  validate_config(c);
  return c;
}

// --- row states ------------------------------------------------------------------

using RowState =
    std::variant<BernoulliCounter, MeanAccumulator, RangeStats, ReturnsSummary, ShapeSummary, DecompositionCells>;

inline json acc_to_json(const MeanAccumulator& a) {
  return {{"count", a.count}, {"sum", int128_to_string(a.sum)}, {"sumsq", int128_to_string(a.sumsq)},
          {"min", a.min}, {"max", a.max}};
}

inline MeanAccumulator acc_from_json(const json& j) {
  MeanAccumulator a;
  a.count = j.at("count").get<std::uint64_t>();
  a.sum = int128_from_string(j.at("sum").get<std::string>());
  a.sumsq = int128_from_string(j.at("sumsq").get<std::string>());
  a.min = j.at("min").get<std::int64_t>();
  a.max = j.at("max").get<std::int64_t>();
  return a;
}

inline json state_to_json(const RowState& s) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BernoulliCounter>) {
          return {{"type", "bernoulli"}, {"trials", v.trials}, {"successes", v.successes}};
        } else if constexpr (std::is_same_v<T, MeanAccumulator>) {
          json j = acc_to_json(v);
          j["type"] = "mean";
          return j;
        } else if constexpr (std::is_same_v<T, RangeStats>) {
          return {{"type", "range"}, {"range", acc_to_json(v.range)}, {"upper_violations", v.upper_violations},
                  {"lower_violations", v.lower_violations}};
        } else if constexpr (std::is_same_v<T, ReturnsSummary>) {
          json h = json::array();
          for (const auto& [k, c] : v.histogram) h.push_back({k, c});
          return {{"type", "returns"}, {"total", acc_to_json(v.total)}, {"late", acc_to_json(v.late)}, {"histogram", h}};
        } else if constexpr (std::is_same_v<T, ShapeSummary>) {
          return {{"type", "shape"}, {"ratio", acc_to_json(v.ratio)}, {"zero_height", v.zero_height}};
        } else {
          return {{"type", "cells"}, {"direct", v.direct}, {"reconstructed", v.reconstructed}};
        }
      },
      s);
}

inline RowState state_from_json(const json& j) {
  const std::string type = j.at("type");
  if (type == "bernoulli") return BernoulliCounter{j.at("trials"), j.at("successes")};
  if (type == "mean") return acc_from_json(j);
  if (type == "range")
    return RangeStats{acc_from_json(j.at("range")), j.at("upper_violations"), j.at("lower_violations")};
  if (type == "returns") {
    ReturnsSummary r;
    r.total = acc_from_json(j.at("total"));
    r.late = acc_from_json(j.at("late"));
    for (const auto& e : j.at("histogram")) r.histogram[e.at(0).get<std::uint64_t>()] = e.at(1).get<std::uint64_t>();
    return r;
  }
  if (type == "shape") return ShapeSummary{acc_from_json(j.at("ratio")), j.at("zero_height")};
  if (type == "cells")
    return DecompositionCells{j.at("direct").get<std::vector<std::uint64_t>>(),
                              j.at("reconstructed").get<std::vector<std::uint64_t>>()};
  throw ConfigError("summary: unknown row state type '" + type + "'");
}

inline void merge_state(RowState& into, const RowState& from) {
  if (into.index() != from.index()) throw ConfigError("merge: row state types differ");
  std::visit(
      [&](auto& a) {
        using T = std::decay_t<decltype(a)>;
        a.merge(std::get<T>(from));
      },
      into);
}

// --- report rows -------------------------------------------------------------------

struct ReportRow {
  std::string kind;
  std::uint64_t n = 0;
  std::string label;  // strategy name / srw quantity / series; empty otherwise
  Estimate estimate;
  std::vector<std::pair<std::string, std::string>> extras;  // fixed columns per kind
  double wall_time = 0;
};

inline std::vector<std::string> extra_columns(const std::string& kind) {
  if (kind == "return-window") return {"successes", "exact"};
  if (kind == "range-stats") return {"mean_range", "min_range", "max_range", "upper_violations", "lower_violations", "C"};
  if (kind == "returns") return {"late_mean", "late_ci_lo", "late_ci_hi", "max_returns"};
  if (kind == "shape") return {"zero_height"};
  if (kind == "strategy") return {"range_per_step", "range_ln_n_over_n"};
  if (kind == "decomposition-test") return {"chi2", "dof", "cells", "inverted"};
  if (kind == "srw-reference") return {"scaled"};
  return {};
}

inline std::string csv_header(const std::string& kind) {
  std::string h = "kind,n,label,point,stderr,ci_lo,ci_hi,replicas,seed,digest";
  for (const auto& c : extra_columns(kind)) h += "," + c;
  return h + ",wall_time";
}

inline std::string csv_line(const ReportRow& r, bool with_wall_time = true) {
  std::string s = r.kind + "," + std::to_string(r.n) + "," + r.label + "," + format_double(r.estimate.point) + "," +
                  format_double(r.estimate.stderr_) + "," + format_double(r.estimate.ci_lo) + "," +
                  format_double(r.estimate.ci_hi) + "," + std::to_string(r.estimate.replicas) + "," +
                  std::to_string(r.estimate.master_seed) + "," + r.estimate.digest;
  for (const auto& [k, v] : r.extras) s += "," + v;
  if (with_wall_time) s += "," + format_double(r.wall_time);
  return s;
}

inline json row_to_json(const ReportRow& r) {
  json extras = json::object();
  for (const auto& [k, v] : r.extras) extras[k] = v;
  return {{"kind", r.kind},         {"n", r.n},
          {"label", r.label},       {"point", r.estimate.point},
          {"stderr", r.estimate.stderr_}, {"ci_lo", r.estimate.ci_lo},
          {"ci_hi", r.estimate.ci_hi},   {"replicas", r.estimate.replicas},
          {"seed", r.estimate.master_seed}, {"digest", r.estimate.digest},
          {"extras", extras},       {"wall_time", r.wall_time}};
}

namespace detail {

inline std::string u64s(std::uint64_t v) { return std::to_string(v); }
inline std::string i64s(std::int64_t v) { return std::to_string(v); }

inline double ln(double x) { return std::log(x); }

}  // namespace detail

/// Derives the report row of one grid point from its accumulated state.
inline ReportRow make_row(const ExperimentConfig& c, std::uint64_t n, const std::string& label,
                          const RowState& state) {
  ReportRow row;
  row.kind = c.kind;
  row.n = n;
  row.label = label;
  const double nd = static_cast<double>(n);
  using detail::u64s;
  if (c.kind == "return-window") {
    const auto& b = std::get<BernoulliCounter>(state);
    row.estimate = b.estimate();
    row.extras = {{"successes", u64s(b.successes)}, {"exact", ""}};
  } else if (c.kind == "range-stats") {
    const auto& r = std::get<RangeStats>(state);
    row.estimate = r.mean_ratio(n);
    row.extras = {{"mean_range", format_double(r.range.estimate().point)},
                  {"min_range", detail::i64s(r.range.min)},
                  {"max_range", detail::i64s(r.range.max)},
                  {"upper_violations", u64s(r.upper_violations)},
                  {"lower_violations", u64s(r.lower_violations)},
                  {"C", format_double(c.bound_c)}};
  } else if (c.kind == "returns" || (c.kind == "srw-reference" && c.quantity == "returns")) {
    const auto& r = std::get<ReturnsSummary>(state);
    row.estimate = r.total.estimate();
    const Estimate late = r.late.estimate();
    if (c.kind == "returns") {
      row.extras = {{"late_mean", format_double(late.point)},
                    {"late_ci_lo", format_double(late.ci_lo)},
                    {"late_ci_hi", format_double(late.ci_hi)},
                    {"max_returns", detail::i64s(r.total.max)}};
    } else {
      row.extras = {{"scaled", format_double(row.estimate.point / detail::ln(nd))}};
    }
  } else if (c.kind == "shape") {
    const auto& s = std::get<ShapeSummary>(state);
    row.estimate = s.estimate();
    row.estimate.replicas = s.ratio.count + s.zero_height;
    row.extras = {{"zero_height", u64s(s.zero_height)}};
  } else if (c.kind == "strategy") {
    const auto& a = std::get<MeanAccumulator>(state);
    row.estimate = a.estimate();
    const double per = row.estimate.point / std::max(nd, 1.0);
    row.extras = {{"range_per_step", format_double(per)},
                  {"range_ln_n_over_n", n >= 2 ? format_double(per * detail::ln(nd)) : "nan"}};
  } else if (c.kind == "decomposition-test") {
    const auto& cells = std::get<DecompositionCells>(state);
    const ChiSquareResult chi = cells.test();
    std::uint64_t total = 0;
    for (auto v : cells.direct) total += v;
    row.estimate.point = row.estimate.ci_lo = row.estimate.ci_hi = chi.p_value;
    row.estimate.replicas = total;
    row.extras = {{"chi2", format_double(chi.statistic)},
                  {"dof", std::to_string(chi.dof)},
                  {"cells", std::to_string(chi.cells)},
                  {"inverted", c.inverted ? "true" : "false"}};
  } else if (c.kind == "srw-reference") {
    double scaled = 0;
    if (c.quantity == "max-local-time") {
      row.estimate = std::get<MeanAccumulator>(state).estimate();
      scaled = row.estimate.point / (detail::ln(nd) * detail::ln(nd));
    } else if (c.quantity == "range") {
      row.estimate = std::get<MeanAccumulator>(state).estimate();
      scaled = row.estimate.point * detail::ln(nd) / nd;
    } else {
      row.estimate = std::get<BernoulliCounter>(state).estimate();
      scaled = row.estimate.point * detail::ln(nd) / detail::ln(detail::ln(nd));
    }
    row.extras = {{"scaled", format_double(scaled)}};
  }
  row.estimate.master_seed = c.seed;
  row.estimate.digest = config_digest(c);
  return row;
}

// --- running ---------------------------------------------------------------------

struct RowResult {
  std::uint64_t n = 0;
  std::string label;
  RowState state;
  double wall_time = 0;
  std::string exact;  // "p/q" when the config asks for it
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string digest;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> replica_ranges;
  std::vector<RowResult> results;

  std::vector<ReportRow> rows() const {
    std::vector<ReportRow> out;
    for (const auto& r : results) {
      ReportRow row = make_row(config, r.n, r.label, r.state);
      row.wall_time = r.wall_time;
      for (auto& [k, v] : row.extras)
        if (k == "exact") v = r.exact;
      out.push_back(std::move(row));
    }
    return out;
  }

  std::string csv(bool with_wall_time = true) const {
    std::string s = csv_header(config.kind);
    if (!with_wall_time) s.erase(s.rfind(",wall_time"));
    s += "\n";
    for (const auto& r : rows()) s += csv_line(r, with_wall_time) + "\n";
    return s;
  }

  std::optional<ScalingFit> fit() const {
    if (config.kind != "return-window" || results.size() < 3) return std::nullopt;
    std::vector<std::pair<std::uint64_t, double>> grid;
    for (const auto& r : results) {
      if (r.n < 16) return std::nullopt;
      grid.emplace_back(r.n, std::get<BernoulliCounter>(r.state).estimate().point);
    }
    return fit_scaling(std::move(grid));
  }

  json summary() const {
    json rows_json = json::array();
    const auto derived = this->rows();
    for (std::size_t i = 0; i < results.size(); ++i) {
      json r = row_to_json(derived[i]);
      r["state"] = state_to_json(results[i].state);
      if (!results[i].exact.empty()) r["exact"] = results[i].exact;
      rows_json.push_back(std::move(r));
    }
    json ranges = json::array();
    for (const auto& [b, e] : replica_ranges) ranges.push_back({b, e});
    json j = {{"kind", config.kind},
              {"digest", digest},
              {"seed", config.seed},
              {"config", config_identity_json(config)},
              {"replica_ranges", ranges},
              {"rows", rows_json}};
    if (auto f = fit()) {
      j["fit"] = {{"model", "p_n = C (ln ln n / ln n)^2"},
                  {"C", f->constant},
                  {"residual_norm", f->residual_norm},
                  {"relative_residual", f->relative_residual},
                  {"good", f->good}};
    }
    return j;
  }
};

namespace detail {

inline std::uint64_t kind_tag(const std::string& kind) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : kind) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline RowState run_point(const ExperimentConfig& c, const MonteCarlo& mc, std::uint64_t n,
                          const std::string& label, const EnvironmentPtr& env) {
  const Partition& p = c.partition;
  if (c.kind == "return-window") return estimate_return_window(p, env, n, mc);
  if (c.kind == "range-stats") return estimate_range_stats(p, env, n, c.bound_c, mc);
  if (c.kind == "returns")
    return label == "srw" ? srw::returns_to_origin_srw(n, mc) : estimate_returns_to_origin(p, env, n, mc);
  if (c.kind == "shape") return estimate_shape_ratio(p, env, n, mc);
  if (c.kind == "strategy") return evaluate_strategy(label, c.dimension, n, mc);
  if (c.kind == "decomposition-test") return decomposition_cells(p, n, mc, c.inverted);
  if (c.kind == "srw-reference") {
    if (c.quantity == "max-local-time") return srw::estimate_max_local_time(n, mc);
    if (c.quantity == "range") return srw::range_size_srw(n, mc);
    if (c.quantity == "returns") return srw::returns_to_origin_srw(n, mc);
    if (c.quantity == "hitting") {
      const double x = static_cast<double>(n);
      const double outer = x * std::pow(std::log(x), 4);
      return srw::estimate_hitting_before_annulus({static_cast<std::int32_t>(n), 0}, std::max(outer, x), mc);
    }
    std::uint64_t t = n;
    if (c.t_rule == "lower") {
      const double l = std::log(static_cast<double>(n));
      t = static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) / (l * l * l)));
    }
    return srw::estimate_return_window_srw(t, n, mc);
  }
  throw ConfigError("config field 'kind': unknown experiment kind '" + c.kind + "'");
}

}  // namespace detail

/// Runs every grid point of a validated config over its replica range.
inline ExperimentReport run_experiment(const ExperimentConfig& c) {
  validate_config(c);
  ExperimentReport rep;
  rep.config = c;
  rep.digest = config_digest(c);
  const auto [begin, end] = c.effective_range();
  rep.replica_ranges = {{begin, end}};
  const auto env = share(c.environment);

  std::vector<std::string> labels{""};
  if (c.kind == "strategy") labels = c.strategies;
  if (c.kind == "returns" && c.srw_baseline) labels = {"walk", "srw"};
  if (c.kind == "srw-reference") labels = {c.quantity};

  const auto grid = c.n_grid.values();
  // Exact values first, so a cutoff violation stops the run before any
  // simulation.
  std::vector<std::string> exact(grid.size());
  if (c.kind == "return-window" && c.exact) {
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      try {
        exact[gi] = to_fraction_string(exact_window_probability(c.partition, c.environment, grid[gi], 2 * grid[gi]));
      } catch (const ResourceError& e) {
        throw ResourceError("grid point n = " + std::to_string(grid[gi]) + ": " + e.what());
      }
    }
  }
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (std::size_t li = 0; li < labels.size(); ++li) {
      MonteCarlo mc;
      mc.replicas = end - begin;
      mc.first_replica = begin;
      mc.seed = c.seed;
      mc.workers = c.workers;
      mc.stream = derive_seed(detail::kind_tag(c.kind), {gi, detail::kind_tag(labels[li])});
      const auto t0 = std::chrono::steady_clock::now();
      RowResult r;
      r.n = grid[gi];
      r.label = labels[li];
      r.exact = exact[gi];
      try {
        r.state = detail::run_point(c, mc, grid[gi], labels[li], env);
      } catch (const ResourceError& e) {
        throw ResourceError("grid point n = " + std::to_string(grid[gi]) + ": " + e.what());
      }
      r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rep.results.push_back(std::move(r));
    }
  }
  return rep;
}

// --- files and merging -------------------------------------------------------------

/// <kind>-<digest>, plus a .r<begin>-<end> suffix for partial runs so the
/// parts of one experiment can share a directory.
inline std::string output_stem(const ExperimentReport& r) {
  std::string stem = r.config.kind + "-" + r.digest;
  if (r.config.replica_range)
    stem += ".r" + std::to_string(r.config.replica_range->first) + "-" + std::to_string(r.config.replica_range->second);
  return stem;
}

inline std::pair<std::string, std::string> write_report(const ExperimentReport& r, const std::string& dir) {
  const std::string csv_path = dir + "/" + output_stem(r) + ".csv";
  const std::string json_path = dir + "/" + output_stem(r) + ".summary.json";
  std::ofstream(csv_path) << r.csv();
  std::ofstream(json_path) << r.summary().dump(2) << "\n";
  return {csv_path, json_path};
}

inline ExperimentReport report_from_summary(const json& j) {
  ExperimentReport r;
  json cfg = j.at("config");
  r.config = config_from_json(cfg);
  r.digest = j.at("digest");
  if (config_digest(r.config) != r.digest)
    throw ConfigError("summary: digest " + r.digest + " does not match its embedded config (" +
                      config_digest(r.config) + ")");
  for (const auto& e : j.at("replica_ranges"))
    r.replica_ranges.emplace_back(e.at(0).get<std::uint64_t>(), e.at(1).get<std::uint64_t>());
  for (const auto& row : j.at("rows")) {
    RowResult rr;
    rr.n = row.at("n");
    rr.label = row.at("label");
    rr.state = state_from_json(row.at("state"));
    rr.wall_time = row.at("wall_time");
    rr.exact = row.value("exact", "");
    r.results.push_back(std::move(rr));
  }
  return r;
}

/// Combines partial reports of one experiment over disjoint replica ranges.
/// The result equals a single run over the union of the ranges.
inline ExperimentReport merge_results(const std::vector<ExperimentReport>& parts) {
  if (parts.empty()) throw ConfigError("merge: no reports given");
  ExperimentReport out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.digest != out.digest)
      throw ConfigError("merge: config digest mismatch (" + out.digest + " vs " + p.digest + ")");
    if (p.results.size() != out.results.size()) throw ConfigError("merge: reports have different row counts");
    for (std::size_t k = 0; k < p.results.size(); ++k) {
      auto& dst = out.results[k];
      const auto& src = p.results[k];
      if (dst.n != src.n || dst.label != src.label) throw ConfigError("merge: row identities differ");
      merge_state(dst.state, src.state);
      dst.wall_time += src.wall_time;
    }
    out.replica_ranges.insert(out.replica_ranges.end(), p.replica_ranges.begin(), p.replica_ranges.end());
  }
  auto& ranges = out.replica_ranges;
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i)
    if (ranges[i].first < ranges[i - 1].second)
      throw ConfigError("merge: overlapping replica ranges [" + std::to_string(ranges[i - 1].first) + ", " +
                        std::to_string(ranges[i - 1].second) + ") and [" + std::to_string(ranges[i].first) +
                        ", " + std::to_string(ranges[i].second) + ")");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> coalesced;
  for (const auto& r : ranges) {
    if (!coalesced.empty() && coalesced.back().second == r.first)
      coalesced.back().second = r.second;
    else
      coalesced.push_back(r);
  }
  ranges = std::move(coalesced);
  out.config.replica_range.reset();
  if (!(ranges.size() == 1 && ranges[0].first == 0 && ranges[0].second == out.config.replicas))
    out.config.replica_range = ranges.size() == 1 ? std::optional(ranges[0]) : std::nullopt;
  return out;
}

}  // namespace mixwalk
