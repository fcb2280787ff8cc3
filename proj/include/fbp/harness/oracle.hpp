#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fbp/io/plan_config.hpp"

namespace fbp {

struct OracleDiff {
  std::vector<Tuple> extra;    // in S but not in S_R (or more copies)
  std::vector<Tuple> missing;  // in S_R, matching no feedback, absent from S
  std::vector<Tuple> removed;  // in S_R, matched by feedback, absent from S (allowed)
};

struct OracleResult {
  bool pass = true;
  std::map<std::string, OracleDiff> sinks;

  std::string describe() const {
    std::ostringstream out;
    for (const auto& [sink, d] : sinks) {
      out << sink << ": " << d.removed.size() << " removed by feedback, " << d.extra.size() << " extra, "
          << d.missing.size() << " missing\n";
      for (const auto& t : d.extra) out << "  extra   " << format_tuple(t) << "\n";
      for (const auto& t : d.missing) out << "  missing " << format_tuple(t) << "\n";
    }
    return out.str();
  }
};

namespace detail {

inline std::map<std::vector<Value>, std::size_t> multiset_of(const std::vector<StreamItem>& items) {
  std::map<std::vector<Value>, std::size_t> m;
  for (const auto& i : items)
    if (i.is_tuple()) ++m[i.tuple().values];
  return m;
}

}  // namespace detail

// Checks S_R - subset(S_R, F) <= S <= S_R per sink, as multisets of full tuple
// values, where S_R comes from `reference` (feedback off) and S from `guarded`.
// `injected` lists, per sink, the feedback patterns that sink issues.
inline OracleResult compare_outputs(const RunReport& reference, const RunReport& guarded,
                                    const std::map<std::string, std::vector<PunctuationPattern>>& injected) {
  OracleResult res;
  for (const auto& [sink, ref_items] : reference.outputs) {
    auto git = guarded.outputs.find(sink);
    static const std::vector<StreamItem> none;
    const auto& got_items = git == guarded.outputs.end() ? none : git->second;
    auto ref = detail::multiset_of(ref_items);
    auto got = detail::multiset_of(got_items);
    const auto* fs = injected.contains(sink) ? &injected.at(sink) : nullptr;
    SchemaPtr schema;
    for (const auto& i : ref_items)
      if (i.is_tuple()) schema = i.tuple().schema;
    for (const auto& i : got_items)
      if (i.is_tuple()) schema = i.tuple().schema;

    OracleDiff d;
    for (const auto& [values, n] : got) {
      auto r = ref.contains(values) ? ref.at(values) : 0;
      for (auto k = r; k < n; ++k) d.extra.emplace_back(schema, values);
    }
    for (const auto& [values, n] : ref) {
      auto g = got.contains(values) ? got.at(values) : 0;
      if (g >= n) continue;
      bool covered = false;
      if (fs)
        for (const auto& f : *fs) covered = covered || matches_values(values, f);
      for (auto k = g; k < n; ++k) (covered ? d.removed : d.missing).emplace_back(schema, values);
    }
    res.pass = res.pass && d.extra.empty() && d.missing.empty();
    res.sinks[sink] = std::move(d);
  }
  return res;
}

inline void require_deterministic(const RunOptions& opts) {
  if (opts.scheduler != SchedulerKind::deterministic)
    throw std::invalid_argument("oracle check needs the deterministic scheduler");
  if (opts.cost_mode != CostMode::virtual_units) throw std::invalid_argument("oracle check needs virtual cost mode");
}

inline OracleResult oracle_check(const Plan& reference, const Plan& guarded,
                                 const std::map<std::string, std::vector<PunctuationPattern>>& injected,
                                 const RunOptions& opts) {
  require_deterministic(opts);
  auto r = run_plan(reference, opts);
  auto g = run_plan(guarded, opts);
  return compare_outputs(r, g, injected);
}

// `generator_seed` overrides the seeds written in the plan file.
inline OracleResult oracle_check(const PlanConfig& cfg, const RunOptions& opts,
                                 std::optional<std::uint64_t> generator_seed = std::nullopt) {
  require_deterministic(opts);
  PlanBuildOptions off{.feedback = false, .seed = generator_seed};
  PlanBuildOptions on{.feedback = true, .seed = generator_seed};
  auto reference = build_plan(cfg, off);
  auto guarded = build_plan(cfg, on);
  // Patterns are resolved against the sink's input schema, as build_plan does.
  std::map<std::string, std::vector<PunctuationPattern>> injected;
  auto r = run_plan(reference, opts);
  for (const auto& d : cfg.injections) {
    auto& sink = r.op<SinkOp>(d.sink);
    injected[d.sink].push_back(parse_pattern(d.pattern, sink.input_schemas().at(0)));
  }
  auto g = run_plan(guarded, opts);
  return compare_outputs(r, g, injected);
}

}  // namespace fbp
