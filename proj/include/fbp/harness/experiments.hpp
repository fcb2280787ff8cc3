#pragma once

#include <algorithm>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "fbp/harness/generator.hpp"
#include "fbp/operators/aggregate.hpp"
#include "fbp/operators/impute.hpp"
#include "fbp/operators/pace.hpp"
#include "fbp/operators/sink.hpp"

namespace fbp {

// ---- Experiment 1: imputation skew behind a pace operator ----

struct Exp1Config {
  std::uint64_t tuples = 5000;
  std::int64_t tolerance = 60;
  std::int64_t feedback_margin = 0;  // lagging branch skips everything below the watermark
  std::uint64_t impute_cost = 20;
  // Fine-grained time so one page spans a few seconds, well under D.
  SensorStreamConfig stream{.segments = 1, .detectors_per_segment = 5, .resolution_seconds = 1, .hours = 1,
                            .null_rate = 0, .alternating = true, .invalid_rate = 0, .seed = 1, .max_tuples = {}};
  std::int64_t punct_interval = 10;
  RunOptions run;
};

struct DivergencePoint {
  bool feedback = false;
  std::size_t seq = 0;
  std::int64_t ts = 0;
  std::int64_t watermark = 0;
  bool late = false;
  bool paired = false;  // another branch was still live, so the lag is a divergence between branches
};

struct Exp1Report {
  double timely_fraction_without = 1;
  double timely_fraction_with = 1;
  std::uint64_t imputed_without = 0, late_without = 0;
  std::uint64_t imputed_with = 0, late_with = 0;
  std::uint64_t purged_with = 0;  // dirty tuples skipped before imputation
  std::vector<DivergencePoint> divergence;

  double late_fraction_without() const { return 1 - timely_fraction_without; }
  double late_fraction_with() const { return 1 - timely_fraction_with; }
};

inline Plan exp1_plan(const Exp1Config& cfg, bool feedback) {
  auto stream = cfg.stream;
  stream.max_tuples = cfg.tuples;
  auto schema = sensor_schema();
  ImputeConfig ic;
  ic.cost = cfg.impute_cost;
  ic.key_attr = schema->index_of("detector_id");
  ic.response = feedback ? FeedbackResponse::guard_input : FeedbackResponse::ignore;
  PaceConfig pc;
  pc.tolerance = cfg.tolerance;
  pc.enforce = feedback;
  pc.margin = std::min(cfg.feedback_margin, cfg.tolerance);
  std::int64_t pi = cfg.punct_interval;
  Plan plan;
  plan.add("source", [=] { return std::make_unique<SourceOp>(schema, sensor_generator(stream), pi); })
      .add("split", [=] { return std::make_unique<SplitOp>(schema); }, {{"source"}})
      .add("impute", [=] { return std::make_unique<ImputeOp>(schema, ic); }, {{"split", 1}})
      .add("pace", [=] { return std::make_unique<PaceOp>(schema, 2, pc); }, {{"split", 0}, {"impute"}})
      .add("sink", [=] { return std::make_unique<SinkOp>(schema); }, {{"pace"}});
  return plan;
}

inline Exp1Report exp1(const Exp1Config& cfg) {
  if (cfg.tuples == 0) throw std::invalid_argument("exp1 needs at least one tuple");
  if (cfg.tolerance < 0) throw std::invalid_argument("tolerance must be non-negative");
  Exp1Report rep;
  for (bool feedback : {false, true}) {
    auto r = run_plan(exp1_plan(cfg, feedback), cfg.run);
    const auto& pace = r.op<PaceOp>("pace");
    std::uint64_t n = 0, late = 0;
    for (const auto& rec : pace.lateness_log()) {
      if (rec.input != 1) continue;
      rep.divergence.push_back({feedback, n, rec.ts, rec.watermark, rec.late, rec.open_inputs > 1});
      ++n;
      late += rec.late;
    }
    double timely = n ? 1.0 - static_cast<double>(late) / static_cast<double>(n) : 1.0;
    if (feedback) {
      rep.imputed_with = n, rep.late_with = late, rep.timely_fraction_with = timely;
      rep.purged_with = r.counters_of("impute").state_purged + r.counters_of("impute").guard_drops;
    } else {
      rep.imputed_without = n, rep.late_without = late, rep.timely_fraction_without = timely;
    }
  }
  return rep;
}

inline void write_divergence_csv(std::ostream& out, const Exp1Report& r) {
  out << "feedback,seq,ts,watermark,lag,late,paired\n";
  for (const auto& p : r.divergence)
    out << (p.feedback ? "on" : "off") << ',' << p.seq << ',' << p.ts << ',' << p.watermark << ','
        << p.watermark - p.ts << ',' << (p.late ? 1 : 0) << ',' << (p.paired ? 1 : 0) << '\n';
}

// ---- Experiment 2: zooming map over a windowed average ----

enum class SchemeId { F0, F1, F2, F3 };

inline std::string_view to_string(SchemeId s) {
  switch (s) {
    case SchemeId::F0: return "F0";
    case SchemeId::F1: return "F1";
    case SchemeId::F2: return "F2";
    case SchemeId::F3: return "F3";
  }
  return "?";
}

inline SchemeId parse_scheme(std::string_view s) {
  if (s == "F0") return SchemeId::F0;
  if (s == "F1") return SchemeId::F1;
  if (s == "F2") return SchemeId::F2;
  if (s == "F3") return SchemeId::F3;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

// Response of the average (and whether the filter acts) under each scheme.
inline FeedbackResponse average_response(SchemeId s) {
  switch (s) {
    case SchemeId::F0: return FeedbackResponse::ignore;
    case SchemeId::F1: return FeedbackResponse::guard_output;
    case SchemeId::F2: return FeedbackResponse::guard_input;
    case SchemeId::F3: return FeedbackResponse::propagate;
  }
  return FeedbackResponse::ignore;
}

// Which segments the map shows in each switch interval: a run of `width`
// consecutive segments (wrapping) starting at a seeded position.
struct ZoomSchedule {
  std::int64_t switch_interval_seconds = 120;
  std::vector<std::int64_t> visible_start;
  std::int64_t width = 3;
  std::int64_t segments = 9;
  std::uint64_t seed = 1;

  static ZoomSchedule make(std::int64_t interval, std::int64_t segments, std::int64_t width, std::int64_t horizon_seconds,
                           std::uint64_t seed) {
    if (interval <= 0) throw std::invalid_argument("zoom interval must be positive");
    if (width <= 0 || width > segments) throw std::invalid_argument("zoom width must lie in [1, segments]");
    ZoomSchedule z{interval, {}, width, segments, seed};
    std::mt19937_64 rng(seed);
    for (std::int64_t t = 0; t < horizon_seconds; t += interval)
      z.visible_start.push_back(static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(segments)));
    return z;
  }

  bool visible(std::size_t slot, std::int64_t segment) const {
    auto off = (segment - visible_start[slot] + segments) % segments;
    return off < width;
  }
};

struct Exp2Config {
  double scale = 1.0;  // fraction of the full 18-hour stream
  SensorStreamConfig stream{.segments = 9, .detectors_per_segment = 40, .resolution_seconds = 20, .hours = 18,
                            .null_rate = 0, .alternating = false, .invalid_rate = 0.03, .seed = 1, .max_tuples = {}};
  std::int64_t zoom_interval = 120;
  std::int64_t zoom_width = 3;
  std::int64_t window = 60;
  std::int64_t punct_interval = 60;
  // Feedback for a switch is issued once sink progress is within this many
  // seconds of it, i.e. the viewport change is known slightly ahead.
  std::int64_t lookahead = 600;
  std::uint64_t update_cost = 3;
  std::uint64_t result_cost = 1440;
  std::vector<SchemeId> schemes{SchemeId::F0, SchemeId::F1, SchemeId::F2, SchemeId::F3};
  bool all_visible = false;
  RunOptions run;
};

struct Exp2Row {
  SchemeId scheme;
  std::uint64_t work_units = 0;   // filter + average + sink
  double savings = 0;             // relative to F0 when F0 ran, else 0
  OperatorCounters filter, average, sink;
};

struct Exp2Report {
  std::vector<Exp2Row> rows;
  std::uint64_t tuples = 0;

  const Exp2Row& row(SchemeId s) const {
    for (const auto& r : rows)
      if (r.scheme == s) return r;
    throw std::out_of_range("scheme not run");
  }
};

inline Plan exp2_plan(const Exp2Config& cfg, SchemeId scheme) {
  auto stream = cfg.stream;
  stream.hours = cfg.stream.hours * cfg.scale;
  auto schema = sensor_schema();
  auto quality = PunctuationPattern::wildcard(schema).with("speed", AttributeConstraint::ge(0.0));
  auto filter_response = scheme == SchemeId::F3 ? FeedbackResponse::guard_input : FeedbackResponse::ignore;
  AggregateConfig ac;
  ac.output_name = "speed_map";
  ac.window = cfg.window;
  ac.group_attrs = {schema->index_of("segment")};
  ac.value_attr = schema->index_of("speed");
  ac.result_attr = "avg_speed";
  ac.response = average_response(scheme);
  ac.update_cost = cfg.update_cost;
  ac.result_cost = cfg.result_cost;
  auto out = AverageOp(schema, ac).output_schema(0);

  FeedbackInjector injector;
  if (scheme != SchemeId::F0 && !cfg.all_visible) {
    auto horizon = static_cast<std::int64_t>(stream.ticks()) * stream.resolution_seconds;
    auto zoom = ZoomSchedule::make(cfg.zoom_interval, stream.segments, cfg.zoom_width, horizon, stream.seed);
    auto next = std::make_shared<std::size_t>(0);
    auto lookahead = cfg.lookahead;
    injector = [zoom, next, lookahead, out](const SinkProgress& p) {
      std::vector<FeedbackPunctuation> fs;
      while (*next < zoom.visible_start.size()) {
        auto t = static_cast<std::int64_t>(*next) * zoom.switch_interval_seconds;
        if (t - lookahead > p.bound.value_or(-1)) break;
        for (std::int64_t seg = 0; seg < zoom.segments; ++seg) {
          if (zoom.visible(*next, seg)) continue;
          auto f = PunctuationPattern::wildcard(out)
                       .with("window", AttributeConstraint::interval(Timestamp{t}, Timestamp{t + zoom.switch_interval_seconds}))
                       .with("segment", AttributeConstraint::eq(seg));
          fs.push_back(FeedbackPunctuation::assumed(std::move(f)));
        }
        ++*next;
      }
      return fs;
    };
  }

  auto pi = cfg.punct_interval;
  Plan plan;
  plan.add("source", [=] { return std::make_unique<SourceOp>(schema, sensor_generator(stream), pi); })
      .add("filter", [=] { return std::make_unique<SelectOp>(schema, quality, filter_response); }, {{"source"}})
      .add("average", [=] { return std::make_unique<AverageOp>(schema, ac); }, {{"filter"}})
      .add("sink", [=] { return std::make_unique<SinkOp>(out, std::vector<SinkOp::Injection>{}, injector); }, {{"average"}});
  return plan;
}

inline Exp2Report exp2(const Exp2Config& cfg) {
  if (cfg.scale <= 0) throw std::invalid_argument("scale must be positive");
  if (cfg.schemes.empty()) throw std::invalid_argument("no schemes selected");
  Exp2Report rep;
  for (auto s : cfg.schemes) {
    auto r = run_plan(exp2_plan(cfg, s), cfg.run);
    Exp2Row row{s, 0, 0, r.counters_of("filter"), r.counters_of("average"), r.counters_of("sink")};
    row.work_units = row.filter.work_units + row.average.work_units + row.sink.work_units;
    rep.tuples = r.counters_of("source").tuples_out;
    rep.rows.push_back(row);
  }
  auto f0 = std::find_if(rep.rows.begin(), rep.rows.end(), [](const Exp2Row& r) { return r.scheme == SchemeId::F0; });
  if (f0 != rep.rows.end() && f0->work_units > 0)
    for (auto& r : rep.rows)
      r.savings = 1.0 - static_cast<double>(r.work_units) / static_cast<double>(f0->work_units);
  return rep;
}

inline void write_exp2_csv(std::ostream& out, const Exp2Report& r) {
  out << "scheme,work_units,savings,filter_work,average_work,filter_guard_drops,average_guard_drops,"
         "average_state_purged,feedback_received,results\n";
  for (const auto& row : r.rows)
    out << to_string(row.scheme) << ',' << row.work_units << ',' << row.savings << ',' << row.filter.work_units << ','
        << row.average.work_units << ',' << row.filter.guard_drops << ',' << row.average.guard_drops << ','
        << row.average.state_purged << ',' << row.average.feedback_received + row.filter.feedback_received << ','
        << row.sink.tuples_in << '\n';
}

}  // namespace fbp
