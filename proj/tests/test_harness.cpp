#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace fbp;
using namespace fbp::testing;

namespace {

std::vector<Tuple> generate(const SensorStreamConfig& cfg) {
  auto gen = sensor_generator(cfg);
  std::vector<Tuple> out;
  while (auto i = gen()) out.push_back(i->tuple());
  return out;
}

SensorStreamConfig small_stream() {
  SensorStreamConfig c;
  c.segments = 3;
  c.detectors_per_segment = 4;
  c.hours = 0.5;
  return c;
}

Exp2Config small_exp2(double scale = 0.02) {
  Exp2Config c;
  c.scale = scale;
  return c;
}

}  // namespace

// ---- generator ----

TEST(SensorGenerator, SameSeedSameStream) {
  auto a = generate(small_stream());
  auto b = generate(small_stream());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
  auto other = small_stream();
  other.seed = 2;
  auto c = generate(other);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i].values != c[i].values;
  EXPECT_GT(differ, a.size() / 2);
}

TEST(SensorGenerator, ShapeFollowsConfig) {
  auto cfg = small_stream();
  auto ts = generate(cfg);
  ASSERT_EQ(ts.size(), cfg.tuple_count());
  EXPECT_EQ(cfg.tuple_count(), 90u * 12u);  // 1800 s / 20 s, 3 x 4 detectors
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto det = std::get<std::int64_t>(ts[i].values[0]);
    auto seg = std::get<std::int64_t>(ts[i].values[1]);
    EXPECT_EQ(det, static_cast<std::int64_t>(i % 12));
    EXPECT_EQ(seg, det / 4);
    EXPECT_EQ(ts[i].timestamp(), static_cast<std::int64_t>(i / 12) * 20);
  }
}

TEST(SensorGenerator, AlternatingNullsAndInvalidRate) {
  auto cfg = small_stream();
  cfg.alternating = true;
  cfg.invalid_rate = 0;
  auto ts = generate(cfg);
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(is_null(ts[i].values[3]), i % 2 == 1) << i;

  SensorStreamConfig full;
  full.hours = 2;  // 360 x 360 = 129600 readings
  std::size_t invalid = 0;
  auto all = generate(full);
  for (const auto& t : all) invalid += t.values[3] == Value{-1.0};
  double rate = static_cast<double>(invalid) / static_cast<double>(all.size());
  // Binomial with p = 0.03: four standard deviations is about 0.002.
  EXPECT_NEAR(rate, 0.03, 0.002);
}

TEST(SensorGenerator, MaxTuplesCapsAndValidateRejects) {
  auto cfg = small_stream();
  cfg.max_tuples = 7;
  EXPECT_EQ(generate(cfg).size(), 7u);
  cfg.hours = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_stream();
  cfg.null_rate = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

// ---- experiment 1 ----

TEST(Exp1, FreeImputationIsNeverLate) {
  Exp1Config cfg;
  cfg.tuples = 2000;
  cfg.impute_cost = 0;
  auto r = exp1(cfg);
  EXPECT_DOUBLE_EQ(r.timely_fraction_without, 1.0);
  EXPECT_DOUBLE_EQ(r.timely_fraction_with, 1.0);
}

TEST(Exp1, FeedbackCutsImputationWorkAndLateness) {
  Exp1Config cfg;
  auto r = exp1(cfg);
  EXPECT_EQ(r.imputed_without, cfg.tuples / 2);
  EXPECT_LT(r.imputed_with, r.imputed_without);
  EXPECT_GT(r.purged_with, 0u);
  EXPECT_LT(r.late_fraction_with(), r.late_fraction_without());
}

TEST(Exp1, DivergenceGrowsWithoutFeedback) {
  Exp1Config cfg;
  auto r = exp1(cfg);
  std::vector<std::int64_t> lag;
  for (const auto& p : r.divergence)
    if (!p.feedback && p.paired) lag.push_back(p.watermark - p.ts);
  ASSERT_GT(lag.size(), 100u);
  // Compare means of consecutive tenths, skipping the first as warm-up.
  auto tenth = lag.size() / 10;
  double prev = -1;
  for (std::size_t k = 1; k < 10; ++k) {
    double sum = 0;
    for (std::size_t i = k * tenth; i < (k + 1) * tenth; ++i) sum += static_cast<double>(lag[i]);
    double mean = sum / static_cast<double>(tenth);
    EXPECT_GE(mean, prev) << "tenth " << k;
    prev = mean;
  }
  EXPECT_GT(prev, 3.0 * static_cast<double>(cfg.tolerance));
}

TEST(Exp1, DivergenceStaysNearToleranceWithFeedback) {
  Exp1Config cfg;
  auto r = exp1(cfg);
  std::size_t paired = 0, within = 0;
  for (const auto& p : r.divergence) {
    if (!p.feedback || !p.paired) continue;
    ++paired;
    within += p.watermark - p.ts <= 2 * cfg.tolerance;
  }
  ASSERT_GT(paired, 0u);
  EXPECT_GT(static_cast<double>(within) / static_cast<double>(paired), 0.9);
}

TEST(Exp1, DivergenceCsvHasOneRowPerPoint) {
  Exp1Config cfg;
  cfg.tuples = 400;
  auto r = exp1(cfg);
  std::ostringstream out;
  write_divergence_csv(out, r);
  auto text = out.str();
  EXPECT_TRUE(text.starts_with("feedback,seq,ts,watermark,lag,late,paired\n"));
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.divergence.size() + 1);
}

// ---- experiment 2 ----

TEST(Exp2, SchemesRoundTripByName) {
  for (auto s : {SchemeId::F0, SchemeId::F1, SchemeId::F2, SchemeId::F3}) EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_THROW(parse_scheme("F9"), std::invalid_argument);
}

TEST(Exp2, ZoomShowsExactlyWidthSegments) {
  auto z = ZoomSchedule::make(120, 9, 3, 3600, 4);
  ASSERT_EQ(z.visible_start.size(), 30u);
  for (std::size_t slot = 0; slot < z.visible_start.size(); ++slot) {
    int shown = 0;
    for (std::int64_t seg = 0; seg < 9; ++seg) shown += z.visible(slot, seg);
    EXPECT_EQ(shown, 3);
  }
  EXPECT_THROW(ZoomSchedule::make(0, 9, 3, 3600, 1), std::invalid_argument);
  EXPECT_THROW(ZoomSchedule::make(120, 9, 10, 3600, 1), std::invalid_argument);
}

TEST(Exp2, NothingHiddenMeansNoSavings) {
  auto cfg = small_exp2();
  cfg.all_visible = true;
  auto r = exp2(cfg);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.work_units, r.row(SchemeId::F0).work_units) << to_string(row.scheme);
    EXPECT_EQ(row.sink.tuples_in, r.row(SchemeId::F0).sink.tuples_in);
  }
}

TEST(Exp2, EachSchemeSavesMoreThanTheLast) {
  auto r = exp2(small_exp2());
  EXPECT_GT(r.row(SchemeId::F0).work_units, r.row(SchemeId::F1).work_units);
  EXPECT_GT(r.row(SchemeId::F1).work_units, r.row(SchemeId::F2).work_units);
  EXPECT_GT(r.row(SchemeId::F2).work_units, r.row(SchemeId::F3).work_units);
  EXPECT_EQ(r.row(SchemeId::F0).savings, 0.0);
  // Only F3 lets the filter act.
  EXPECT_EQ(r.row(SchemeId::F2).filter.guard_drops, 0u);
  EXPECT_GT(r.row(SchemeId::F3).filter.guard_drops, 0u);
}

TEST(Exp2, ResultsDropOnlyHiddenCells) {
  auto cfg = small_exp2();
  auto f0 = run_plan(exp2_plan(cfg, SchemeId::F0), cfg.run);
  auto stream = cfg.stream;
  stream.hours *= cfg.scale;
  auto zoom = ZoomSchedule::make(cfg.zoom_interval, stream.segments, cfg.zoom_width,
                                 static_cast<std::int64_t>(stream.ticks()) * stream.resolution_seconds, stream.seed);
  auto ref = bag(f0.outputs.at("sink"));
  for (auto s : {SchemeId::F1, SchemeId::F2, SchemeId::F3}) {
    SCOPED_TRACE(std::string(to_string(s)));
    auto got = bag(run_plan(exp2_plan(cfg, s), cfg.run).outputs.at("sink"));
    std::size_t hidden = 0, visible = 0;
    for (const auto& [values, n] : got) EXPECT_LE(n, ref.contains(values) ? ref.at(values) : 0);
    for (const auto& [values, n] : ref) {
      auto w = std::get<Timestamp>(values[0]).seconds;
      auto seg = std::get<std::int64_t>(values[1]);
      bool shown = zoom.visible(static_cast<std::size_t>(w / cfg.zoom_interval), seg);
      auto have = got.contains(values) ? got.at(values) : 0;
      if (shown) {
        EXPECT_EQ(have, n) << "visible cell lost at " << w << " segment " << seg;
        ++visible;
      } else {
        hidden += have == 0;
      }
    }
    EXPECT_GT(visible, 0u);
    EXPECT_GT(hidden, 0u);
  }
}

// ---- oracle ----

namespace {

// Acts on feedback wrongly: drops everything afterwards, or adds a tuple.
class Overeager : public Operator {
 public:
  enum class Fault { drop_all, invent };
  Overeager(SchemaPtr s, Fault f) : Operator({s}), schema_(std::move(s)), fault_(f) {}
  std::string_view kind() const override { return "overeager"; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }
  bool feedback_aware() const override { return true; }
  void process(std::size_t, StreamItem item, OperatorContext& ctx) override {
    if (triggered_ && fault_ == Fault::drop_all && item.is_tuple()) return;
    ctx.emit(std::move(item));
  }
  void on_feedback(std::size_t, const FeedbackPunctuation&, OperatorContext& ctx) override {
    triggered_ = true;
    if (fault_ == Fault::invent) ctx.emit(Tuple(schema_, {I(999), T(0)}));
  }

 private:
  SchemaPtr schema_;
  Fault fault_;
  bool triggered_ = false;
};

Plan faulty_plan(std::optional<Overeager::Fault> fault, const PunctuationPattern& f) {
  auto s = make_schema("e", {{"k", AttrType::integer}, {"ts", AttrType::timestamp}});
  std::vector<StreamItem> items;
  for (int i = 0; i < 40; ++i) items.push_back(tup(s, {I(i % 4), T(i)}));
  Plan p;
  p.add("src", source_of(s, items));
  if (fault)
    p.add("op", [s, fault] { return std::make_unique<Overeager>(s, *fault); }, {{"src"}});
  else
    p.add("op", [s] { return std::make_unique<SelectOp>(s, PunctuationPattern::wildcard(s), FeedbackResponse::ignore); },
          {{"src"}});
  std::vector<SinkOp::Injection> inj{{0, FeedbackPunctuation::assumed(f)}};
  p.add("out", [s, inj] { return std::make_unique<SinkOp>(s, inj); }, {{"op"}});
  return p;
}

}  // namespace

TEST(Oracle, CatchesDroppedTuplesWithWitness) {
  auto s = make_schema("e", {{"k", AttrType::integer}, {"ts", AttrType::timestamp}});
  auto f = pat(s, "[=1, *]");
  auto res = oracle_check(faulty_plan({}, f), faulty_plan(Overeager::Fault::drop_all, f), {{"out", {f}}}, {});
  EXPECT_FALSE(res.pass);
  const auto& d = res.sinks.at("out");
  ASSERT_FALSE(d.missing.empty());
  for (const auto& t : d.missing) EXPECT_NE(t.values[0], I(1));
  EXPECT_NE(res.describe().find("missing"), std::string::npos);
}

TEST(Oracle, CatchesInventedTuplesWithWitness) {
  auto s = make_schema("e", {{"k", AttrType::integer}, {"ts", AttrType::timestamp}});
  auto f = pat(s, "[=1, *]");
  auto res = oracle_check(faulty_plan({}, f), faulty_plan(Overeager::Fault::invent, f), {{"out", {f}}}, {});
  EXPECT_FALSE(res.pass);
  ASSERT_EQ(res.sinks.at("out").extra.size(), 1u);
  EXPECT_EQ(res.sinks.at("out").extra[0].values, (std::vector<Value>{I(999), T(0)}));
}

TEST(Oracle, IdenticalRunsPass) {
  auto s = make_schema("e", {{"k", AttrType::integer}, {"ts", AttrType::timestamp}});
  auto f = pat(s, "[=1, *]");
  auto res = oracle_check(faulty_plan({}, f), faulty_plan({}, f), {{"out", {f}}}, {});
  EXPECT_TRUE(res.pass) << res.describe();
  EXPECT_TRUE(res.sinks.at("out").removed.empty());
}

TEST(Oracle, RefusesNondeterministicRuns) {
  auto s = make_schema("e", {{"k", AttrType::integer}, {"ts", AttrType::timestamp}});
  auto f = pat(s, "[=1, *]");
  RunOptions concurrent;
  concurrent.scheduler = SchedulerKind::concurrent;
  EXPECT_THROW(oracle_check(faulty_plan({}, f), faulty_plan({}, f), {}, concurrent), std::invalid_argument);
  RunOptions wall;
  wall.cost_mode = CostMode::wallclock;
  EXPECT_THROW(oracle_check(faulty_plan({}, f), faulty_plan({}, f), {}, wall), std::invalid_argument);
}
