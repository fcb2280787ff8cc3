#pragma once

#include <functional>
#include <string>

#include "helpers.hpp"

// Fixtures for the per-row operator characterization: small schemas, driver
// setups, and whole plans that pair a feedback-ignoring reference with a
// guarded run.
namespace fbp::testing {

inline SchemaPtr obs() { return make_schema("obs", {{"g", AttrType::integer}, {"ts", AttrType::timestamp}}); }

inline SchemaPtr reading() {
  return make_schema("reading", {{"seg", AttrType::integer}, {"ts", AttrType::timestamp}, {"val", AttrType::real}});
}

inline AggregateConfig agg(std::optional<std::size_t> value, FeedbackResponse r = FeedbackResponse::propagate) {
  AggregateConfig c;
  c.window = 60;
  c.group_attrs = {0};
  c.value_attr = value;
  c.response = r;
  return c;
}

inline FeedbackPunctuation assumed(const PunctuationPattern& p) { return FeedbackPunctuation::assumed(p); }

// g1 seen five times, g2 twice, all in window [0, 60).
inline OperatorDriver count_g1_5_g2_2() {
  auto s = obs();
  OperatorDriver d(std::make_unique<CountOp>(s, agg(std::nullopt)));
  for (int i = 0; i < 5; ++i) d.push(tup(s, {I(1), T(i)}));
  for (int i = 0; i < 2; ++i) d.push(tup(s, {I(2), T(10 + i)}));
  return d;
}

inline std::map<std::vector<Value>, int> results(const OperatorDriver& d) { return bag(d.output()); }


inline SchemaPtr left_a() {
  return make_schema("A", {{"a", AttrType::integer}, {"t", AttrType::timestamp}, {"id", AttrType::integer}});
}
inline SchemaPtr right_b() {
  return make_schema("B", {{"t", AttrType::timestamp}, {"id", AttrType::integer}, {"b", AttrType::integer}});
}

inline JoinConfig join_cfg(FeedbackResponse r = FeedbackResponse::propagate) {
  JoinConfig c;
  c.output_name = "AB";
  c.on = {{1, 0}, {2, 1}};
  c.window = 60;
  c.response = r;
  return c;
}

inline OperatorDriver join_driver() { return OperatorDriver(std::make_unique<JoinOp>(left_a(), right_b(), join_cfg())); }


struct RowCase {
  std::string name;
  std::function<Plan(FeedbackResponse, std::vector<SinkOp::Injection>)> build;
  SchemaPtr out;
  std::string feedback;
};

inline std::vector<StreamItem> obs_stream() {
  auto s = obs();
  std::vector<StreamItem> items;
  for (int w = 0; w < 6; ++w) {
    for (int g = 1; g <= 4; ++g) {
      int n = (w * 3 + g * 5) % 8 + 1;
      for (int i = 0; i < n; ++i) items.push_back(tup(s, {I(g), T(w * 60 + i * 7 % 60)}));
    }
    items.push_back(punct(pat(s, {C::wildcard(), C::le(T(w * 60 + 59))})));
  }
  return items;
}

inline std::vector<StreamItem> reading_stream() {
  auto s = reading();
  std::vector<StreamItem> items;
  for (int w = 0; w < 6; ++w) {
    for (int g = 1; g <= 4; ++g)
      for (int i = 0; i < 5; ++i)
        items.push_back(tup(s, {I(g), T(w * 60 + i * 11), F(static_cast<double>((w * 7 + g * 11 + i * 13) % 90))}));
    items.push_back(punct(pat(s, {C::wildcard(), C::le(T(w * 60 + 59)), C::wildcard()})));
  }
  return items;
}

template <typename Op>
inline RowCase aggregate_row(std::string name, SchemaPtr in, std::vector<StreamItem> items, std::optional<std::size_t> value,
                      std::string feedback) {
  auto out = Op(in, agg(value)).output_schema(0);
  auto build = [=](FeedbackResponse r, std::vector<SinkOp::Injection> inj) {
    Plan p;
    p.add("src", source_of(in, items))
        .add("agg", [=] { return std::make_unique<Op>(in, agg(value, r)); }, {{"src"}})
        .add("out", [=] { return std::make_unique<SinkOp>(out, inj); }, {{"agg"}});
    return p;
  };
  return {std::move(name), build, out, std::move(feedback)};
}

inline RowCase join_row(std::string name, std::string feedback) {
  auto A = left_a(), B = right_b();
  std::vector<StreamItem> la, rb;
  for (int w = 0; w < 5; ++w) {
    for (int k = 0; k < 12; ++k) {
      std::int64_t t = w * 60 + (k % 3);
      la.push_back(tup(A, {I(48 + k % 4), T(t), I(k % 5)}));
      rb.push_back(tup(B, {T(t), I(k % 6), I(49 + k % 3)}));
    }
    la.push_back(punct(pat(A, {C::wildcard(), C::le(T(w * 60 + 59)), C::wildcard()})));
    rb.push_back(punct(pat(B, {C::le(T(w * 60 + 59)), C::wildcard(), C::wildcard()})));
  }
  auto out = JoinOp(A, B, join_cfg()).output_schema(0);
  auto build = [=](FeedbackResponse r, std::vector<SinkOp::Injection> inj) {
    Plan p;
    p.add("a", source_of(A, la))
        .add("b", source_of(B, rb))
        .add("join", [=] { return std::make_unique<JoinOp>(A, B, join_cfg(r)); }, {{"a"}, {"b"}})
        .add("out", [=] { return std::make_unique<SinkOp>(out, inj); }, {{"join"}});
    return p;
  };
  return {std::move(name), build, out, std::move(feedback)};
}

inline std::vector<RowCase> row_cases() {
  return {
      aggregate_row<CountOp>("count group", obs(), obs_stream(), std::nullopt, "[*, =2, *]"),
      aggregate_row<CountOp>("count equal", obs(), obs_stream(), std::nullopt, "[*, *, =7]"),
      aggregate_row<CountOp>("count lower bound", obs(), obs_stream(), std::nullopt, "[*, *, >=4]"),
      aggregate_row<CountOp>("count upper bound", obs(), obs_stream(), std::nullopt, "[*, *, <=3]"),
      aggregate_row<CountOp>("count both", obs(), obs_stream(), std::nullopt, "[*, =1, >=4]"),
      aggregate_row<CountOp>("count window", obs(), obs_stream(), std::nullopt, "[<180, *, *]"),
      aggregate_row<MaxOp>("max lower bound", reading(), reading_stream(), 2, "[*, *, >=50.0]"),
      aggregate_row<MaxOp>("max upper bound", reading(), reading_stream(), 2, "[*, *, <=78.0]"),
      aggregate_row<AverageOp>("average result", reading(), reading_stream(), 2, "[*, *, >=40.0]"),
      aggregate_row<AverageOp>("average window", reading(), reading_stream(), 2, "[<300, *, *]"),
      aggregate_row<SumOp>("sum lower bound", reading(), reading_stream(), 2, "[*, *, >=150.0]"),
      join_row("join keys", "[*, *, =2, *]"),
      join_row("join left", "[=50, *, *, *]"),
      join_row("join right", "[*, *, *, =50]"),
      join_row("join left and right", "[=50, *, *, =51]"),
  };
}

}  // namespace fbp::testing
