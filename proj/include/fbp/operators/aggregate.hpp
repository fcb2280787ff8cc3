#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>

#include "fbp/operators/common.hpp"

namespace fbp {

enum class AggregateKind { count, sum, average, max };

inline std::string_view to_string(AggregateKind k) {
  switch (k) {
    case AggregateKind::count: return "count";
    case AggregateKind::sum: return "sum";
    case AggregateKind::average: return "average";
    case AggregateKind::max: return "max";
  }
  return "?";
}

struct AggregateConfig {
  std::string output_name;
  std::int64_t window = 60;                 // tumbling range, seconds
  std::vector<std::size_t> group_attrs;
  std::optional<std::size_t> value_attr;    // not used by count
  std::string window_attr = "window";
  std::string result_attr;                  // defaults to the kind name
  FeedbackResponse response = FeedbackResponse::propagate;
  bool non_negative = false;                // lets sum act on lower-bound feedback like count
  std::uint64_t update_cost = 1;
  std::uint64_t result_cost = 1;
};

// Tumbling-window grouped aggregate. Output schema is
// (window start, group attributes..., result); partial state per
// (window, group) is released when embedded punctuation closes the window.
//
// Assumed feedback on the output, by the attributes it constrains:
//   window/group only   purge matching state, guard input, propagate via the
//                       window-to-timestamp rewrite
//   result only         output guard; count (and non-negative sum) with >= or >
//                       also purges, guards and propagates the groups already
//                       matching; max with >= or > closes matching windows and
//                       keeps closing any window whose partial max reaches it
//   both                output guard
template <AggregateKind Kind>
class WindowAggregateOp : public Operator {
 public:
  WindowAggregateOp(SchemaPtr input, AggregateConfig config) : Operator({input}), in_(std::move(input)), cfg_(std::move(config)) {
    if (cfg_.window <= 0) throw std::invalid_argument("window range must be positive");
    if (Kind != AggregateKind::count && !cfg_.value_attr) throw std::invalid_argument("aggregate needs a value attribute");
    if (cfg_.value_attr && !is_orderable((*in_)[*cfg_.value_attr].type))
      throw std::invalid_argument("aggregate value attribute must be numeric");
    if (cfg_.output_name.empty()) cfg_.output_name = std::string(to_string(Kind)) + "_" + in_->name();
    if (cfg_.result_attr.empty()) cfg_.result_attr = std::string(to_string(Kind));

    std::vector<Attribute> attrs{{cfg_.window_attr, AttrType::timestamp}};
    std::vector<AttributeOrigin> origins{AttributeOrigin::window({0, in_->timestamp_attr()}, cfg_.window)};
    for (auto g : cfg_.group_attrs) {
      attrs.push_back((*in_)[g]);
      origins.push_back(AttributeOrigin::copied({{0, g}}));
    }
    attrs.push_back({cfg_.result_attr, Kind == AggregateKind::count ? AttrType::integer : AttrType::real});
    origins.push_back(AttributeOrigin::computed_value());
    out_ = make_schema(cfg_.output_name, std::move(attrs));
    mapping_ = AttributeMapping(out_, {in_}, std::move(origins));
    result_idx_ = out_->size() - 1;
  }

  std::string_view kind() const override { return to_string(Kind); }
  SchemaPtr output_schema(std::size_t) const override { return out_; }
  bool feedback_aware() const override { return true; }
  const AttributeMapping& mapping() const { return mapping_; }

  void process(std::size_t, StreamItem item, OperatorContext& ctx) override {
    if (item.is_punctuation()) {
      if (auto b = progress_bound(item.punctuation().pattern)) close_through(last_closed_window(*b, cfg_.window), ctx);
      return;
    }
    const auto& t = item.tuple();
    Key key{window_of(t.timestamp(), cfg_.window), {}};
    if (closed_ && key.first <= *closed_) return;  // behind punctuation
    for (auto g : cfg_.group_attrs) key.second.push_back(t.values[g]);
    double v = 0;
    if constexpr (Kind != AggregateKind::count) {
      const auto& raw = t.values[*cfg_.value_attr];
      if (is_null(raw)) return;
      v = numeric(raw);
    }
    if (input_guards_.blocks(key_values(key))) {
      ++ctx.counters().guard_drops;
      return;
    }
    ctx.charge(cfg_.update_cost);
    auto& p = state_[key];
    ++p.count;
    p.sum += v;
    p.max = std::max(p.max, v);
    if constexpr (Kind == AggregateKind::max) {
      if (!early_close_.empty()) {
        auto values = result_values(key, p);
        for (const auto& f : early_close_) {
          if (matches_values(values, f)) {
            suppress(key, ctx);
            break;
          }
        }
      }
    }
  }

  void on_feedback(std::size_t, const FeedbackPunctuation& f, OperatorContext& ctx) override {
    if (f.intent != Intent::assumed || cfg_.response == FeedbackResponse::ignore) return;
    const auto& pat = f.pattern;
    bool on_result = !pat[result_idx_].is_wildcard();
    bool on_group = false;
    for (std::size_t i = 0; i < result_idx_; ++i) on_group = on_group || !pat[i].is_wildcard();

    output_guards_.add(pat);
    if (cfg_.response < FeedbackResponse::guard_input) return;

    if (!on_result) {
      std::size_t purged = 0;
      for (auto it = state_.begin(); it != state_.end();) {
        if (matches_values(key_values(it->first), pat)) {
          it = state_.erase(it);
          ++purged;
        } else {
          ++it;
        }
      }
      ctx.counters().state_purged += purged;
      input_guards_.add(pat);
      if (cfg_.response == FeedbackResponse::propagate) propagate(pat, ctx);
      return;
    }
    if (on_group) return;

    using CK = AttributeConstraint::Kind;
    auto op = pat[result_idx_].kind;
    if (op != CK::ge && op != CK::gt) return;
    constexpr bool monotone = Kind == AggregateKind::count || Kind == AggregateKind::max;
    if (!monotone && !(Kind == AggregateKind::sum && cfg_.non_negative)) return;

    std::vector<Key> matched;
    for (const auto& [key, p] : state_)
      if (matches_values(result_values(key, p), pat)) matched.push_back(key);
    for (const auto& key : matched) {
      suppress(key, ctx);
      if (Kind != AggregateKind::max && cfg_.response == FeedbackResponse::propagate) propagate(key_pattern(key), ctx);
    }
    if constexpr (Kind == AggregateKind::max) early_close_.push_back(pat);
  }

  void finish(OperatorContext& ctx) override { close_through(std::numeric_limits<std::int64_t>::max(), ctx); }

  std::size_t guard_count() const override { return input_guards_.size() + output_guards_.size(); }
  std::size_t open_entries() const { return state_.size(); }
  bool has_entry(std::int64_t window, const std::vector<Value>& group) const { return state_.contains({window, group}); }
  const GuardList& input_guards() const { return input_guards_; }
  const GuardList& output_guards() const { return output_guards_; }

 private:
  using Key = std::pair<std::int64_t, std::vector<Value>>;

  struct Partial {
    std::int64_t count = 0;
    double sum = 0;
    double max = -std::numeric_limits<double>::infinity();
  };

  static double numeric(const Value& v) {
    switch (v.index()) {
      case 1: return static_cast<double>(std::get<std::int64_t>(v));
      case 2: return std::get<double>(v);
      case 4: return static_cast<double>(std::get<Timestamp>(v).seconds);
    }
    throw std::invalid_argument("non-numeric aggregate value");
  }

  std::vector<Value> key_values(const Key& key) const {
    std::vector<Value> vs;
    vs.reserve(out_->size());
    vs.emplace_back(Timestamp{key.first * cfg_.window});
    for (const auto& g : key.second) vs.push_back(g);
    vs.emplace_back(Null{});
    return vs;
  }

  std::vector<Value> result_values(const Key& key, const Partial& p) const {
    auto vs = key_values(key);
    switch (Kind) {
      case AggregateKind::count: vs.back() = p.count; break;
      case AggregateKind::sum: vs.back() = p.sum; break;
      case AggregateKind::average: vs.back() = p.sum / static_cast<double>(p.count); break;
      case AggregateKind::max: vs.back() = p.max; break;
    }
    return vs;
  }

  PunctuationPattern key_pattern(const Key& key) const {
    auto vs = key_values(key);
    std::vector<AttributeConstraint> cs(out_->size());
    for (std::size_t i = 0; i < result_idx_; ++i)
      cs[i] = is_null(vs[i]) ? AttributeConstraint::wildcard() : AttributeConstraint::eq(vs[i]);
    return PunctuationPattern(out_, std::move(cs));
  }

  // Drops a (window, group) and keeps later tuples from recreating it.
  void suppress(const Key& key, OperatorContext& ctx) {
    if (state_.erase(key)) ++ctx.counters().state_purged;
    input_guards_.add(key_pattern(key));
  }

  void propagate(const PunctuationPattern& pat, OperatorContext& ctx) {
    auto derived = derive_input_patterns(pat, mapping_);
    if (derived[0]) ctx.send_feedback(0, FeedbackPunctuation::assumed(std::move(*derived[0])));
  }

  void close_through(std::int64_t last, OperatorContext& ctx) {
    if (closed_ && last <= *closed_) return;
    while (!state_.empty() && state_.begin()->first.first <= last) {
      auto node = state_.extract(state_.begin());
      auto values = result_values(node.key(), node.mapped());
      if (output_guards_.blocks(values)) {
        ++ctx.counters().guard_drops;
        continue;
      }
      ctx.charge(cfg_.result_cost);
      ctx.emit(Tuple(out_, std::move(values)));
    }
    closed_ = last;
    // No later window can start at or before the last second of the closed range.
    auto punct = progress_punctuation(
        out_, last == std::numeric_limits<std::int64_t>::max() ? kEndOfTime : (last + 1) * cfg_.window - 1);
    input_guards_.expire(punct);
    output_guards_.expire(punct);
    std::erase_if(early_close_, [&](const PunctuationPattern& p) { return subsumes(punct, p); });
    ctx.emit(EmbeddedPunctuation{std::move(punct)});
  }

  SchemaPtr in_;
  SchemaPtr out_;
  AggregateConfig cfg_;
  AttributeMapping mapping_;
  std::size_t result_idx_ = 0;
  std::map<Key, Partial> state_;
  std::optional<std::int64_t> closed_;
  GuardList input_guards_;
  GuardList output_guards_;
  std::vector<PunctuationPattern> early_close_;
};

using CountOp = WindowAggregateOp<AggregateKind::count>;
using SumOp = WindowAggregateOp<AggregateKind::sum>;
using AverageOp = WindowAggregateOp<AggregateKind::average>;
using MaxOp = WindowAggregateOp<AggregateKind::max>;

}  // namespace fbp
