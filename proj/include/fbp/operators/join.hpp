#pragma once

#include <array>
#include <map>
#include <string>

#include "fbp/operators/select.hpp"

namespace fbp {

struct JoinConfig {
  std::string output_name;
  std::vector<std::pair<std::size_t, std::size_t>> on;  // (left attr, right attr)
  std::int64_t window = 60;
  FeedbackResponse response = FeedbackResponse::propagate;
};

// Symmetric hash equi-join over tumbling windows. Output schema is (L, J, R):
// left-only attributes, join attributes (named as on the left), right-only
// attributes. Tuples join when their windows and join keys agree.
//
// Assumed feedback is rewritten onto each input through the join mapping. Each
// input that receives a pattern has matching buffered tuples purged, gets an
// input guard, and the pattern is propagated to it; when no input qualifies
// (constraints on both L and R) only the output guard remains.
class JoinOp : public Operator {
 public:
  JoinOp(SchemaPtr left, SchemaPtr right, JoinConfig config)
      : Operator({left, right}), cfg_(std::move(config)), progress_(2) {
    if (cfg_.window <= 0) throw std::invalid_argument("join window must be positive");
    if (cfg_.on.empty()) throw std::invalid_argument("join needs at least one join attribute pair");
    if (cfg_.output_name.empty()) cfg_.output_name = left->name() + "_" + right->name();

    std::vector<bool> left_joined(left->size()), right_joined(right->size());
    for (auto [l, r] : cfg_.on) {
      if (l >= left->size() || r >= right->size()) throw std::invalid_argument("join attribute out of range");
      if ((*left)[l].type != (*right)[r].type) throw std::invalid_argument("join attributes differ in type");
      left_joined[l] = right_joined[r] = true;
    }

    std::vector<Attribute> attrs;
    std::vector<AttributeOrigin> origins;
    auto has_name = [&](const std::string& n) {
      for (const auto& a : attrs)
        if (a.name == n) return true;
      return false;
    };
    for (std::size_t i = 0; i < left->size(); ++i) {
      if (left_joined[i]) continue;
      attrs.push_back((*left)[i]);
      origins.push_back(AttributeOrigin::copied({{0, i}}));
      layout_.push_back({0, i});
    }
    for (auto [l, r] : cfg_.on) {
      attrs.push_back((*left)[l]);
      origins.push_back(AttributeOrigin::copied({{0, l}, {1, r}}));
      layout_.push_back({0, l});
    }
    for (std::size_t i = 0; i < right->size(); ++i) {
      if (right_joined[i]) continue;
      auto a = (*right)[i];
      if (has_name(a.name)) a.name = right->name() + "_" + a.name;
      attrs.push_back(a);
      origins.push_back(AttributeOrigin::copied({{1, i}}));
      layout_.push_back({1, i});
    }
    out_ = make_schema(cfg_.output_name, std::move(attrs));
    mapping_ = AttributeMapping(out_, {left, right}, std::move(origins));
  }

  std::string_view kind() const override { return "join"; }
  SchemaPtr output_schema(std::size_t) const override { return out_; }
  bool feedback_aware() const override { return true; }
  const AttributeMapping& mapping() const { return mapping_; }

  void process(std::size_t side, StreamItem item, OperatorContext& ctx) override {
    if (item.is_punctuation()) {
      const auto& pat = item.punctuation().pattern;
      guards_[side].expire(pat);
      if (auto b = progress_bound(pat)) {
        if (auto merged = progress_.update(side, *b)) close_through(last_closed_window(*merged, cfg_.window), ctx);
      }
      return;
    }
    auto& t = item.tuple();
    if (guards_[side].blocks(t)) {
      ++ctx.counters().guard_drops;
      return;
    }
    ctx.charge(1);
    Key key{window_of(t.timestamp(), cfg_.window), join_key(side, t)};
    const auto other = 1 - side;
    if (auto it = tables_[other].find(key); it != tables_[other].end()) {
      for (const auto& match : it->second) {
        const Tuple& l = side == 0 ? t : match;
        const Tuple& r = side == 0 ? match : t;
        std::vector<Value> values;
        values.reserve(layout_.size());
        for (auto ref : layout_) values.push_back(ref.input == 0 ? l.values[ref.attr] : r.values[ref.attr]);
        if (output_guards_.blocks(values)) {
          ++ctx.counters().guard_drops;
          continue;
        }
        ctx.charge(1);
        ctx.emit(Tuple(out_, std::move(values)));
      }
    }
    tables_[side][key].push_back(std::move(t));
  }

  void on_feedback(std::size_t, const FeedbackPunctuation& f, OperatorContext& ctx) override {
    if (f.intent != Intent::assumed || cfg_.response == FeedbackResponse::ignore) return;
    output_guards_.add(f.pattern);
    if (cfg_.response < FeedbackResponse::guard_input) return;
    auto derived = derive_input_patterns(f.pattern, mapping_);
    for (std::size_t side = 0; side < 2; ++side) {
      if (!derived[side]) continue;
      std::size_t purged = 0;
      for (auto it = tables_[side].begin(); it != tables_[side].end();) {
        purged += std::erase_if(it->second, [&](const Tuple& t) { return matches_values(t.values, *derived[side]); });
        it = it->second.empty() ? tables_[side].erase(it) : std::next(it);
      }
      ctx.counters().state_purged += purged;
      guards_[side].add(*derived[side]);
      if (cfg_.response == FeedbackResponse::propagate)
        ctx.send_feedback(side, FeedbackPunctuation::assumed(std::move(*derived[side])));
    }
  }

  void finish(OperatorContext& ctx) override { close_through(std::numeric_limits<std::int64_t>::max(), ctx); }

  std::size_t guard_count() const override { return guards_[0].size() + guards_[1].size() + output_guards_.size(); }
  std::size_t buffered(std::size_t side) const {
    std::size_t n = 0;
    for (const auto& [k, v] : tables_[side]) n += v.size();
    return n;
  }
  const GuardList& input_guards(std::size_t side) const { return guards_[side]; }
  const GuardList& output_guards() const { return output_guards_; }

 private:
  using Key = std::pair<std::int64_t, std::vector<Value>>;

  std::vector<Value> join_key(std::size_t side, const Tuple& t) const {
    std::vector<Value> k;
    k.reserve(cfg_.on.size());
    for (auto [l, r] : cfg_.on) k.push_back(t.values[side == 0 ? l : r]);
    return k;
  }

  void close_through(std::int64_t last, OperatorContext& ctx) {
    if (closed_ && last <= *closed_) return;
    for (auto& table : tables_)
      while (!table.empty() && table.begin()->first.first <= last) table.erase(table.begin());
    closed_ = last;
    auto bound = last == std::numeric_limits<std::int64_t>::max() ? kEndOfTime : (last + 1) * cfg_.window - 1;
    auto punct = progress_punctuation(out_, bound);
    output_guards_.expire(punct);
    ctx.emit(EmbeddedPunctuation{std::move(punct)});
  }

  JoinConfig cfg_;
  SchemaPtr out_;
  AttributeMapping mapping_;
  std::vector<InputRef> layout_;
  std::array<std::map<Key, std::vector<Tuple>>, 2> tables_;
  std::array<GuardList, 2> guards_;
  GuardList output_guards_;
  ProgressMerge progress_;
  std::optional<std::int64_t> closed_;
};

}  // namespace fbp
