#pragma once

#include <chrono>
#include <deque>
#include <map>
#include <thread>

#include "fbp/operators/common.hpp"

namespace fbp {

struct ImputeConfig {
  std::uint64_t cost = 20;                // work units (virtual) or milliseconds (wallclock) per imputed tuple
  std::optional<std::size_t> key_attr;    // estimates are kept per value of this attribute
  std::vector<Value> defaults;            // per attribute; used when no earlier reading exists
  FeedbackResponse response = FeedbackResponse::guard_input;
};

// Replaces nulls with the last non-null reading for the same key (or a
// configured default). Arrivals queue up and are imputed one per turn at the
// configured cost; assumed feedback purges queued tuples and guards the input.
class ImputeOp : public Operator {
 public:
  ImputeOp(SchemaPtr schema, ImputeConfig config) : Operator({schema}), schema_(std::move(schema)), cfg_(std::move(config)) {
    if (cfg_.defaults.empty()) {
      for (const auto& a : schema_->attributes()) {
        switch (a.type) {
          case AttrType::integer: cfg_.defaults.emplace_back(std::int64_t{0}); break;
          case AttrType::real: cfg_.defaults.emplace_back(0.0); break;
          case AttrType::text: cfg_.defaults.emplace_back(std::string{}); break;
          case AttrType::timestamp: cfg_.defaults.emplace_back(Timestamp{0}); break;
        }
      }
    }
    if (cfg_.defaults.size() != schema_->size()) throw std::invalid_argument("impute needs one default per attribute");
    if (cfg_.response == FeedbackResponse::propagate) cfg_.response = FeedbackResponse::guard_input;
  }

  std::string_view kind() const override { return "impute"; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }
  bool feedback_aware() const override { return true; }

  void process(std::size_t, StreamItem item, OperatorContext& ctx) override {
    if (item.is_punctuation()) {
      guards_.expire(item.punctuation().pattern);
      pending_.push_back({std::move(item), false});
      return;
    }
    auto& t = item.tuple();
    // History sees every arrival so that dropping one never changes another's estimate.
    auto key = cfg_.key_attr ? t.values[*cfg_.key_attr] : Value{};
    auto& last = history_[key];
    if (last.empty()) last = cfg_.defaults;
    bool dirty = false;
    std::vector<Value> estimate = t.values;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
      if (is_null(estimate[i])) {
        estimate[i] = last[i];
        dirty = true;
      } else {
        last[i] = estimate[i];
      }
    }
    if (guards_.blocks(t)) {
      ++ctx.counters().guard_drops;
      return;
    }
    t.values = std::move(estimate);
    pending_.push_back({std::move(item), dirty});
  }

  bool has_pending_work() const override { return !pending_.empty(); }

  // Releases queued items up to and including the next imputed tuple.
  void pending_work(OperatorContext& ctx) override {
    while (!pending_.empty()) {
      auto [item, dirty] = std::move(pending_.front());
      pending_.pop_front();
      if (item.is_tuple() && guards_.blocks(item.tuple())) {
        ++ctx.counters().guard_drops;
        continue;
      }
      if (dirty) {
        ctx.charge(cfg_.cost);
        if (ctx.cost_mode() == CostMode::wallclock)
          std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.cost));
        ++imputed_;
      } else if (item.is_tuple()) {
        ctx.charge(1);
      }
      ctx.emit(std::move(item));
      if (dirty) break;
    }
  }

  void on_feedback(std::size_t, const FeedbackPunctuation& f, OperatorContext& ctx) override {
    if (f.intent != Intent::assumed || cfg_.response == FeedbackResponse::ignore) return;
    guards_.add(f.pattern);
    if (cfg_.response < FeedbackResponse::guard_input) return;
    auto before = pending_.size();
    std::erase_if(pending_, [&](const Pending& p) { return p.item.is_tuple() && matches(p.item.tuple(), f.pattern); });
    ctx.counters().state_purged += before - pending_.size();
  }

  std::size_t guard_count() const override { return guards_.size(); }
  std::size_t pending() const { return pending_.size(); }
  std::uint64_t imputed() const { return imputed_; }

 private:
  struct Pending {
    StreamItem item;
    bool dirty;
  };

  SchemaPtr schema_;
  ImputeConfig cfg_;
  GuardList guards_;
  std::deque<Pending> pending_;
  std::map<Value, std::vector<Value>> history_;
  std::uint64_t imputed_ = 0;
};

}  // namespace fbp
