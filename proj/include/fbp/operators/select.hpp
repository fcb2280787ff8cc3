#pragma once

#include <optional>

#include "fbp/operators/common.hpp"

namespace fbp {

// Stateless filter. Assumed feedback is conjoined, negated, with the
// predicate and forwarded unchanged to the single input.
class SelectOp : public Operator {
 public:
  SelectOp(SchemaPtr schema, std::optional<PunctuationPattern> predicate = std::nullopt,
           FeedbackResponse response = FeedbackResponse::propagate)
      : Operator({schema}), schema_(std::move(schema)), predicate_(std::move(predicate)), response_(response) {
    if (predicate_) require_same_schema(predicate_->schema(), schema_, "select predicate");
  }

  std::string_view kind() const override { return "select"; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }
  bool feedback_aware() const override { return true; }

  void process(std::size_t, StreamItem item, OperatorContext& ctx) override {
    if (item.is_punctuation()) {
      guards_.expire(item.punctuation().pattern);
      ctx.emit(std::move(item));
      return;
    }
    ctx.charge(1);
    const auto& t = item.tuple();
    if (guards_.blocks(t)) {
      ++ctx.counters().guard_drops;
      return;
    }
    if (predicate_ && !matches_values(t.values, *predicate_)) return;
    ctx.charge(1);
    ctx.emit(std::move(item));
  }

  void on_feedback(std::size_t, const FeedbackPunctuation& f, OperatorContext& ctx) override {
    if (f.intent != Intent::assumed || response_ == FeedbackResponse::ignore) return;
    guards_.add(f.pattern);
    if (response_ == FeedbackResponse::propagate) ctx.send_feedback(0, f);
  }

  std::size_t guard_count() const override { return guards_.size(); }
  const GuardList& guards() const { return guards_; }

 private:
  SchemaPtr schema_;
  std::optional<PunctuationPattern> predicate_;
  FeedbackResponse response_;
  GuardList guards_;
};

// Routes tuples with any null to output 1 (dirty), the rest to output 0
// (clean). Punctuation goes to both.
class SplitOp : public Operator {
 public:
  explicit SplitOp(SchemaPtr schema) : Operator({schema}), schema_(std::move(schema)) {}

  std::string_view kind() const override { return "split"; }
  std::size_t num_outputs() const override { return 2; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }

  void process(std::size_t, StreamItem item, OperatorContext& ctx) override {
    if (item.is_punctuation()) {
      ctx.emit(0, item);
      ctx.emit(1, std::move(item));
      return;
    }
    ctx.charge(1);
    auto port = item.tuple().has_null() ? 1 : 0;
    ctx.emit(port, std::move(item));
  }

 private:
  SchemaPtr schema_;
};

// Tracks per-input progress bounds and releases the minimum.
class ProgressMerge {
 public:
  explicit ProgressMerge(std::size_t inputs) : bounds_(inputs) {}

  // Returns the new merged bound when it advanced.
  std::optional<std::int64_t> update(std::size_t input, std::int64_t bound) {
    auto& b = bounds_[input];
    b = std::max(b.value_or(bound), bound);
    std::optional<std::int64_t> low;
    for (const auto& x : bounds_) {
      if (!x) return std::nullopt;
      low = std::min(low.value_or(*x), *x);
    }
    if (emitted_ && *low <= *emitted_) return std::nullopt;
    emitted_ = low;
    return low;
  }

 private:
  std::vector<std::optional<std::int64_t>> bounds_;
  std::optional<std::int64_t> emitted_;
};

// Multiset union of same-schema inputs.
class UnionOp : public Operator {
 public:
  UnionOp(SchemaPtr schema, std::size_t inputs, FeedbackResponse response = FeedbackResponse::propagate)
      : Operator(std::vector<SchemaPtr>(inputs, schema)), schema_(std::move(schema)), progress_(inputs),
        response_(response) {}

  std::string_view kind() const override { return "union"; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }
  bool feedback_aware() const override { return true; }

  void process(std::size_t input, StreamItem item, OperatorContext& ctx) override {
    if (item.is_punctuation()) {
      if (auto b = progress_bound(item.punctuation().pattern)) {
        if (auto merged = progress_.update(input, *b)) {
          auto p = progress_punctuation(schema_, *merged);
          guards_.expire(p);
          ctx.emit(EmbeddedPunctuation{std::move(p)});
        }
      }
      return;
    }
    ctx.charge(1);
    if (guards_.blocks(item.tuple())) {
      ++ctx.counters().guard_drops;
      return;
    }
    ctx.emit(std::move(item));
  }

  void on_feedback(std::size_t, const FeedbackPunctuation& f, OperatorContext& ctx) override {
    if (f.intent != Intent::assumed || response_ == FeedbackResponse::ignore) return;
    guards_.add(f.pattern);
    if (response_ == FeedbackResponse::propagate)
      for (std::size_t i = 0; i < input_schemas().size(); ++i) ctx.send_feedback(i, f);
  }

  std::size_t guard_count() const override { return guards_.size(); }

 private:
  SchemaPtr schema_;
  ProgressMerge progress_;
  FeedbackResponse response_;
  GuardList guards_;
};

}  // namespace fbp
