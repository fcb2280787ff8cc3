#pragma once

#include "fbp/operators/select.hpp"

namespace fbp {

struct PaceConfig {
  std::int64_t tolerance = 60;           // D, seconds
  bool enforce = true;                   // drop late tuples and issue feedback; otherwise a plain union
  std::optional<std::int64_t> step;      // feedback throttle; default D/2
  std::optional<std::int64_t> margin;    // feedback covers ts < watermark - margin; default D
  FeedbackResponse response = FeedbackResponse::guard_output;
};

struct LatenessRecord {
  std::size_t input = 0;
  std::int64_t ts = 0;
  std::int64_t watermark = 0;
  bool late = false;
  std::size_t open_inputs = 0;  // inputs not yet at end-of-stream, this one included
};

// Union that bounds disorder: a tuple is emitted iff ts >= watermark - D,
// where the watermark is the largest timestamp seen on any input. When the
// divergence of an input exceeds D it receives -[ts < watermark - margin],
// repeated as the watermark advances by a step.
class PaceOp : public Operator {
 public:
  PaceOp(SchemaPtr schema, std::size_t inputs, PaceConfig config)
      : Operator(std::vector<SchemaPtr>(inputs, schema)), schema_(std::move(schema)), cfg_(config),
        progress_(inputs), max_seen_(inputs), open_(inputs) {
    if (cfg_.tolerance < 0) throw std::invalid_argument("pace tolerance must be non-negative");
    if (!cfg_.step) cfg_.step = std::max<std::int64_t>(1, cfg_.tolerance / 2);
    if (!cfg_.margin) cfg_.margin = cfg_.tolerance;
    if (*cfg_.margin < 0 || *cfg_.margin > cfg_.tolerance) throw std::invalid_argument("pace margin must lie in [0, D]");
    // Upstream removal could lower the watermark and admit tuples that would
    // otherwise be late, so received feedback never goes past the output guard.
    cfg_.response = std::min(cfg_.response, FeedbackResponse::guard_output);
  }

  std::string_view kind() const override { return "pace"; }
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
    auto ts = item.tuple().timestamp();
    watermark_ = std::max(watermark_.value_or(ts), ts);
    max_seen_[input] = std::max(max_seen_[input].value_or(ts), ts);
    bool late = ts < *watermark_ - cfg_.tolerance;
    log_.push_back({input, ts, *watermark_, late, open_});
    if (late && cfg_.enforce) {
      ++dropped_late_;
    } else if (guards_.blocks(item.tuple())) {
      ++ctx.counters().guard_drops;
    } else {
      ctx.emit(std::move(item));
    }
    if (cfg_.enforce) maybe_send_feedback(ctx);
  }

  void on_feedback(std::size_t, const FeedbackPunctuation& f, OperatorContext&) override {
    if (f.intent != Intent::assumed || cfg_.response == FeedbackResponse::ignore) return;
    guards_.add(f.pattern);
  }

  void input_closed(std::size_t, OperatorContext&) override { --open_; }

  std::size_t guard_count() const override { return guards_.size(); }
  const std::vector<LatenessRecord>& lateness_log() const { return log_; }
  std::uint64_t dropped_late() const { return dropped_late_; }
  std::optional<std::int64_t> watermark() const { return watermark_; }

 private:
  void maybe_send_feedback(OperatorContext& ctx) {
    auto limit = *watermark_ - cfg_.tolerance;
    auto cutoff = *watermark_ - *cfg_.margin;
    if (last_cutoff_ && cutoff - *last_cutoff_ < *cfg_.step) return;
    bool sent = false;
    for (std::size_t i = 0; i < max_seen_.size(); ++i) {
      if (max_seen_[i] && *max_seen_[i] >= limit) continue;
      auto p = PunctuationPattern::wildcard(schema_).with(schema_->timestamp_attr(), AttributeConstraint::lt(Timestamp{cutoff}));
      ctx.send_feedback(i, FeedbackPunctuation::assumed(std::move(p)));
      sent = true;
    }
    if (sent || !last_cutoff_) last_cutoff_ = cutoff;
  }

  SchemaPtr schema_;
  PaceConfig cfg_;
  ProgressMerge progress_;
  std::vector<std::optional<std::int64_t>> max_seen_;
  std::optional<std::int64_t> watermark_;
  std::optional<std::int64_t> last_cutoff_;
  GuardList guards_;
  std::vector<LatenessRecord> log_;
  std::uint64_t dropped_late_ = 0;
  std::size_t open_ = 0;
};

}  // namespace fbp
