#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "fbp/operators/common.hpp"

namespace fbp {

struct SinkProgress {
  std::size_t items_seen = 0;
  std::optional<std::int64_t> bound;  // latest progress bound observed
};

// Issues feedback from the consumer side, e.g. a user changing what is visible.
using FeedbackInjector = std::function<std::vector<FeedbackPunctuation>(const SinkProgress&)>;

struct Arrival {
  std::size_t index = 0;
  std::uint64_t time = 0;
};

// Terminal collector. Scheduled injections fire once `after_items` items have
// arrived (0 fires at start).
class SinkOp : public Operator {
 public:
  struct Injection {
    std::size_t after_items = 0;
    FeedbackPunctuation feedback;
  };

  explicit SinkOp(SchemaPtr schema, std::vector<Injection> injections = {}, FeedbackInjector injector = {})
      : Operator({schema}), schema_(std::move(schema)), injections_(std::move(injections)),
        injector_(std::move(injector)) {
    for (const auto& inj : injections_) require_same_schema(inj.feedback.pattern.schema(), schema_, "sink injection");
    std::stable_sort(injections_.begin(), injections_.end(),
                     [](const Injection& a, const Injection& b) { return a.after_items < b.after_items; });
  }

  std::string_view kind() const override { return "sink"; }
  std::size_t num_outputs() const override { return 0; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }

  void start(OperatorContext& ctx) override { fire(ctx); }

  void process(std::size_t, StreamItem item, OperatorContext& ctx) override {
    if (item.is_punctuation()) {
      if (auto b = progress_bound(item.punctuation().pattern)) progress_.bound = std::max(progress_.bound.value_or(*b), *b);
    } else {
      arrivals_.push_back({items_.size(), ctx.now()});
    }
    items_.push_back(std::move(item));
    ++progress_.items_seen;
    fire(ctx);
  }

  const std::vector<StreamItem>* collected() const override { return &items_; }
  const std::vector<Arrival>& arrivals() const { return arrivals_; }

  std::vector<Tuple> tuples() const {
    std::vector<Tuple> out;
    for (const auto& i : items_)
      if (i.is_tuple()) out.push_back(i.tuple());
    return out;
  }

 private:
  void fire(OperatorContext& ctx) {
    while (next_ < injections_.size() && injections_[next_].after_items <= progress_.items_seen)
      ctx.send_feedback(0, injections_[next_++].feedback);
    if (injector_)
      for (auto& f : injector_(progress_)) ctx.send_feedback(0, std::move(f));
  }

  SchemaPtr schema_;
  std::vector<Injection> injections_;
  FeedbackInjector injector_;
  std::size_t next_ = 0;
  SinkProgress progress_;
  std::vector<StreamItem> items_;
  std::vector<Arrival> arrivals_;
};

}  // namespace fbp
