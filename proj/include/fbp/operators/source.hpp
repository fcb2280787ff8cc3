#pragma once

#include <functional>
#include <optional>
#include <string>

#include "fbp/operators/common.hpp"

namespace fbp {

// Yields the next item of a stream, or nullopt at exhaustion.
using ItemGenerator = std::function<std::optional<StreamItem>()>;

// Emits a generated or file-backed stream one page per turn. With a
// punctuation interval it inserts [ts <= k*interval - 1, *...] as stream time
// crosses each boundary, and it always closes with an all-wildcard
// punctuation before end-of-stream.
class SourceOp : public Operator {
 public:
  SourceOp(SchemaPtr schema, ItemGenerator next, std::optional<std::int64_t> punct_interval = std::nullopt)
      : Operator({}), schema_(std::move(schema)), next_(std::move(next)), interval_(punct_interval) {
    if (interval_ && *interval_ <= 0) throw std::invalid_argument("punct_interval must be positive");
  }

  std::string_view kind() const override { return "source"; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }
  void process(std::size_t, StreamItem, OperatorContext&) override {}

  bool has_pending_work() const override { return !done_; }

  void pending_work(OperatorContext& ctx) override {
    std::size_t emitted = 0;
    while (emitted < ctx.page_capacity() && !done_) {
      auto item = next_();
      ++line_;
      if (!item) {
        ctx.emit(EmbeddedPunctuation{PunctuationPattern::wildcard(schema_)});
        done_ = true;
        break;
      }
      if (item->is_punctuation()) {
        require_same_schema(item->punctuation().pattern.schema(), schema_, "source punctuation");
        if (auto b = progress_bound(item->punctuation().pattern)) asserted_ = std::max(asserted_.value_or(*b), *b);
        ctx.emit(std::move(*item));
        ++emitted;
        continue;
      }
      auto ts = item->tuple().timestamp();
      if (asserted_ && ts <= *asserted_)
        throw RunError("source item " + std::to_string(line_) + ": timestamp " + std::to_string(ts) +
                       " violates an earlier punctuation");
      if (interval_) {
        if (!next_boundary_) next_boundary_ = (window_of(ts, *interval_) + 1) * *interval_;
        while (ts >= *next_boundary_) {
          ctx.emit(EmbeddedPunctuation{progress_punctuation(schema_, *next_boundary_ - 1)});
          asserted_ = *next_boundary_ - 1;
          *next_boundary_ += *interval_;
          ++emitted;
        }
      }
      ctx.charge(1);
      ctx.emit(std::move(*item));
      ++emitted;
    }
  }

 private:
  SchemaPtr schema_;
  ItemGenerator next_;
  std::optional<std::int64_t> interval_;
  std::optional<std::int64_t> next_boundary_;
  std::optional<std::int64_t> asserted_;
  std::size_t line_ = 0;
  bool done_ = false;
};

inline ItemGenerator vector_generator(std::vector<StreamItem> items) {
  auto data = std::make_shared<std::vector<StreamItem>>(std::move(items));
  auto pos = std::make_shared<std::size_t>(0);
  return [data, pos]() -> std::optional<StreamItem> {
    if (*pos >= data->size()) return std::nullopt;
    return (*data)[(*pos)++];
  };
}

}  // namespace fbp
