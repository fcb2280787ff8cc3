#pragma once

#include <map>
#include <vector>

#include "fbp/fbp.hpp"

namespace fbp::testing {

inline Value I(std::int64_t v) { return Value{v}; }
inline Value F(double v) { return Value{v}; }
inline Value T(std::int64_t s) { return Value{Timestamp{s}}; }
inline Value S(std::string s) { return Value{std::move(s)}; }
inline Value N() { return Value{Null{}}; }

using C = AttributeConstraint;

inline PunctuationPattern pat(const SchemaPtr& s, std::vector<AttributeConstraint> cs) {
  return PunctuationPattern(s, std::move(cs));
}

inline PunctuationPattern pat(const SchemaPtr& s, std::string_view text) { return parse_pattern(text, s); }

inline StreamItem tup(const SchemaPtr& s, std::vector<Value> vs) { return StreamItem(Tuple(s, std::move(vs))); }

inline StreamItem punct(const PunctuationPattern& p) { return StreamItem(EmbeddedPunctuation{p}); }

inline std::vector<Tuple> tuples_of(const std::vector<StreamItem>& items) {
  std::vector<Tuple> out;
  for (const auto& i : items)
    if (i.is_tuple()) out.push_back(i.tuple());
  return out;
}

inline std::map<std::vector<Value>, int> bag(const std::vector<StreamItem>& items) {
  std::map<std::vector<Value>, int> m;
  for (const auto& i : items)
    if (i.is_tuple()) ++m[i.tuple().values];
  return m;
}

inline std::map<std::vector<Value>, int> bag(const std::vector<std::vector<Value>>& rows) {
  std::map<std::vector<Value>, int> m;
  for (const auto& r : rows) ++m[r];
  return m;
}

inline OperatorFactory source_of(SchemaPtr s, std::vector<StreamItem> items) {
  return [s, items] { return std::make_unique<SourceOp>(s, vector_generator(items)); };
}

// Captures what an operator sends upstream, for propagation assertions.
class FeedbackRecorder : public Operator {
 public:
  explicit FeedbackRecorder(SchemaPtr s) : Operator({s}), schema_(std::move(s)) {}
  std::string_view kind() const override { return "recorder"; }
  SchemaPtr output_schema(std::size_t) const override { return schema_; }
  bool feedback_aware() const override { return true; }
  void process(std::size_t, StreamItem item, OperatorContext& ctx) override { ctx.emit(std::move(item)); }
  void on_feedback(std::size_t, const FeedbackPunctuation& f, OperatorContext&) override { received.push_back(f); }
  std::vector<FeedbackPunctuation> received;

 private:
  SchemaPtr schema_;
};

}  // namespace fbp::testing
