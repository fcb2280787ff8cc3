#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbp/pattern.hpp"

namespace fbp {

struct InputRef {
  std::size_t input = 0;
  std::size_t attr = 0;
  friend bool operator==(const InputRef&, const InputRef&) = default;
};

// Where an output attribute's value comes from.
struct AttributeOrigin {
  enum class Kind {
    from_input,    // copied unchanged; join attributes list one ref per input
    window_start,  // floor(ts / range) * range of a timestamp input attribute
    computed,
    constant,
  };

  Kind kind = Kind::computed;
  std::vector<InputRef> refs;
  std::int64_t window_range = 0;

  static AttributeOrigin copied(std::vector<InputRef> refs) { return {Kind::from_input, std::move(refs), 0}; }
  static AttributeOrigin window(InputRef ts, std::int64_t range) { return {Kind::window_start, {ts}, range}; }
  static AttributeOrigin computed_value() { return {Kind::computed, {}, 0}; }
  static AttributeOrigin constant_value() { return {Kind::constant, {}, 0}; }
};

class AttributeMapping {
 public:
  AttributeMapping() = default;

  AttributeMapping(SchemaPtr output, std::vector<SchemaPtr> inputs, std::vector<AttributeOrigin> origins)
      : output_(std::move(output)), inputs_(std::move(inputs)), origins_(std::move(origins)) {
    if (origins_.size() != output_->size())
      throw std::invalid_argument("mapping for " + output_->name() + " needs one origin per output attribute");
    for (std::size_t o = 0; o < origins_.size(); ++o) {
      const auto& origin = origins_[o];
      for (const auto& ref : origin.refs) {
        if (ref.input >= inputs_.size() || ref.attr >= inputs_[ref.input]->size())
          throw std::invalid_argument("mapping for " + output_->name() + " references a missing input attribute");
        auto in_type = (*inputs_[ref.input])[ref.attr].type;
        auto out_type = (*output_)[o].type;
        if (in_type != out_type)
          throw std::invalid_argument("mapping for " + output_->name() + ": attribute " + (*output_)[o].name +
                                      " changes type");
        if (origin.kind == AttributeOrigin::Kind::window_start && in_type != AttrType::timestamp)
          throw std::invalid_argument("window origin must be a timestamp attribute");
      }
      if (origin.kind == AttributeOrigin::Kind::window_start && (origin.refs.size() != 1 || origin.window_range <= 0))
        throw std::invalid_argument("window origin needs one timestamp ref and a positive range");
      if (origin.kind == AttributeOrigin::Kind::from_input && origin.refs.empty())
        throw std::invalid_argument("copied origin without a source attribute");
    }
  }

  const SchemaPtr& output_schema() const { return output_; }
  const std::vector<SchemaPtr>& input_schemas() const { return inputs_; }
  const std::vector<AttributeOrigin>& origins() const { return origins_; }
  std::size_t num_inputs() const { return inputs_.size(); }

 private:
  SchemaPtr output_;
  std::vector<SchemaPtr> inputs_;
  std::vector<AttributeOrigin> origins_;
};

// One entry per input; nullopt where no safe propagation exists.
using PropagationResult = std::vector<std::optional<PunctuationPattern>>;

inline AttributeMapping identity_mapping(const SchemaPtr& s) {
  std::vector<AttributeOrigin> origins;
  for (std::size_t i = 0; i < s->size(); ++i) origins.push_back(AttributeOrigin::copied({{0, i}}));
  return AttributeMapping(s, {s}, std::move(origins));
}

// All inputs share the output schema; every attribute is carried by each of them.
inline AttributeMapping union_mapping(const SchemaPtr& s, std::size_t inputs) {
  std::vector<AttributeOrigin> origins;
  for (std::size_t a = 0; a < s->size(); ++a) {
    std::vector<InputRef> refs;
    for (std::size_t i = 0; i < inputs; ++i) refs.push_back({i, a});
    origins.push_back(AttributeOrigin::copied(std::move(refs)));
  }
  return AttributeMapping(s, std::vector<SchemaPtr>(inputs, s), std::move(origins));
}

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Rewrites a constraint on a window-start attribute into the timestamp range of
// the tuples assigned to those windows. nullopt when no window start satisfies c.
inline std::optional<AttributeConstraint> window_to_timestamp(const AttributeConstraint& c, std::int64_t range) {
  auto r = to_range(c);
  if (r.empty) return std::nullopt;
  Range out;
  if (r.lo) out.lo = Value{Timestamp{ceil_div(std::get<Timestamp>(*r.lo).seconds, range) * range}};
  if (r.hi) out.hi = Value{Timestamp{ceil_div(std::get<Timestamp>(*r.hi).seconds, range) * range}};
  if (out.lo && out.hi && compare_values(*out.lo, *out.hi) >= 0) return std::nullopt;
  return from_range(out);
}

}  // namespace detail

// Rewrites feedback on the output schema onto each input schema, emitting a
// pattern for input i only when every constrained output attribute is carried
// by input i. Constraints on computed or constant attributes block all inputs.
inline PropagationResult derive_input_patterns(const PunctuationPattern& f, const AttributeMapping& m) {
  require_same_schema(f.schema(), m.output_schema(), "derive_input_patterns");
  PropagationResult result(m.num_inputs());
  auto constrained = f.constrained_attrs();

  for (auto o : constrained) {
    auto kind = m.origins()[o].kind;
    if (kind == AttributeOrigin::Kind::computed || kind == AttributeOrigin::Kind::constant) return result;
  }

  for (std::size_t input = 0; input < m.num_inputs(); ++input) {
    auto schema = m.input_schemas()[input];
    std::vector<AttributeConstraint> cs(schema->size());
    bool ok = true;
    for (auto o : constrained) {
      const auto& origin = m.origins()[o];
      const InputRef* ref = nullptr;
      for (const auto& r : origin.refs)
        if (r.input == input) ref = &r;
      if (!ref) {
        ok = false;
        break;
      }
      std::optional<AttributeConstraint> c = f[o];
      if (origin.kind == AttributeOrigin::Kind::window_start) c = detail::window_to_timestamp(f[o], origin.window_range);
      if (!c) {
        ok = false;
        break;
      }
      auto& slot = cs[ref->attr];
      if (slot.is_wildcard()) {
        slot = *c;
      } else {
        auto merged = detail::intersect(detail::to_range(slot), detail::to_range(*c));
        if (merged.empty) {
          ok = false;
          break;
        }
        slot = detail::from_range(merged);
      }
    }
    if (ok) result[input] = PunctuationPattern(schema, std::move(cs));
  }
  return result;
}

}  // namespace fbp
