#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fbp/value.hpp"

namespace fbp {

class PatternParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AttributeConstraint {
  enum class Kind { any, eq, lt, le, gt, ge, interval };

  Kind kind = Kind::any;
  Value lo;  // operand; lower bound for interval (inclusive)
  Value hi;  // upper bound for interval (exclusive)

  static AttributeConstraint wildcard() { return {}; }
  static AttributeConstraint eq(Value v) { return {Kind::eq, std::move(v), {}}; }
  static AttributeConstraint lt(Value v) { return {Kind::lt, std::move(v), {}}; }
  static AttributeConstraint le(Value v) { return {Kind::le, std::move(v), {}}; }
  static AttributeConstraint gt(Value v) { return {Kind::gt, std::move(v), {}}; }
  static AttributeConstraint ge(Value v) { return {Kind::ge, std::move(v), {}}; }
  static AttributeConstraint interval(Value l, Value h) { return {Kind::interval, std::move(l), std::move(h)}; }

  bool is_wildcard() const { return kind == Kind::any; }

  // Null satisfies only the wildcard.
  bool satisfied_by(const Value& v) const {
    if (kind == Kind::any) return true;
    if (is_null(v)) return false;
    switch (kind) {
      case Kind::eq: return compare_values(v, lo) == 0;
      case Kind::lt: return compare_values(v, lo) < 0;
      case Kind::le: return compare_values(v, lo) <= 0;
      case Kind::gt: return compare_values(v, lo) > 0;
      case Kind::ge: return compare_values(v, lo) >= 0;
      case Kind::interval: return compare_values(v, lo) >= 0 && compare_values(v, hi) < 0;
      case Kind::any: break;
    }
    return true;
  }

  friend bool operator==(const AttributeConstraint&, const AttributeConstraint&) = default;
};

namespace detail {

// Smallest value strictly greater than v, if one exists in the domain.
inline std::optional<Value> successor(const Value& v) {
  switch (v.index()) {
    case 1: {
      auto x = std::get<std::int64_t>(v);
      if (x == std::numeric_limits<std::int64_t>::max()) return std::nullopt;
      return Value{x + 1};
    }
    case 2: {
      double x = std::get<double>(v);
      if (std::isinf(x) && x > 0) return std::nullopt;
      return Value{std::nextafter(x, std::numeric_limits<double>::infinity())};
    }
    case 3: return Value{std::get<std::string>(v) + '\0'};
    case 4: {
      auto x = std::get<Timestamp>(v).seconds;
      if (x == std::numeric_limits<std::int64_t>::max()) return std::nullopt;
      return Value{Timestamp{x + 1}};
    }
  }
  return std::nullopt;
}

// Half-open range [lo, hi); a missing bound is unbounded.
struct Range {
  std::optional<Value> lo;
  std::optional<Value> hi;
  bool empty = false;
};

inline Range to_range(const AttributeConstraint& c) {
  using K = AttributeConstraint::Kind;
  Range r;
  switch (c.kind) {
    case K::any: break;
    case K::eq:
      r.lo = c.lo;
      r.hi = successor(c.lo);
      break;
    case K::lt: r.hi = c.lo; break;
    case K::le: r.hi = successor(c.lo); break;
    case K::gt:
      r.lo = successor(c.lo);
      if (!r.lo) r.empty = true;
      break;
    case K::ge: r.lo = c.lo; break;
    case K::interval:
      r.lo = c.lo;
      r.hi = c.hi;
      break;
  }
  if (r.lo && r.hi && compare_values(*r.lo, *r.hi) >= 0) r.empty = true;
  return r;
}

inline AttributeConstraint from_range(const Range& r) {
  if (r.lo && r.hi) {
    auto next = successor(*r.lo);
    if (next && compare_values(*next, *r.hi) == 0) return AttributeConstraint::eq(*r.lo);
    return AttributeConstraint::interval(*r.lo, *r.hi);
  }
  if (r.lo) return AttributeConstraint::ge(*r.lo);
  if (r.hi) return AttributeConstraint::lt(*r.hi);
  return AttributeConstraint::wildcard();
}

inline Range intersect(const Range& a, const Range& b) {
  Range r;
  r.empty = a.empty || b.empty;
  r.lo = a.lo;
  if (b.lo && (!r.lo || compare_values(*b.lo, *r.lo) > 0)) r.lo = b.lo;
  r.hi = a.hi;
  if (b.hi && (!r.hi || compare_values(*b.hi, *r.hi) < 0)) r.hi = b.hi;
  if (r.lo && r.hi && compare_values(*r.lo, *r.hi) >= 0) r.empty = true;
  return r;
}

// Whether every non-null value in inner also lies in outer.
inline bool range_contains(const Range& outer, const Range& inner) {
  if (inner.empty) return true;
  if (outer.empty) return false;
  if (outer.lo && (!inner.lo || compare_values(*inner.lo, *outer.lo) < 0)) return false;
  if (outer.hi && (!inner.hi || compare_values(*inner.hi, *outer.hi) > 0)) return false;
  return true;
}

}  // namespace detail

// A per-attribute conjunction describing a subset of a schema's tuples. Shared
// by embedded punctuation (downstream) and feedback punctuation (upstream).
class PunctuationPattern {
 public:
  PunctuationPattern() = default;

  explicit PunctuationPattern(SchemaPtr schema)
      : schema_(std::move(schema)), constraints_(schema_->size()) {}

  PunctuationPattern(SchemaPtr schema, std::vector<AttributeConstraint> constraints)
      : schema_(std::move(schema)), constraints_(std::move(constraints)) {
    if (constraints_.size() != schema_->size())
      throw std::invalid_argument("pattern arity does not match schema " + schema_->name());
    for (std::size_t i = 0; i < constraints_.size(); ++i) validate(i);
  }

  static PunctuationPattern wildcard(SchemaPtr schema) { return PunctuationPattern(std::move(schema)); }

  const SchemaPtr& schema() const { return schema_; }
  const std::vector<AttributeConstraint>& constraints() const { return constraints_; }
  const AttributeConstraint& operator[](std::size_t i) const { return constraints_.at(i); }
  std::size_t size() const { return constraints_.size(); }

  PunctuationPattern with(std::size_t attr, AttributeConstraint c) const {
    PunctuationPattern p = *this;
    p.constraints_.at(attr) = std::move(c);
    p.validate(attr);
    return p;
  }

  PunctuationPattern with(std::string_view attr, AttributeConstraint c) const {
    return with(schema_->index_of(attr), std::move(c));
  }

  bool is_wildcard() const {
    for (const auto& c : constraints_)
      if (!c.is_wildcard()) return false;
    return true;
  }

  std::vector<std::size_t> constrained_attrs() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < constraints_.size(); ++i)
      if (!constraints_[i].is_wildcard()) out.push_back(i);
    return out;
  }

  friend bool operator==(const PunctuationPattern& a, const PunctuationPattern& b) {
    return same_schema(a.schema_, b.schema_) && a.constraints_ == b.constraints_;
  }

 private:
  void validate(std::size_t i) const {
    using K = AttributeConstraint::Kind;
    const auto& c = constraints_[i];
    if (c.kind == K::any) return;
    const auto& attr = (*schema_)[i];
    auto check = [&](const Value& v) {
      if (!has_type(v, attr.type))
        throw std::invalid_argument("constraint on " + attr.name + " has a value of the wrong type");
    };
    check(c.lo);
    if (c.kind != K::eq && !is_orderable(attr.type))
      throw std::invalid_argument("ordering constraint on non-orderable attribute " + attr.name);
    if (c.kind == K::interval) {
      check(c.hi);
      if (compare_values(c.lo, c.hi) >= 0)
        throw std::invalid_argument("interval on " + attr.name + " requires lo < hi");
    }
  }

  SchemaPtr schema_;
  std::vector<AttributeConstraint> constraints_;
};

inline bool matches_values(const std::vector<Value>& values, const PunctuationPattern& p) {
  const auto& cs = p.constraints();
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (!cs[i].satisfied_by(values[i])) return false;
  return true;
}

inline bool matches(const Tuple& t, const PunctuationPattern& p) {
  require_same_schema(t.schema, p.schema(), "matches");
  return matches_values(t.values, p);
}

// Sound attribute-wise containment: true only if every tuple matching q matches p.
inline bool subsumes(const PunctuationPattern& p, const PunctuationPattern& q) {
  require_same_schema(p.schema(), q.schema(), "subsumes");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i].kind == AttributeConstraint::Kind::any) continue;
    if (detail::to_range(q[i]).empty) return true;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].is_wildcard()) continue;
    if (q[i].is_wildcard()) return false;  // q admits nulls, p does not
    if (!detail::range_contains(detail::to_range(p[i]), detail::to_range(q[i]))) return false;
  }
  return true;
}

// Attribute-wise intersection; nullopt when the conjunction is unsatisfiable.
inline std::optional<PunctuationPattern> conjoin(const PunctuationPattern& p, const PunctuationPattern& q) {
  require_same_schema(p.schema(), q.schema(), "conjoin");
  std::vector<AttributeConstraint> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].is_wildcard()) {
      out[i] = q[i];
    } else if (q[i].is_wildcard()) {
      out[i] = p[i];
    } else {
      auto r = detail::intersect(detail::to_range(p[i]), detail::to_range(q[i]));
      if (r.empty) return std::nullopt;
      out[i] = detail::from_range(r);
    }
    if (!out[i].is_wildcard() && detail::to_range(out[i]).empty) return std::nullopt;
  }
  return PunctuationPattern(p.schema(), std::move(out));
}

// ---------------------------------------------------------------------------
// Text form: `schema_name: [c1, c2, ...]`, each c one of `*`, `=v`, `<v`,
// `<=v`, `>v`, `>=v`, `[lo,hi)`. Text literals are double-quoted.

inline std::string format_literal(const Value& v) {
  if (std::holds_alternative<std::string>(v)) return '"' + std::get<std::string>(v) + '"';
  return format_value(v);
}

inline std::string format_constraint(const AttributeConstraint& c) {
  using K = AttributeConstraint::Kind;
  switch (c.kind) {
    case K::any: return "*";
    case K::eq: return "=" + format_literal(c.lo);
    case K::lt: return "<" + format_literal(c.lo);
    case K::le: return "<=" + format_literal(c.lo);
    case K::gt: return ">" + format_literal(c.lo);
    case K::ge: return ">=" + format_literal(c.lo);
    case K::interval: return "[" + format_literal(c.lo) + "," + format_literal(c.hi) + ")";
  }
  return "?";
}

inline std::string format_pattern(const PunctuationPattern& p) {
  std::string out = p.schema()->name() + ": [";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ", ";
    out += format_constraint(p[i]);
  }
  return out + "]";
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline AttributeConstraint parse_constraint(std::string_view s, const Attribute& attr) {
  s = trim(s);
  auto value = [&](std::string_view v) {
    v = trim(v);
    if (v.empty() || v == "null") throw PatternParseError("missing value in constraint on " + attr.name);
    try {
      return parse_value(v, attr.type);
    } catch (const std::invalid_argument& e) {
      throw PatternParseError(e.what());
    }
  };
  if (s == "*") return AttributeConstraint::wildcard();
  if (s.starts_with("<=")) return AttributeConstraint::le(value(s.substr(2)));
  if (s.starts_with(">=")) return AttributeConstraint::ge(value(s.substr(2)));
  if (s.starts_with("<")) return AttributeConstraint::lt(value(s.substr(1)));
  if (s.starts_with(">")) return AttributeConstraint::gt(value(s.substr(1)));
  if (s.starts_with("=")) return AttributeConstraint::eq(value(s.substr(1)));
  if (s.starts_with("[") && s.ends_with(")")) {
    auto body = s.substr(1, s.size() - 2);
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '"') quoted = !quoted;
      if (body[i] == ',' && !quoted) return AttributeConstraint::interval(value(body.substr(0, i)), value(body.substr(i + 1)));
    }
  }
  throw PatternParseError("malformed constraint '" + std::string(s) + "'");
}

}  // namespace detail

// Parses the bracketed body against a known schema. A leading `name:` prefix
// is accepted and must name that schema.
inline PunctuationPattern parse_pattern(std::string_view text, const SchemaPtr& schema) {
  auto s = detail::trim(text);
  if (auto colon = s.find(':'); colon != std::string_view::npos && s.find('[') > colon) {
    auto name = detail::trim(s.substr(0, colon));
    if (name != schema->name())
      throw PatternParseError("pattern names schema '" + std::string(name) + "', expected " + schema->name());
    s = detail::trim(s.substr(colon + 1));
  }
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw PatternParseError("pattern must be bracketed: '" + std::string(text) + "'");
  s = s.substr(1, s.size() - 2);

  std::vector<std::string_view> items;
  int depth = 0;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char ch = s[i];
    if (ch == '"') quoted = !quoted;
    if (quoted) continue;
    if (ch == '[') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      items.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  items.push_back(s.substr(start));
  if (items.size() != schema->size())
    throw PatternParseError("pattern has " + std::to_string(items.size()) + " constraints, schema " +
                            schema->name() + " has " + std::to_string(schema->size()) + " attributes");

  std::vector<AttributeConstraint> cs;
  cs.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) cs.push_back(detail::parse_constraint(items[i], (*schema)[i]));
  try {
    return PunctuationPattern(schema, std::move(cs));
  } catch (const std::invalid_argument& e) {
    throw PatternParseError(e.what());
  }
}

using SchemaResolver = std::function<SchemaPtr(std::string_view)>;

// Parses `name: [...]`, resolving the schema by name.
inline PunctuationPattern parse_pattern(std::string_view text, const SchemaResolver& resolve) {
  auto s = detail::trim(text);
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw PatternParseError("pattern lacks a schema name: '" + std::string(text) + "'");
  auto schema = resolve(detail::trim(s.substr(0, colon)));
  if (!schema) throw PatternParseError("unknown schema in pattern '" + std::string(text) + "'");
  return parse_pattern(s, schema);
}

}  // namespace fbp
