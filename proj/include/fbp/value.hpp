#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fbp {

// Raised when two objects that must share a schema do not. Always a caller bug.
class SchemaMismatch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class AttrType { integer, real, text, timestamp };

inline std::string_view to_string(AttrType t) {
  switch (t) {
    case AttrType::integer: return "int";
    case AttrType::real: return "float";
    case AttrType::text: return "text";
    case AttrType::timestamp: return "timestamp";
  }
  return "?";
}

inline AttrType parse_attr_type(std::string_view s) {
  if (s == "int") return AttrType::integer;
  if (s == "float") return AttrType::real;
  if (s == "text") return AttrType::text;
  if (s == "timestamp") return AttrType::timestamp;
  throw std::invalid_argument("unknown attribute type '" + std::string(s) + "'");
}

inline bool is_orderable(AttrType t) { return t != AttrType::text; }

// Seconds; wall-clock literals are encoded as seconds-of-day.
struct Timestamp {
  std::int64_t seconds = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

using Null = std::monostate;

// Alternative order matters: index() is used as the runtime type tag.
using Value = std::variant<Null, std::int64_t, double, std::string, Timestamp>;

inline bool is_null(const Value& v) { return std::holds_alternative<Null>(v); }

inline bool has_type(const Value& v, AttrType t) {
  switch (t) {
    case AttrType::integer: return std::holds_alternative<std::int64_t>(v);
    case AttrType::real: return std::holds_alternative<double>(v);
    case AttrType::text: return std::holds_alternative<std::string>(v);
    case AttrType::timestamp: return std::holds_alternative<Timestamp>(v);
  }
  return false;
}

// Orders two non-null values of the same alternative.
inline std::partial_ordering compare_values(const Value& a, const Value& b) {
  if (a.index() != b.index()) throw SchemaMismatch("comparing values of different types");
  switch (a.index()) {
    case 1: return std::get<std::int64_t>(a) <=> std::get<std::int64_t>(b);
    case 2: return std::get<double>(a) <=> std::get<double>(b);
    case 3: return std::get<std::string>(a).compare(std::get<std::string>(b)) <=> 0;
    case 4: return std::get<Timestamp>(a) <=> std::get<Timestamp>(b);
    default: return std::partial_ordering::equivalent;
  }
}

inline std::string format_value(const Value& v) {
  switch (v.index()) {
    case 0: return "null";
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
      return std::string(buf, end);
    }
    case 3: return std::get<std::string>(v);
    case 4: return std::to_string(std::get<Timestamp>(v).seconds);
  }
  return {};
}

// Parses a bare literal as the given attribute type. Surrounding double quotes
// are stripped for text values.
inline Value parse_value(std::string_view s, AttrType t) {
  auto fail = [&] {
    throw std::invalid_argument("cannot parse '" + std::string(s) + "' as " + std::string(to_string(t)));
  };
  if (s == "null" || (s.empty() && t != AttrType::text)) return Null{};
  switch (t) {
    case AttrType::integer:
    case AttrType::timestamp: {
      std::int64_t x = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc{} || p != s.data() + s.size()) fail();
      return t == AttrType::integer ? Value{x} : Value{Timestamp{x}};
    }
    case AttrType::real: {
      double x = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc{} || p != s.data() + s.size()) fail();
      return x;
    }
    case AttrType::text:
      if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
      return std::string(s);
  }
  fail();
  return {};
}

struct Attribute {
  std::string name;
  AttrType type;
  friend bool operator==(const Attribute&, const Attribute&) = default;
};

class Schema {
 public:
  Schema(std::string name, std::vector<Attribute> attributes)
      : name_(std::move(name)), attributes_(std::move(attributes)) {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (attributes_[i].name == attributes_[j].name)
          throw std::invalid_argument("schema " + name_ + ": duplicate attribute '" + attributes_[i].name + "'");
      }
      if (!timestamp_attr_ && attributes_[i].type == AttrType::timestamp) timestamp_attr_ = i;
    }
    if (!timestamp_attr_) throw std::invalid_argument("schema " + name_ + " has no timestamp attribute");
  }

  const std::string& name() const { return name_; }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t size() const { return attributes_.size(); }
  const Attribute& operator[](std::size_t i) const { return attributes_.at(i); }
  std::size_t timestamp_attr() const { return *timestamp_attr_; }

  std::size_t index_of(std::string_view attr) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i)
      if (attributes_[i].name == attr) return i;
    throw std::invalid_argument("schema " + name_ + " has no attribute '" + std::string(attr) + "'");
  }

  friend bool operator==(const Schema& a, const Schema& b) {
    return a.name_ == b.name_ && a.attributes_ == b.attributes_;
  }

 private:
  std::string name_;
  std::vector<Attribute> attributes_;
  std::optional<std::size_t> timestamp_attr_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

inline SchemaPtr make_schema(std::string name, std::vector<Attribute> attributes) {
  return std::make_shared<const Schema>(std::move(name), std::move(attributes));
}

inline bool same_schema(const SchemaPtr& a, const SchemaPtr& b) {
  return a == b || (a && b && *a == *b);
}

inline void require_same_schema(const SchemaPtr& a, const SchemaPtr& b, std::string_view what) {
  if (!same_schema(a, b))
    throw SchemaMismatch(std::string(what) + ": schema " + (a ? a->name() : "<none>") + " vs " +
                         (b ? b->name() : "<none>"));
}

struct Tuple {
  SchemaPtr schema;
  std::vector<Value> values;

  Tuple() = default;
  Tuple(SchemaPtr s, std::vector<Value> v) : schema(std::move(s)), values(std::move(v)) {
    if (values.size() != schema->size())
      throw std::invalid_argument("tuple arity " + std::to_string(values.size()) + " does not match schema " +
                                  schema->name());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!is_null(values[i]) && !has_type(values[i], (*schema)[i].type))
        throw std::invalid_argument("tuple value " + std::to_string(i) + " has wrong type for schema " +
                                    schema->name());
    }
  }

  const Value& operator[](std::size_t i) const { return values[i]; }
  std::int64_t timestamp() const { return std::get<Timestamp>(values[schema->timestamp_attr()]).seconds; }
  bool has_null() const {
    for (const auto& v : values)
      if (is_null(v)) return true;
    return false;
  }

  friend bool operator==(const Tuple& a, const Tuple& b) {
    return same_schema(a.schema, b.schema) && a.values == b.values;
  }
};

inline std::string format_tuple(const Tuple& t) {
  std::string out = "<";
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (i) out += ", ";
    out += format_value(t.values[i]);
  }
  return out + ">";
}

}  // namespace fbp
