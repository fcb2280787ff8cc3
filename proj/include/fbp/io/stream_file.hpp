#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fbp/operators/source.hpp"

namespace fbp {

namespace detail {

struct Field {
  std::string text;
  bool quoted = false;
};

// CSV fields: double quotes group, "" inside quotes is a literal quote.
inline std::vector<Field> split_fields(std::string_view line, char sep = ',') {
  std::vector<Field> out;
  Field cur;
  bool in_quotes = false;
  auto finish = [&] {
    if (!cur.quoted) cur.text = std::string(trim(cur.text));
    out.push_back(std::move(cur));
    cur = {};
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (in_quotes) {
      if (ch != '"') {
        cur.text += ch;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        cur.text += '"';
        ++i;
      } else {
        in_quotes = false;
      }
    } else if (ch == '"') {
      in_quotes = cur.quoted = true;
      cur.text.clear();
    } else if (ch == sep) {
      finish();
    } else if (!cur.quoted) {
      cur.text += ch;
    }
  }
  if (in_quotes) throw std::invalid_argument("unterminated quote");
  finish();
  return out;
}

}  // namespace detail

// Quotes a field when it holds a separator, quote or line break.
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// `name: attr:type, attr:type, ...`
inline SchemaPtr parse_schema_decl(std::string_view decl) {
  auto colon = decl.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("schema declaration lacks ':'");
  std::string name(detail::trim(decl.substr(0, colon)));
  std::vector<Attribute> attrs;
  for (const auto& f : detail::split_fields(decl.substr(colon + 1))) {
    const auto& field = f.text;
    auto c = field.find(':');
    if (c == std::string::npos) throw std::invalid_argument("attribute '" + field + "' lacks a type");
    attrs.push_back({std::string(detail::trim(std::string_view(field).substr(0, c))),
                     parse_attr_type(detail::trim(std::string_view(field).substr(c + 1)))});
  }
  return make_schema(std::move(name), std::move(attrs));
}

inline std::string format_schema_decl(const Schema& s) {
  std::string out = s.name() + ":";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += (i ? ", " : " ") + s[i].name + ":" + std::string(to_string(s[i].type));
  return out;
}

// Line-oriented stream file:
//   #schema name: a:int, t:timestamp, ...     (first non-blank line)
//   1,100,7                                   tuple; empty field = null
//   #punct name: [*, <=100, *]                embedded punctuation
// Other lines starting with '#' are comments.
class StreamFileReader {
 public:
  explicit StreamFileReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error("cannot open stream file " + path);
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto t = detail::trim(line);
      if (t.empty()) continue;
      if (!t.starts_with("#schema")) throw RunError(where() + "expected a #schema header");
      schema_ = parse_schema_decl(t.substr(7));
      return;
    }
    throw RunError(path + ": empty stream file");
  }

  const SchemaPtr& schema() const { return schema_; }

  std::optional<StreamItem> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto t = detail::trim(line);
      if (t.empty()) continue;
      try {
        if (t.starts_with("#punct")) return StreamItem(EmbeddedPunctuation{parse_pattern(t.substr(6), schema_)});
        if (t.starts_with("#")) continue;
        auto fields = detail::split_fields(t);
        if (fields.size() != schema_->size())
          throw std::invalid_argument("expected " + std::to_string(schema_->size()) + " fields, got " +
                                      std::to_string(fields.size()));
        std::vector<Value> values;
        for (std::size_t i = 0; i < fields.size(); ++i) {
          auto type = (*schema_)[i].type;
          const auto& f = fields[i];
          if (f.text.empty() && !f.quoted)
            values.emplace_back(Null{});
          else if (type == AttrType::text)
            values.emplace_back(f.text);
          else
            values.push_back(parse_value(f.text, type));
        }
        if (is_null(values[schema_->timestamp_attr()])) throw std::invalid_argument("timestamp may not be null");
        return StreamItem(Tuple(schema_, std::move(values)));
      } catch (const std::invalid_argument& e) {
        throw RunError(where() + e.what());
      }
    }
    return std::nullopt;
  }

 private:
  std::string where() const { return path_ + ":" + std::to_string(line_no_) + ": "; }

  std::string path_;
  std::ifstream in_;
  SchemaPtr schema_;
  std::size_t line_no_ = 0;
};

inline ItemGenerator file_generator(const std::string& path) {
  auto reader = std::make_shared<StreamFileReader>(path);
  return [reader] { return reader->next(); };
}

inline void write_stream_file(std::ostream& out, const Schema& schema, const std::vector<StreamItem>& items) {
  out << "#schema " << format_schema_decl(schema) << "\n";
  for (const auto& item : items) {
    if (item.is_punctuation()) {
      out << "#punct " << format_pattern(item.punctuation().pattern) << "\n";
      continue;
    }
    const auto& vs = item.tuple().values;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      out << (i ? "," : "");
      if (is_null(vs[i])) continue;
      auto text = format_value(vs[i]);
      out << (std::holds_alternative<std::string>(vs[i]) && text.empty() ? "\"\"" : csv_escape(text));
    }
    out << "\n";
  }
}

}  // namespace fbp
