#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fbp/harness/generator.hpp"
#include "fbp/io/stream_file.hpp"
#include "fbp/operators/aggregate.hpp"
#include "fbp/operators/impute.hpp"
#include "fbp/operators/join.hpp"
#include "fbp/operators/pace.hpp"
#include "fbp/operators/sink.hpp"

namespace fbp {

// One `node` line of a plan file.
struct NodeDecl {
  std::string id;
  std::string kind;
  std::map<std::string, std::string> params;
  std::size_t line = 0;
};

struct InjectDecl {
  std::string sink;
  std::size_t after = 0;
  std::string pattern;
  std::size_t line = 0;
};

struct PlanConfig {
  std::map<std::string, SchemaPtr> schemas;
  std::vector<NodeDecl> nodes;
  std::vector<InjectDecl> injections;
  std::filesystem::path base_dir;  // relative file= paths resolve against this
};

namespace detail {

// Whitespace-separated words; '...' or "..." keep spaces (and the other quote kind) together.
inline std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  char quote = 0;
  bool have = false;
  for (char ch : line) {
    if (quote) {
      if (ch == quote) quote = 0;
      else cur += ch;
      continue;
    }
    if (ch == '\'' || ch == '"') {
      quote = ch;
      have = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (have) out.push_back(std::move(cur));
      cur.clear();
      have = false;
      continue;
    }
    cur += ch;
    have = true;
  }
  if (quote) throw std::invalid_argument("unterminated quote");
  if (have) out.push_back(std::move(cur));
  return out;
}

inline std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quote) {
      if (ch == quote) quote = 0;
    } else if (ch == '\'' || ch == '"') {
      quote = ch;
    } else if (ch == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  for (auto& f : split_fields(s)) out.push_back(std::move(f.text));
  return out;
}

}  // namespace detail

inline PlanConfig parse_plan_config(std::istream& in, std::filesystem::path base_dir = {}) {
  PlanConfig cfg;
  cfg.base_dir = std::move(base_dir);
  std::set<std::string> ids;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto where = "line " + std::to_string(line_no) + ": ";
    try {
      auto line = detail::strip_comment(raw);
      auto t = detail::trim(line);
      if (t.empty()) continue;
      if (t.starts_with("schema ")) {
        auto s = parse_schema_decl(t.substr(7));
        if (!cfg.schemas.emplace(s->name(), s).second) throw std::invalid_argument("schema '" + s->name() + "' declared twice");
        continue;
      }
      auto words = detail::tokenize(t);
      if (words[0] == "node") {
        if (words.size() < 3) throw std::invalid_argument("expected: node <id> <kind> [key=value ...]");
        NodeDecl n{words[1], words[2], {}, line_no};
        if (n.id.find('.') != std::string::npos) throw std::invalid_argument("node id may not contain '.'");
        if (!ids.insert(n.id).second) throw std::invalid_argument("duplicate node id '" + n.id + "'");
        for (std::size_t i = 3; i < words.size(); ++i) {
          auto eq = words[i].find('=');
          if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected key=value, got '" + words[i] + "'");
          if (!n.params.emplace(words[i].substr(0, eq), words[i].substr(eq + 1)).second)
            throw std::invalid_argument("parameter '" + words[i].substr(0, eq) + "' repeated");
        }
        cfg.nodes.push_back(std::move(n));
      } else if (words[0] == "inject") {
        if (words.size() != 4 || !words[2].starts_with("after="))
          throw std::invalid_argument("expected: inject <sink> after=<n> '<pattern>'");
        InjectDecl d{words[1], 0, words[3], line_no};
        auto num = std::string_view(words[2]).substr(6);
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), d.after);
        if (ec != std::errc{} || p != num.data() + num.size()) throw std::invalid_argument("bad after= count");
        cfg.injections.push_back(std::move(d));
      } else {
        throw std::invalid_argument("unknown directive '" + words[0] + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw PlanError(where + e.what());
    } catch (const SchemaMismatch& e) {
      throw PlanError(where + e.what());
    }
  }
  return cfg;
}

inline PlanConfig load_plan_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot open plan file " + path.string());
  return parse_plan_config(in, path.parent_path());
}

struct PlanBuildOptions {
  bool feedback = true;               // false drops injections and sets every response to ignore
  std::optional<std::uint64_t> seed;  // overrides generator seeds when set
};

namespace detail {

class ParamReader {
 public:
  ParamReader(const NodeDecl& n) : n_(n) {}

  std::optional<std::string> opt(const std::string& key) {
    used_.insert(key);
    auto it = n_.params.find(key);
    if (it == n_.params.end()) return std::nullopt;
    return it->second;
  }

  std::string req(const std::string& key) {
    auto v = opt(key);
    if (!v) throw std::invalid_argument(n_.kind + " needs " + key + "=");
    return *v;
  }

  template <typename T>
  T num(const std::string& key, T fallback) {
    auto v = opt(key);
    if (!v) return fallback;
    return to_num<T>(key, *v);
  }

  template <typename T>
  static T to_num(const std::string& key, const std::string& v) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("bad number for " + key + ": '" + v + "'");
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    auto v = opt(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw std::invalid_argument("bad boolean for " + key + ": '" + *v + "'");
  }

  // Keys starting with prefix, e.g. default.speed.
  std::vector<std::pair<std::string, std::string>> prefixed(const std::string& prefix) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : n_.params)
      if (k.starts_with(prefix)) {
        used_.insert(k);
        out.emplace_back(k.substr(prefix.size()), v);
      }
    return out;
  }

  void check_unused() const {
    for (const auto& [k, v] : n_.params)
      if (!used_.contains(k)) throw std::invalid_argument("unknown parameter '" + k + "' for " + n_.kind);
  }

 private:
  const NodeDecl& n_;
  std::set<std::string> used_;
};

inline PortRef parse_port(const std::string& s) {
  auto dot = s.find('.');
  if (dot == std::string::npos) return {s, 0};
  return {s.substr(0, dot), ParamReader::to_num<std::size_t>("port", s.substr(dot + 1))};
}

inline std::size_t attr_index(const Schema& s, const std::string& name) { return s.index_of(name); }

}  // namespace detail

// Builds nodes in file order; every input must name a node declared earlier.
inline Plan build_plan(const PlanConfig& cfg, const PlanBuildOptions& opts = {}) {
  Plan plan;
  std::map<std::string, std::shared_ptr<Operator>> protos;

  for (const auto& n : cfg.nodes) {
    try {
      detail::ParamReader p(n);
      auto response = [&](FeedbackResponse fallback) {
        if (!opts.feedback) return FeedbackResponse::ignore;
        auto v = p.opt("response");
        return v ? parse_feedback_response(*v) : fallback;
      };
      auto port_schema = [&](const PortRef& r) {
        auto it = protos.find(r.node);
        if (it == protos.end()) throw std::invalid_argument("input '" + r.node + "' is not declared above");
        if (r.port >= it->second->num_outputs()) throw std::invalid_argument("node '" + r.node + "' has no output " + std::to_string(r.port));
        return it->second->output_schema(r.port);
      };
      auto named_schema = [&](const std::string& name) {
        auto it = cfg.schemas.find(name);
        if (it == cfg.schemas.end()) throw std::invalid_argument("unknown schema '" + name + "'");
        return it->second;
      };
      // Declared input schema if given (so mismatches surface at validation), else the producer's.
      auto input_schema = [&](const PortRef& r) {
        auto s = p.opt("schema");
        return s ? named_schema(*s) : port_schema(r);
      };

      std::vector<PortRef> inputs;
      OperatorFactory make;
      const auto& k = n.kind;

      if (k == "source") {
        auto interval = p.opt("punct_interval");
        std::optional<std::int64_t> pi;
        if (interval && *interval != "inf") pi = detail::ParamReader::to_num<std::int64_t>("punct_interval", *interval);
        if (auto file = p.opt("file")) {
          auto path = std::filesystem::path(*file);
          if (path.is_relative()) path = cfg.base_dir / path;
          auto schema = StreamFileReader(path.string()).schema();
          if (auto s = p.opt("schema"); s && !same_schema(named_schema(*s), schema))
            throw std::invalid_argument("file " + path.string() + " does not carry schema " + *s);
          make = [schema, path, pi] { return std::make_unique<SourceOp>(schema, file_generator(path.string()), pi); };
        } else {
          auto gen = p.req("generator");
          if (gen != "sensor") throw std::invalid_argument("unknown generator '" + gen + "'");
          SensorStreamConfig sc;
          sc.segments = p.num("segments", sc.segments);
          sc.detectors_per_segment = p.num("detectors", sc.detectors_per_segment);
          sc.resolution_seconds = p.num("resolution", sc.resolution_seconds);
          sc.hours = p.num("hours", sc.hours);
          sc.null_rate = p.num("null_rate", sc.null_rate);
          sc.invalid_rate = p.num("invalid_rate", sc.invalid_rate);
          sc.alternating = p.flag("alternating", sc.alternating);
          sc.seed = opts.seed.value_or(p.num<std::uint64_t>("seed", sc.seed));
          if (auto m = p.opt("tuples")) sc.max_tuples = detail::ParamReader::to_num<std::uint64_t>("tuples", *m);
          sc.validate();
          make = [sc, pi] { return std::make_unique<SourceOp>(sensor_schema(), sensor_generator(sc), pi); };
        }
      } else if (k == "select") {
        inputs = {detail::parse_port(p.req("input"))};
        auto schema = input_schema(inputs[0]);
        std::optional<PunctuationPattern> where;
        if (auto w = p.opt("where")) where = parse_pattern(*w, schema);
        auto r = response(FeedbackResponse::propagate);
        make = [schema, where, r] { return std::make_unique<SelectOp>(schema, where, r); };
      } else if (k == "split") {
        inputs = {detail::parse_port(p.req("input"))};
        auto schema = input_schema(inputs[0]);
        make = [schema] { return std::make_unique<SplitOp>(schema); };
      } else if (k == "union" || k == "pace") {
        for (const auto& s : detail::split_list(p.req("inputs"))) inputs.push_back(detail::parse_port(s));
        if (inputs.empty()) throw std::invalid_argument(k + " needs at least one input");
        auto schema = input_schema(inputs[0]);
        auto count = inputs.size();
        if (k == "union") {
          auto r = response(FeedbackResponse::propagate);
          make = [schema, count, r] { return std::make_unique<UnionOp>(schema, count, r); };
        } else {
          PaceConfig pc;
          pc.tolerance = p.num("tolerance", pc.tolerance);
          pc.enforce = opts.feedback && p.flag("enforce", true);
          if (auto s = p.opt("step")) pc.step = detail::ParamReader::to_num<std::int64_t>("step", *s);
          if (auto s = p.opt("margin")) pc.margin = detail::ParamReader::to_num<std::int64_t>("margin", *s);
          pc.response = response(FeedbackResponse::guard_output);
          make = [schema, count, pc] { return std::make_unique<PaceOp>(schema, count, pc); };
        }
      } else if (k == "impute") {
        inputs = {detail::parse_port(p.req("input"))};
        auto schema = input_schema(inputs[0]);
        ImputeConfig ic;
        ic.cost = p.num("cost", ic.cost);
        if (auto key = p.opt("key")) ic.key_attr = detail::attr_index(*schema, *key);
        auto defaults = p.prefixed("default.");
        if (!defaults.empty()) {
          for (const auto& a : schema->attributes()) {
            switch (a.type) {
              case AttrType::integer: ic.defaults.emplace_back(std::int64_t{0}); break;
              case AttrType::real: ic.defaults.emplace_back(0.0); break;
              case AttrType::text: ic.defaults.emplace_back(std::string{}); break;
              case AttrType::timestamp: ic.defaults.emplace_back(Timestamp{0}); break;
            }
          }
          for (const auto& [name, v] : defaults) {
            auto i = detail::attr_index(*schema, name);
            ic.defaults[i] = parse_value(v, (*schema)[i].type);
          }
        }
        ic.response = response(FeedbackResponse::guard_input);
        make = [schema, ic] { return std::make_unique<ImputeOp>(schema, ic); };
      } else if (k == "count" || k == "sum" || k == "average" || k == "max") {
        inputs = {detail::parse_port(p.req("input"))};
        auto schema = input_schema(inputs[0]);
        AggregateConfig ac;
        ac.output_name = p.opt("output").value_or("");
        ac.window = p.num("window", ac.window);
        for (const auto& g : detail::split_list(p.opt("group").value_or(""))) ac.group_attrs.push_back(detail::attr_index(*schema, g));
        if (auto v = p.opt("value")) ac.value_attr = detail::attr_index(*schema, *v);
        ac.window_attr = p.opt("window_attr").value_or(ac.window_attr);
        ac.result_attr = p.opt("result").value_or("");
        ac.non_negative = p.flag("non_negative", false);
        ac.update_cost = p.num("update_cost", ac.update_cost);
        ac.result_cost = p.num("result_cost", ac.result_cost);
        ac.response = response(FeedbackResponse::propagate);
        auto mk = [&]<AggregateKind K>() -> OperatorFactory {
          WindowAggregateOp<K> check(schema, ac);  // surface config errors at build time
          return [schema, ac] { return std::make_unique<WindowAggregateOp<K>>(schema, ac); };
        };
        if (k == "count") make = mk.template operator()<AggregateKind::count>();
        else if (k == "sum") make = mk.template operator()<AggregateKind::sum>();
        else if (k == "average") make = mk.template operator()<AggregateKind::average>();
        else make = mk.template operator()<AggregateKind::max>();
      } else if (k == "join") {
        inputs = {detail::parse_port(p.req("left")), detail::parse_port(p.req("right"))};
        auto left = port_schema(inputs[0]);
        auto right = port_schema(inputs[1]);
        if (auto s = p.opt("left_schema")) left = named_schema(*s);
        if (auto s = p.opt("right_schema")) right = named_schema(*s);
        JoinConfig jc;
        jc.output_name = p.opt("output").value_or("");
        jc.window = p.num("window", jc.window);
        for (const auto& pair : detail::split_list(p.req("on"))) {
          auto c = pair.find(':');
          auto l = pair.substr(0, c);
          auto r = c == std::string::npos ? l : pair.substr(c + 1);
          jc.on.emplace_back(detail::attr_index(*left, l), detail::attr_index(*right, r));
        }
        jc.response = response(FeedbackResponse::propagate);
        JoinOp check(left, right, jc);
        make = [left, right, jc] { return std::make_unique<JoinOp>(left, right, jc); };
      } else if (k == "sink") {
        inputs = {detail::parse_port(p.req("input"))};
        auto schema = input_schema(inputs[0]);
        std::vector<SinkOp::Injection> inj;
        if (opts.feedback) {
          for (const auto& d : cfg.injections)
            if (d.sink == n.id) inj.push_back({d.after, FeedbackPunctuation::assumed(parse_pattern(d.pattern, schema))});
        }
        make = [schema, inj] { return std::make_unique<SinkOp>(schema, inj); };
      } else {
        throw std::invalid_argument("unknown operator kind '" + k + "'");
      }
      p.check_unused();
      protos[n.id] = std::shared_ptr<Operator>(make());
      plan.add(n.id, std::move(make), std::move(inputs));
    } catch (const std::invalid_argument& e) {
      throw PlanError("line " + std::to_string(n.line) + " (node " + n.id + "): " + e.what());
    } catch (const SchemaMismatch& e) {
      throw PlanError("line " + std::to_string(n.line) + " (node " + n.id + "): " + e.what());
    } catch (const PlanError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw PlanError("line " + std::to_string(n.line) + " (node " + n.id + "): " + e.what());
    }
  }

  for (const auto& d : cfg.injections) {
    auto it = protos.find(d.sink);
    if (it == protos.end() || it->second->kind() != "sink")
      throw PlanError("line " + std::to_string(d.line) + ": inject target '" + d.sink + "' is not a sink");
  }
  return plan;
}

}  // namespace fbp
