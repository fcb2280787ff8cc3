#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "fbp/guards.hpp"
#include "fbp/runtime.hpp"

namespace fbp {

inline constexpr std::int64_t kEndOfTime = std::numeric_limits<std::int64_t>::max();

// Largest T such that the punctuation covers every tuple with timestamp <= T.
// nullopt when it constrains anything besides an upper timestamp bound.
inline std::optional<std::int64_t> progress_bound(const PunctuationPattern& p) {
  using K = AttributeConstraint::Kind;
  const auto ts = p.schema()->timestamp_attr();
  for (std::size_t i = 0; i < p.size(); ++i)
    if (i != ts && !p[i].is_wildcard()) return std::nullopt;
  const auto& c = p[ts];
  switch (c.kind) {
    case K::any: return kEndOfTime;
    case K::le: return std::get<Timestamp>(c.lo).seconds;
    case K::lt: return std::get<Timestamp>(c.lo).seconds - 1;
    default: return std::nullopt;
  }
}

// [ts <= bound, *...]; the all-wildcard pattern when bound is kEndOfTime.
inline PunctuationPattern progress_punctuation(const SchemaPtr& schema, std::int64_t bound) {
  auto p = PunctuationPattern::wildcard(schema);
  if (bound == kEndOfTime) return p;
  return p.with(schema->timestamp_attr(), AttributeConstraint::le(Timestamp{bound}));
}

inline std::int64_t window_of(std::int64_t ts, std::int64_t range) { return detail::floor_div(ts, range); }

// Last window fully covered by a progress bound.
inline std::int64_t last_closed_window(std::int64_t bound, std::int64_t range) {
  if (bound == kEndOfTime) return std::numeric_limits<std::int64_t>::max();
  return detail::floor_div(bound + 1, range) - 1;
}

}  // namespace fbp
