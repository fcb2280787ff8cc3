#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "fbp/pattern.hpp"

namespace fbp {

// Retained feedback patterns over one schema. A guard is dropped once an
// embedded punctuation covers it: no future tuple can match it any more.
class GuardList {
 public:
  // Returns false when an existing guard, or punctuation already seen,
  // covers p.
  bool add(PunctuationPattern p) {
    if (horizon_ && subsumes(*horizon_, p)) return false;
    for (const auto& g : guards_)
      if (subsumes(g, p)) return false;
    std::erase_if(guards_, [&](const PunctuationPattern& g) { return subsumes(p, g); });
    guards_.push_back(std::move(p));
    return true;
  }

  bool blocks(const std::vector<Value>& values) const {
    for (const auto& g : guards_)
      if (matches_values(values, g)) return true;
    return false;
  }

  bool blocks(const Tuple& t) const { return blocks(t.values); }

  std::size_t expire(const PunctuationPattern& punctuation) {
    if (!horizon_ || subsumes(punctuation, *horizon_)) horizon_ = punctuation;
    auto before = guards_.size();
    std::erase_if(guards_, [&](const PunctuationPattern& g) { return subsumes(punctuation, g); });
    return before - guards_.size();
  }

  std::size_t size() const { return guards_.size(); }
  bool empty() const { return guards_.empty(); }
  const std::vector<PunctuationPattern>& patterns() const { return guards_; }

 private:
  std::vector<PunctuationPattern> guards_;
  std::optional<PunctuationPattern> horizon_;  // widest punctuation seen so far
};

}  // namespace fbp
