#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fbp/pattern.hpp"

namespace fbp {

// Asserts that no later tuple in the stream matches the pattern.
struct EmbeddedPunctuation {
  PunctuationPattern pattern;
  friend bool operator==(const EmbeddedPunctuation&, const EmbeddedPunctuation&) = default;
};

enum class Intent { assumed, desired, demanded };

inline char intent_symbol(Intent i) {
  switch (i) {
    case Intent::assumed: return '-';
    case Intent::desired: return '?';
    case Intent::demanded: return '!';
  }
  return ' ';
}

// Travels upstream on the control channel. Only the assumed intent is acted upon.
struct FeedbackPunctuation {
  Intent intent = Intent::assumed;
  PunctuationPattern pattern;

  static FeedbackPunctuation assumed(PunctuationPattern p) { return {Intent::assumed, std::move(p)}; }
  friend bool operator==(const FeedbackPunctuation&, const FeedbackPunctuation&) = default;
};

inline std::string format_feedback(const FeedbackPunctuation& f) {
  return intent_symbol(f.intent) + format_pattern(f.pattern);
}

class StreamItem {
 public:
  StreamItem(Tuple t) : item_(std::move(t)) {}
  StreamItem(EmbeddedPunctuation p) : item_(std::move(p)) {}

  bool is_tuple() const { return std::holds_alternative<Tuple>(item_); }
  bool is_punctuation() const { return !is_tuple(); }
  const Tuple& tuple() const { return std::get<Tuple>(item_); }
  Tuple& tuple() { return std::get<Tuple>(item_); }
  const EmbeddedPunctuation& punctuation() const { return std::get<EmbeddedPunctuation>(item_); }

  friend bool operator==(const StreamItem&, const StreamItem&) = default;

 private:
  std::variant<Tuple, EmbeddedPunctuation> item_;
};

// A fixed-capacity batch; transferred when full or when it holds a punctuation.
class Page {
 public:
  explicit Page(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("page capacity must be positive");
    items_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  bool full() const { return items_.size() >= capacity_; }
  bool has_punctuation() const { return punctuations_ > 0; }
  const std::vector<StreamItem>& items() const { return items_; }

  std::vector<StreamItem> take_items() {
    punctuations_ = 0;
    return std::move(items_);
  }

  void push(StreamItem item) {
    if (full()) throw std::logic_error("push onto a full page");
    if (item.is_punctuation()) ++punctuations_;
    items_.push_back(std::move(item));
  }

  // Whether the transfer rule allows this page to leave its producer.
  bool ready() const { return full() || has_punctuation(); }

 private:
  std::size_t capacity_;
  std::size_t punctuations_ = 0;
  std::vector<StreamItem> items_;
};

enum class ControlKind { feedback, end_of_stream, shutdown };
enum class Direction { upstream, downstream };

struct ControlMessage {
  ControlKind kind;
  Direction direction;
  std::optional<FeedbackPunctuation> feedback;

  static ControlMessage make_feedback(FeedbackPunctuation f) {
    return {ControlKind::feedback, Direction::upstream, std::move(f)};
  }
  static ControlMessage end_of_stream() { return {ControlKind::end_of_stream, Direction::downstream, std::nullopt}; }
  static ControlMessage shutdown(Direction d) { return {ControlKind::shutdown, d, std::nullopt}; }
};

}  // namespace fbp
