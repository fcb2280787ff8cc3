#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

#include "fbp/operators/source.hpp"

namespace fbp {

struct SensorStreamConfig {
  std::int64_t segments = 9;
  std::int64_t detectors_per_segment = 40;
  std::int64_t resolution_seconds = 20;
  double hours = 18.0;
  double null_rate = 0.0;
  bool alternating = false;          // every other tuple has a null speed
  double invalid_rate = 0.03;        // readings the quality filter should reject
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> max_tuples;

  void validate() const {
    if (segments <= 0 || detectors_per_segment <= 0 || resolution_seconds <= 0 || hours <= 0)
      throw std::invalid_argument("sensor stream sizes must be positive");
    if (null_rate < 0 || null_rate > 1 || invalid_rate < 0 || invalid_rate > 1)
      throw std::invalid_argument("rates must lie in [0, 1]");
  }

  std::uint64_t ticks() const {
    return static_cast<std::uint64_t>(std::llround(hours * 3600.0 / static_cast<double>(resolution_seconds)));
  }

  std::uint64_t tuple_count() const {
    auto n = ticks() * static_cast<std::uint64_t>(segments * detectors_per_segment);
    return max_tuples ? std::min(n, *max_tuples) : n;
  }
};

inline SchemaPtr sensor_schema() {
  static const SchemaPtr s = make_schema("sensor", {{"detector_id", AttrType::integer},
                                                    {"segment", AttrType::integer},
                                                    {"ts", AttrType::timestamp},
                                                    {"speed", AttrType::real}});
  return s;
}

// Loop-detector readings in timestamp order: every tick, every detector of
// every segment reports once. Uses its own bit mixing so the stream is
// identical across standard library implementations.
class SensorGenerator {
 public:
  explicit SensorGenerator(SensorStreamConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    for (std::int64_t s = 0; s < cfg_.segments; ++s) base_.push_back(25.0 + 40.0 * uniform());
  }

  std::optional<StreamItem> next() {
    if (emitted_ >= cfg_.tuple_count()) return std::nullopt;
    const auto per_tick = static_cast<std::uint64_t>(cfg_.segments * cfg_.detectors_per_segment);
    const auto tick = emitted_ / per_tick;
    const auto slot = static_cast<std::int64_t>(emitted_ % per_tick);
    const auto segment = slot / cfg_.detectors_per_segment;
    const auto detector = slot;

    double speed = base_[segment] + 10.0 * (uniform() - 0.5);
    speed = std::round(std::max(speed, 1.0) * 10.0) / 10.0;
    Value sv = speed;
    double r = uniform();
    if (r < cfg_.invalid_rate) sv = -1.0;
    if (cfg_.alternating ? (emitted_ % 2 == 1) : uniform() < cfg_.null_rate) sv = Null{};

    ++emitted_;
    return StreamItem(Tuple(sensor_schema(), {Value{detector}, Value{segment},
                                              Value{Timestamp{static_cast<std::int64_t>(tick) * cfg_.resolution_seconds}},
                                              std::move(sv)}));
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  SensorStreamConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<double> base_;
  std::uint64_t emitted_ = 0;
};

inline ItemGenerator sensor_generator(const SensorStreamConfig& cfg) {
  auto gen = std::make_shared<SensorGenerator>(cfg);
  return [gen] { return gen->next(); };
}

}  // namespace fbp
