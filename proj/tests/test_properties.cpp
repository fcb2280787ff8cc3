#include <gtest/gtest.h>

#include "workloads.hpp"

using namespace fbp;
using namespace fbp::testing;

// ---- containment over random plans ----

class RandomWorkloads : public ::testing::TestWithParam<WorkloadKind> {};

TEST_P(RandomWorkloads, GuardedOutputWithinBounds) {
  constexpr std::uint64_t kSeeds = 80;
  std::size_t effective = 0;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    auto r = run_workload(GetParam(), seed);
    ASSERT_TRUE(r.oracle.pass) << "seed " << seed << ": " << r.summary << "\n" << r.oracle.describe();
    EXPECT_EQ(r.page_violations, 0u) << r.summary;
    EXPECT_EQ(r.guards_left, 0u) << r.summary;
    effective += r.removed > 0;
  }
  // Most workloads should exercise feedback, not pass vacuously.
  EXPECT_GT(effective, kSeeds / 4);
}

TEST_P(RandomWorkloads, RepeatedRunsAreIdentical) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    auto a = run_workload(GetParam(), seed);
    auto b = run_workload(GetParam(), seed);
    EXPECT_EQ(a.trace, b.trace) << a.summary;
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, RandomWorkloads, ::testing::ValuesIn(kWorkloadKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

// ---- pace: fixed arrival order replay ----

namespace {

struct PaceArrival {
  std::size_t input;
  std::int64_t ts;
};

std::vector<PaceArrival> skewed_arrivals(std::mt19937_64& rng, std::int64_t tolerance) {
  std::vector<PaceArrival> seq;
  std::int64_t fast = 0, slow = 0;
  for (int i = 0; i < 400; ++i) {
    if (rng() % 3) {
      fast += static_cast<std::int64_t>(rng() % 4);
      seq.push_back({0, fast});
    } else {
      // The slow input falls behind and occasionally catches up.
      slow = rng() % 10 == 0 ? fast : slow + static_cast<std::int64_t>(rng() % 3);
      seq.push_back({1, std::max<std::int64_t>(0, slow - static_cast<std::int64_t>(rng() % (tolerance + 1)))});
    }
  }
  return seq;
}

std::vector<std::vector<Value>> run_pace(const SchemaPtr& s, const PaceConfig& cfg, const std::vector<PaceArrival>& seq,
                                         std::vector<std::pair<std::size_t, std::pair<std::size_t, PunctuationPattern>>>* sent) {
  OperatorDriver d(std::make_unique<PaceOp>(s, 2, cfg));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto before = d.sent().size();
    d.push(seq[i].input, tup(s, {I(0), T(seq[i].ts)}));
    if (sent)
      for (auto k = before; k < d.sent().size(); ++k) sent->push_back({i, {d.sent()[k].first, d.sent()[k].second.pattern}});
  }
  std::vector<std::vector<Value>> out;
  for (const auto& t : tuples_of(d.output())) out.push_back(t.values);
  return out;
}

}  // namespace

TEST(PaceReplay, SkippingWhatFeedbackCoversOnlyLosesCoveredTuples) {
  auto s = make_schema("p", {{"k", AttrType::integer}, {"ts", AttrType::timestamp}});
  std::size_t skipped = 0, skipped_at_full_margin = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    std::mt19937_64 rng(seed);
    PaceConfig cfg;
    cfg.tolerance = static_cast<std::int64_t>(5 + rng() % 20);
    cfg.margin = static_cast<std::int64_t>(rng() % (cfg.tolerance + 1));
    if (seed % 3 == 0) cfg.margin = cfg.tolerance;
    auto seq = skewed_arrivals(rng, 3 * cfg.tolerance);

    std::vector<std::pair<std::size_t, std::pair<std::size_t, PunctuationPattern>>> sent;
    auto full = run_pace(s, cfg, seq, &sent);

    // Replay the same order without the tuples upstream would have skipped.
    std::vector<PaceArrival> kept;
    std::vector<PunctuationPattern> covering;
    std::size_t next = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      bool skip = false;
      for (std::size_t k = 0; k < next; ++k)
        skip = skip || (sent[k].second.first == seq[i].input &&
                        matches_values({I(0), T(seq[i].ts)}, sent[k].second.second));
      if (!skip) kept.push_back(seq[i]);
      while (next < sent.size() && sent[next].first == i) covering.push_back(sent[next++].second.second);
    }
    auto replay = run_pace(s, cfg, kept, nullptr);
    skipped += seq.size() - kept.size();
    if (*cfg.margin == cfg.tolerance) skipped_at_full_margin += seq.size() - kept.size();

    std::map<std::vector<Value>, int> a, b;
    for (const auto& v : full) ++a[v];
    for (const auto& v : replay) ++b[v];
    for (const auto& [v, n] : b) EXPECT_LE(n, a[v]) << "seed " << seed;
    for (const auto& [v, n] : a) {
      if (b[v] >= n) continue;
      bool covered = false;
      for (const auto& p : covering) covered = covered || matches_values(v, p);
      EXPECT_TRUE(covered) << "seed " << seed << " lost ts " << format_value(v[1]);
    }
    // With the margin at D the skipped tuples were all late anyway.
    if (*cfg.margin == cfg.tolerance) {
      EXPECT_EQ(full, replay) << "seed " << seed;
    }
  }
  EXPECT_GT(skipped, 0u);
  EXPECT_GT(skipped_at_full_margin, 0u);
}

// ---- pattern algebra, random ----

namespace {

SchemaPtr abc() {
  return make_schema("abc", {{"a", AttrType::integer}, {"ts", AttrType::timestamp}, {"c", AttrType::real}});
}

AttributeConstraint random_constraint(std::mt19937_64& rng, AttrType type) {
  auto v = [&] {
    auto x = static_cast<std::int64_t>(rng() % 12) - 2;
    switch (type) {
      case AttrType::real: return Value{static_cast<double>(x) / 2.0};
      case AttrType::timestamp: return Value{Timestamp{x}};
      default: return Value{x};
    }
  };
  switch (rng() % 7) {
    case 0: return AttributeConstraint::wildcard();
    case 1: return AttributeConstraint::eq(v());
    case 2: return AttributeConstraint::lt(v());
    case 3: return AttributeConstraint::le(v());
    case 4: return AttributeConstraint::gt(v());
    case 5: return AttributeConstraint::ge(v());
    default: {
      auto lo = v(), hi = v();
      if (compare_values(lo, hi) >= 0) return AttributeConstraint::ge(lo);
      return AttributeConstraint::interval(lo, hi);
    }
  }
}

PunctuationPattern random_pattern(std::mt19937_64& rng, const SchemaPtr& s) {
  std::vector<AttributeConstraint> cs;
  for (std::size_t i = 0; i < s->size(); ++i) cs.push_back(random_constraint(rng, (*s)[i].type));
  return PunctuationPattern(s, std::move(cs));
}

std::vector<Value> random_point(std::mt19937_64& rng) {
  auto x = [&] { return static_cast<std::int64_t>(rng() % 14) - 3; };
  Value c = rng() % 8 == 0 ? Value{Null{}} : Value{static_cast<double>(x()) / 2.0};
  Value a = rng() % 8 == 0 ? Value{Null{}} : Value{x()};
  return {a, Value{Timestamp{x()}}, c};
}

}  // namespace

TEST(PatternAlgebra, ConjoinMatchesBoth) {
  std::mt19937_64 rng(11);
  auto s = abc();
  for (int i = 0; i < 3000; ++i) {
    auto p = random_pattern(rng, s), q = random_pattern(rng, s);
    auto pq = conjoin(p, q);
    for (int j = 0; j < 40; ++j) {
      auto v = random_point(rng);
      bool both = matches_values(v, p) && matches_values(v, q);
      EXPECT_EQ(pq && matches_values(v, *pq), both) << format_pattern(p) << " & " << format_pattern(q);
    }
  }
}

TEST(PatternAlgebra, SubsumesImpliesMatchImplication) {
  std::mt19937_64 rng(12);
  auto s = abc();
  for (int i = 0; i < 5000; ++i) {
    auto p = random_pattern(rng, s), q = random_pattern(rng, s);
    if (!subsumes(p, q)) continue;
    for (int j = 0; j < 40; ++j) {
      auto v = random_point(rng);
      if (matches_values(v, q)) {
        EXPECT_TRUE(matches_values(v, p)) << format_pattern(p) << " over " << format_pattern(q);
      }
    }
  }
}

TEST(PatternAlgebra, SubsumptionIsReflexiveAndTransitive) {
  std::mt19937_64 rng(13);
  auto s = abc();
  for (int i = 0; i < 4000; ++i) {
    auto p = random_pattern(rng, s), q = random_pattern(rng, s), r = random_pattern(rng, s);
    EXPECT_TRUE(subsumes(p, p));
    if (subsumes(p, q) && subsumes(q, r)) {
      EXPECT_TRUE(subsumes(p, r));
    }
    if (auto pq = conjoin(p, q)) {
      EXPECT_TRUE(subsumes(p, *pq));
      EXPECT_TRUE(subsumes(q, *pq));
    }
  }
}

TEST(PatternAlgebra, TextRoundTrip) {
  std::mt19937_64 rng(14);
  auto s = abc();
  for (int i = 0; i < 2000; ++i) {
    auto p = random_pattern(rng, s);
    EXPECT_EQ(parse_pattern(format_pattern(p), s), p) << format_pattern(p);
  }
}

// ---- guard lists ----

TEST(GuardListProperty, BlocksExactlyWhatActiveGuardsMatch) {
  std::mt19937_64 rng(15);
  auto s = abc();
  for (int round = 0; round < 200; ++round) {
    GuardList g;
    std::vector<PunctuationPattern> added;
    std::int64_t bound = -10;
    for (int step = 0; step < 12; ++step) {
      if (rng() % 3) {
        auto p = random_pattern(rng, s);
        g.add(p);
        added.push_back(p);
      } else {
        bound += static_cast<std::int64_t>(rng() % 4);
        g.expire(progress_punctuation(s, bound));
      }
      for (int j = 0; j < 20; ++j) {
        auto v = random_point(rng);
        bool blocked = g.blocks(v);
        // Every block is justified by something added; nothing past the bound is lost.
        bool any_added = false;
        for (const auto& p : added) any_added = any_added || matches_values(v, p);
        if (blocked) {
          EXPECT_TRUE(any_added);
        }
        if (any_added && std::get<Timestamp>(v[1]).seconds > bound) {
          bool live = false;
          for (const auto& p : added)
            live = live || (matches_values(v, p) && !subsumes(progress_punctuation(s, bound), p));
          if (live) {
            EXPECT_TRUE(blocked);
          }
        }
      }
    }
  }
}
