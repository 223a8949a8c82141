#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lis/metrics.hpp"

namespace lis::metrics {
namespace {

TEST(Metrics, PerfectClassifier) {
  const Report r = report({10, 0, 10, 0});
  for (Metric m : {r.pp, r.pn, r.rp, r.rn, r.pf1, r.nf1}) {
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(*m, 1.0);
  }
}

TEST(Metrics, SymmetricConfusionGivesHalf) {
  const Report r = report({5, 5, 5, 5});
  for (Metric m : {r.pp, r.pn, r.rp, r.rn, r.pf1, r.nf1}) EXPECT_DOUBLE_EQ(*m, 0.5);
}

TEST(Metrics, WorkedExample) {
  const Confusion c{8, 2, 6, 4};
  const Report r = report(c);
  EXPECT_DOUBLE_EQ(*r.pp, 0.8);
  EXPECT_DOUBLE_EQ(*r.rp, 8.0 / 12.0);
  EXPECT_NEAR(*r.pf1, 0.7273, 5e-5);
  EXPECT_DOUBLE_EQ(*r.pn, 0.6);
  EXPECT_DOUBLE_EQ(*r.rn, 0.75);
  EXPECT_DOUBLE_EQ(*r.nf1, 2 * 0.6 * 0.75 / 1.35);
}

TEST(Metrics, UndefinedInsteadOfZero) {
  // Never predicts anomalous: PP has a zero denominator.
  const Report none = report({0, 0, 7, 3});
  EXPECT_FALSE(none.pp.has_value());
  EXPECT_EQ(*none.rp, 0.0);
  EXPECT_FALSE(none.pf1.has_value());
  // Every prediction wrong: PP = RP = 0, so PF1 is undefined as well.
  const Report wrong = report({0, 4, 0, 6});
  EXPECT_EQ(*wrong.pp, 0.0);
  EXPECT_EQ(*wrong.rp, 0.0);
  EXPECT_FALSE(wrong.pf1.has_value());
  EXPECT_THROW(report(Confusion{}), std::invalid_argument);
}

TEST(Metrics, PropertiesOnRandomMatrices) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> n(0, 30);
  for (int trial = 0; trial < 2000; ++trial) {
    const Confusion c{std::uint64_t(n(rng)), std::uint64_t(n(rng)), std::uint64_t(n(rng)), std::uint64_t(n(rng))};
    if (c.total() == 0) continue;
    const Report r = report(c);
    for (Metric m : {r.pp, r.pn, r.rp, r.rn, r.pf1, r.nf1}) {
      if (m) {
        EXPECT_GE(*m, 0.0);
        EXPECT_LE(*m, 1.0);
      }
    }
    if (r.pf1) EXPECT_LE(*r.pf1, std::max(*r.pp, *r.rp) + 1e-15);
    const Report s = report(c.swapped());
    EXPECT_EQ(s.pp, r.pn);
    EXPECT_EQ(s.rp, r.rn);
    EXPECT_EQ(s.pf1, r.nf1);
    EXPECT_EQ(s.nf1, r.pf1);
    EXPECT_EQ(r.pf1 == 1.0, r.pp == 1.0 && r.rp == 1.0);
  }
}

TEST(Metrics, AddAndAccumulate) {
  Confusion c;
  c.add(true, true);
  c.add(true, false);
  c.add(false, false);
  c.add(false, true);
  c.add(false, true);
  EXPECT_EQ(c, (Confusion{1, 1, 1, 2}));
  c += Confusion{1, 0, 0, 0};
  EXPECT_EQ(c.tp, 2u);
}

TEST(Metrics, FormatAndParse) {
  EXPECT_EQ(format_metric(std::nullopt), "NA");
  EXPECT_EQ(format_metric(0.72727272), "0.727273");
  EXPECT_FALSE(parse_metric("NA").has_value());
  EXPECT_DOUBLE_EQ(*parse_metric("0.5"), 0.5);
  EXPECT_THROW(parse_metric("0.5x"), std::invalid_argument);
}

}  // namespace
}  // namespace lis::metrics
