#include <gtest/gtest.h>

#include <algorithm>

#include "ovnet/metrics/metrics.hpp"

using namespace ovnet;
using namespace ovnet::metrics;

namespace {

const bench::Benchmark& bench0() {
  static const auto b = bench::make_benchmark(0);
  return b;
}

adv::AttackBudget budget() {
  adv::AttackBudget a{30, 0.1, 0.0, 0.05, 32, 1.0, 0.5, 2.0, 0};
  a.delta = bench0().clean_error();
  return a;
}

}  // namespace

TEST(Capacity, MonotoneInDelta) {
  const auto& b = bench0();
  int last = -1;
  for (double d : {0.0, b.clean_error(), 0.2, 1.0}) {
    const auto c = measure_capacity(wm::SchemeId::ParamEmbed, b, d, 8, 11);
    EXPECT_GE(c.count, last) << d;
    EXPECT_EQ(c.accuracy_trace.size(), static_cast<std::size_t>(c.count + (c.hit_limit ? 0 : 1)));
    last = c.count;
  }
}

TEST(Capacity, LimitIsReportedAsLowerBound) {
  const auto c = measure_capacity(wm::SchemeId::ParamEmbed, bench0(), 1.0, 5, 11);
  EXPECT_TRUE(c.hit_limit);
  EXPECT_EQ(c.count, 5);
  EXPECT_TRUE(c.stop_reason.empty());
  EXPECT_THROW(measure_capacity(wm::SchemeId::ParamEmbed, bench0(), -0.1, 5, 11), InvalidParameter);
}

TEST(Independence, TwoParamWatermarksAreIndependent) {
  const auto r = measure_independence(wm::SchemeId::ParamEmbed, bench0(), 2, 4, budget(), 11);
  ASSERT_EQ(r.spoil_failures, 0);
  EXPECT_DOUBLE_EQ(r.r_over_q_minus_1, 1.0);
  EXPECT_DOUBLE_EQ(r.r_over_q, 0.5);
}

TEST(Independence, EverySpoiledIndexLeavesTheOthers) {
  const int q = 6;
  const auto r = measure_independence(wm::SchemeId::ParamEmbed, bench0(), q, 12, budget(), 11);
  ASSERT_EQ(r.spoiled.size(), 12u);
  for (std::size_t t = 0; t < r.spoiled.size(); ++t) {
    EXPECT_GE(r.spoiled[t], 0);
    EXPECT_LT(r.spoiled[t], q);
    EXPECT_EQ(r.survivors[t], q - 1) << "trial " << t << " spoiled " << r.spoiled[t];
  }
}

TEST(Independence, TriggerQBeyondCapacityThrows) {
  try {
    measure_independence(wm::SchemeId::TriggerBackdoor, bench0(), 12, 1, budget(), 11);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("smaller Q"), std::string::npos);
  }
  EXPECT_THROW(measure_independence(wm::SchemeId::ParamEmbed, bench0(), 1, 1, budget(), 11), InvalidParameter);
}

TEST(EmbedTime, NeedsThreeRepeats) {
  EXPECT_THROW(measure_embed_time(wm::SchemeId::ParamEmbed, bench0(), 2, 1), InvalidParameter);
  EXPECT_GT(measure_embed_time(wm::SchemeId::ParamEmbed, bench0(), 3, 1), 0.0);
}

// Frozen from ten seeds of ParamEmbed against plain averaging: the
// watermarked decline never exceeded 6 points and never trailed the
// control by more than 4.5 points.
TEST(FlDecline, WithinFrozenBound) {
  for (std::uint64_t s : {0u, 1u, 2u}) {
    const auto b = bench::make_benchmark(s);
    fed::FlConfig c;
    c.seed = s;
    const auto ctrl = measure_fl_decline(b, c, std::nullopt);
    const auto wmr = measure_fl_decline(b, c, wm::SchemeId::ParamEmbed);
    ASSERT_TRUE(ctrl.decline && wmr.decline);
    EXPECT_LE(*wmr.decline, 0.07) << s;
    EXPECT_LE(*wmr.decline - *ctrl.decline, 0.05) << s;
  }
}

TEST(Render, EmptyInputIsHeaderOnly) {
  const auto r = render_report({});
  EXPECT_EQ(r.csv, "scheme,metric,value,unit,seed,config_hash\n");
  EXPECT_EQ(r.timing_csv, r.csv);
}

TEST(Render, ReplayIsByteIdentical) {
  MetricsConfig cfg;
  cfg.cap_limit = 3;
  cfg.q_max = 2;
  cfg.independence_trials = 2;
  cfg.spoil_trials = 2;
  cfg.fl.rounds = 1;
  const auto a = render_report({run_metrics(wm::SchemeId::ParamEmbed, cfg, false)});
  const auto b = render_report({run_metrics(wm::SchemeId::ParamEmbed, cfg, false)});
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.json, b.json);
  EXPECT_NE(a.csv.find("ParamEmbed,B_capacity,>=3,"), std::string::npos);
  EXPECT_EQ(std::count(a.csv.begin(), a.csv.end(), '\n'), 11);
}
