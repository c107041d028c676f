#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "dscaf/errors.hpp"
#include "dscaf/simulator.hpp"
#include "test_support.hpp"

namespace dscaf {
namespace {

using testing::fixture_item;

TEST(Catalog, DeterministicPerSeed) {
  SimConfig sim;
  sim.n_items = 300;
  sim.rng_seed = 9;
  const auto a = generate_catalog(sim);
  const auto b = generate_catalog(sim);
  EXPECT_EQ(catalog_hash(a), catalog_hash(b));
  sim.rng_seed = 10;
  EXPECT_NE(catalog_hash(a), catalog_hash(generate_catalog(sim)));
}

TEST(Catalog, EmptyIsAllowed) {
  SimConfig sim;
  sim.n_items = 0;
  EXPECT_TRUE(generate_catalog(sim).empty());
}

TEST(Catalog, ItemsAreValidAndSorted) {
  SimConfig sim;
  sim.n_items = 2000;
  const auto items = generate_catalog(sim);
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_NO_THROW(validate(items[i]));
    if (i > 0) EXPECT_LT(items[i - 1].item_id, items[i].item_id);
  }
}

TEST(Catalog, LogPriceMeanWithinThreeSigma) {
  SimConfig sim;
  sim.n_items = 1000;
  sim.rng_seed = 3;
  const auto items = generate_catalog(sim);
  double sum = 0;
  for (const auto& it : items) sum += std::log(static_cast<double>(it.price_yen));
  const double mean = sum / items.size();
  EXPECT_NEAR(mean, sim.price_log_mean, 3.0 * sim.price_log_sd / std::sqrt(1000.0));
}

TEST(Catalog, RejectsBadConfig) {
  SimConfig sim;
  sim.price_log_sd = -1;
  EXPECT_THROW(generate_catalog(sim), InputError);
}

// Goldens: tests/oracles/encoding_truth.py
TEST(GroundTruth, PropensityGoldens) {
  const GroundTruth gt{SimConfig{}};
  const auto it = fixture_item();
  EXPECT_NEAR(gt.true_propensity(it, make_coupon(10, 10, 2000), 1, 2.0), 0.67689626599873831, 1e-12);
  EXPECT_NEAR(gt.true_propensity(it, CouponConfig::none(), 1, 2.0), 0.4749072493656219, 1e-12);
  EXPECT_NEAR(gt.true_propensity(it, make_coupon(15, 72, 3000), 2, 0.0), 0.58893019145066228, 1e-12);
  EXPECT_NEAR(gt.true_propensity(it, make_coupon(5, 3, 1000), 1, 29.0), 0.54302944955974741, 1e-12);
  EXPECT_NEAR(gt.true_propensity(it, make_coupon(5, 3, 1000), 1, 60.0), 0.50638580416435341, 1e-12);
  EXPECT_NEAR(gt.purchase_rate(it.price_yen), 0.36260026074421919, 1e-12);
  EXPECT_NEAR(gt.window_probability(it, make_coupon(10, 10, 2000)), 0.97337760785731164, 1e-12);
  EXPECT_EQ(gt.window_probability(it, CouponConfig::none()), 1.0);
  EXPECT_NEAR(gt.realized_propensity(it, make_coupon(10, 10, 2000), 1, 2.0),
              0.67689626599873831 * 0.97337760785731164, 1e-12);
}

TEST(GroundTruth, MonotoneInDiscountAndDelay) {
  const GroundTruth gt{SimConfig{}};
  const auto it = fixture_item();
  double prev = gt.true_propensity(it, CouponConfig::none(), 1, 5.0);
  for (int pct = 5; pct < 60; pct += 5) {
    const double p = gt.true_propensity(it, make_coupon(pct, 10, 1000), 1, 5.0);
    EXPECT_GT(p, prev);
    prev = p;
  }
  prev = 1.0;
  for (double h = 0; h <= 60; h += 1.5) {
    const double p = gt.true_propensity(it, make_coupon(10, 10, 1000), 1, h);
    EXPECT_LE(p, prev);
    prev = p;
  }
  EXPECT_EQ(gt.delay_multiplier(10.0), 1.0);
  EXPECT_EQ(gt.delay_multiplier(48.0), 0.3);
  EXPECT_EQ(gt.delay_multiplier(100.0), 0.3);
}

TEST(GroundTruth, NoCouponIgnoresDelay) {
  const GroundTruth gt{SimConfig{}};
  const auto it = fixture_item();
  EXPECT_EQ(gt.true_propensity(it, CouponConfig::none(), 1, 0.0),
            gt.true_propensity(it, CouponConfig::none(), 1, 40.0));
}

TEST(SimulateRound, SaleFollowsUniforms) {
  const GroundTruth gt{SimConfig{}};
  const auto it = fixture_item();
  const auto coupon = make_coupon(10, 10, 2000);
  const auto sold = simulate_round(gt, it, coupon, 1, 2.0, 0.5, 0.5);
  ASSERT_TRUE(sold.sold);
  EXPECT_EQ(*sold.coupon_cost_yen, 480);
  EXPECT_NEAR(*sold.purchase_delay_h, -std::log(0.5) / 0.36260026074421919, 1e-6);
  EXPECT_FALSE(simulate_round(gt, it, coupon, 1, 2.0, 0.7, 0.5).sold);
  // A purchase time past the 10 h window is recorded as unsold.
  EXPECT_FALSE(simulate_round(gt, it, coupon, 1, 2.0, 0.5, 0.99).sold);
  EXPECT_TRUE(simulate_round(gt, it, CouponConfig::none(), 1, 2.0, 0.4, 0.99).sold);
}

TEST(Rct, PartitionAndSurvivors) {
  const auto d = testing::small_rct(3000, 21);
  ASSERT_EQ(d.rct.round1_log.size(), d.items.size());
  std::size_t unsold = 0;
  for (const auto& r : d.rct.round1_log) {
    EXPECT_EQ(r.round, 1);
    EXPECT_NO_THROW(validate(r));
    EXPECT_TRUE(testing::round1_set().index_of(r.coupon).has_value());
    EXPECT_GE(r.attach_delay_h, 0.0);
    EXPECT_LE(r.attach_delay_h, 36.0);
    if (!r.sold) ++unsold;
  }
  EXPECT_EQ(d.rct.survivors.size(), unsold);
  ASSERT_EQ(d.rct.round2_log.size(), unsold);
  for (std::size_t i = 0; i < unsold; ++i) {
    EXPECT_EQ(d.rct.round2_log[i].item_id, d.rct.survivors[i]);
    EXPECT_EQ(d.rct.round2_log[i].round, 2);
    EXPECT_EQ(d.rct.round2_log[i].attach_delay_h, 0.0);
  }
}

TEST(Rct, Deterministic) {
  const auto a = testing::small_rct(1000, 4);
  const auto b = testing::small_rct(1000, 4);
  ASSERT_EQ(a.rct.round2_log.size(), b.rct.round2_log.size());
  for (std::size_t i = 0; i < a.rct.round1_log.size(); ++i) {
    EXPECT_EQ(a.rct.round1_log[i].coupon, b.rct.round1_log[i].coupon);
    EXPECT_EQ(a.rct.round1_log[i].sold, b.rct.round1_log[i].sold);
  }
}

TEST(Rct, UniformArmFrequenciesPassChiSquare) {
  const auto d = testing::small_rct(100000, 77);
  std::map<std::size_t, double> counts;
  for (const auto& r : d.rct.round1_log) counts[*testing::round1_set().index_of(r.coupon)] += 1;
  ASSERT_EQ(counts.size(), 5u);
  const double expected = 100000.0 / 5;
  double chi2 = 0;
  for (const auto& [key, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 18.4668);  // chi-square 0.999 quantile, 4 dof
}

TEST(Rct, WeightedAssignmentHonoured) {
  RctAssignment a;
  a.round1 = {1, 0, 0, 0, 0};
  a.round2 = {0, 0, 0, 1};
  const auto d = testing::small_rct(500, 2, a);
  for (const auto& r : d.rct.round1_log) EXPECT_TRUE(r.coupon.is_none());
  for (const auto& r : d.rct.round2_log) EXPECT_EQ(r.coupon, make_coupon(15, 72, 3000));
  a.round1 = {1, 1};
  EXPECT_THROW(testing::small_rct(10, 2, a), InputError);
}

TEST(Rct, HoldoutSaleRateMatchesTruth) {
  const auto d = testing::small_rct(60000, 8);
  const GroundTruth gt{SimConfig{}};
  double expected = 0, sold = 0, n = 0;
  for (const auto& r : d.rct.round1_log) {
    if (!r.coupon.is_none()) continue;
    expected += gt.true_propensity(d.catalog.at(r.item_id), r.coupon, 1, r.attach_delay_h);
    sold += r.sold ? 1 : 0;
    n += 1;
  }
  const double p = expected / n;
  EXPECT_NEAR(sold / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

PolicyChoice fixed(const CouponConfig& r1, const CouponConfig& r2) {
  return {r1, 2.0, r2};
}

TEST(Rollout, NoCouponCostsNothing) {
  SimConfig sim;
  sim.n_items = 2000;
  const auto items = generate_catalog(sim);
  const auto res = rollout_policy(GroundTruth(sim), items, [](const ItemRecord&) {
    return fixed(CouponConfig::none(), CouponConfig::none());
  }, 5);
  EXPECT_EQ(res.totals.coupon_cost, 0);
  EXPECT_GT(res.totals.sales, 0u);
  EXPECT_EQ(res.totals.n_items, items.size());
}

TEST(Rollout, DeterministicAndBounded) {
  SimConfig sim;
  sim.n_items = 2000;
  const auto items = generate_catalog(sim);
  const Policy policy = [](const ItemRecord&) {
    return fixed(make_coupon(10, 10, 2000), make_coupon(5, 10, 1000));
  };
  const auto a = rollout_policy(GroundTruth(sim), items, policy, 5);
  const auto b = rollout_policy(GroundTruth(sim), items, policy, 5);
  EXPECT_EQ(a.totals.sales, b.totals.sales);
  EXPECT_EQ(a.totals.coupon_cost, b.totals.coupon_cost);
  EXPECT_EQ(a.totals.gmv, b.totals.gmv);
  for (const auto& r : a.records) {
    if (r.sold) EXPECT_LE(*r.purchase_delay_h, r.coupon.validity_hours);
  }
}

TEST(Rollout, DeepDiscountBeatsNone) {
  SimConfig sim;
  sim.n_items = 50000;
  const auto items = generate_catalog(sim);
  const GroundTruth gt(sim);
  const auto none = rollout_policy(gt, items, [](const ItemRecord&) {
    return fixed(CouponConfig::none(), CouponConfig::none());
  }, 6);
  const auto deep = rollout_policy(gt, items, [](const ItemRecord&) {
    return fixed(make_coupon(15, 72, 3000), make_coupon(15, 72, 3000));
  }, 6);
  EXPECT_GT(deep.totals.sales, none.totals.sales);
}

}  // namespace
}  // namespace dscaf
