#include <gtest/gtest.h>

#include <cmath>

#include "dscaf/errors.hpp"
#include "dscaf/uplift.hpp"
#include "test_support.hpp"

namespace dscaf {
namespace {

using testing::fixture_item;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Logistic model on raw features: only the discount coordinate and, for the
// second round, the trailing mean propensity carry weight.
Model linear_model(const std::string& schema, std::size_t width, double intercept,
                   double discount_coef, double mean_p1_coef = 0.0) {
  Model m = zero_model(schema, width);
  m.mean.assign(width, 0.0);
  m.scale.assign(width, 1.0);
  m.intercept = intercept;
  m.coefficients[kDiscountCoordinate] = discount_coef;
  if (width == kRound2Width) m.coefficients[kRound1Width] = mean_p1_coef;
  return m;
}

PredictorPair hand_pair() {
  PredictorPair pair;
  pair.first = linear_model(kRound1Schema, kRound1Width, -1.0, 0.05);
  pair.second = linear_model(kRound2Schema, kRound2Width, -2.0, 0.04, 1.0);
  pair.round1_set = testing::round1_set();
  pair.round2_set = testing::round2_set();
  return pair;
}

LearnerConfig quick_config() {
  LearnerConfig c;
  c.l2 = 1e-4;
  return c;
}

TEST(IpwWeight, Examples) {
  EXPECT_DOUBLE_EQ(ipw_weight(0.0, 1e-3), 1.0);
  EXPECT_DOUBLE_EQ(ipw_weight(0.2, 1e-3), 1.25);
  EXPECT_DOUBLE_EQ(ipw_weight(0.9999, 1e-3), 1000.0);
  EXPECT_DOUBLE_EQ(ipw_weight(1.0, 1e-3), 1000.0);
  EXPECT_THROW(ipw_weight(0.5, 0.0), InputError);
  EXPECT_THROW(ipw_weight(0.5, 1.5), InputError);
}

TEST(IpwWeight, MonotoneAndBounded) {
  for (double eps : {1e-3, 0.05, 0.5}) {
    double prev = 0.0;
    for (double p = 0.0; p <= 1.0; p += 0.01) {
      const double w = ipw_weight(p, eps);
      EXPECT_GE(w, prev);
      EXPECT_GE(w, 1.0);
      EXPECT_LE(w, 1.0 / eps + 1e-9);
      prev = w;
    }
  }
}

TEST(PredictItem, HandBuiltPairGolden) {
  const auto pair = hand_pair();
  const auto item = fixture_item();
  const auto preds = predict_item(pair, item, 2.0);
  const std::vector<int> pct1 = {0, 5, 5, 10, 15};
  double mean = 0.0;
  ASSERT_EQ(preds.p1.size(), pct1.size());
  for (std::size_t j = 0; j < pct1.size(); ++j) {
    EXPECT_NEAR(preds.p1[j], sigmoid(-1.0 + 0.05 * pct1[j]), 1e-15);
    mean += preds.p1[j] / pct1.size();
  }
  EXPECT_NEAR(preds.mean_p1, mean, 1e-15);
  const std::vector<int> pct2 = {0, 5, 10, 15};
  ASSERT_EQ(preds.p2.size(), pct2.size());
  for (std::size_t k = 0; k < pct2.size(); ++k) {
    EXPECT_NEAR(preds.p2[k], sigmoid(-2.0 + 0.04 * pct2[k] + mean), 1e-15);
  }
  EXPECT_NEAR(preds.p_star, preds.p1[0] + (1 - preds.p1[0]) * preds.p2[0], 1e-15);
  EXPECT_EQ(preds.item_id, item.item_id);
}

TEST(PredictItem, MeanPropensityMatchesHelper) {
  const auto pair = hand_pair();
  const auto item = fixture_item();
  EXPECT_DOUBLE_EQ(predict_item(pair, item, 7.0).mean_p1,
                   mean_round1_propensity(pair.first, pair.round1_set, item, 7.0));
}

TEST(PairValidation, SchemaAndEpsilon) {
  auto pair = hand_pair();
  EXPECT_NO_THROW(validate(pair));
  std::swap(pair.first, pair.second);
  EXPECT_THROW(validate(pair), SchemaMismatchError);
  pair = hand_pair();
  pair.ipw_epsilon = 0.0;
  EXPECT_THROW(validate(pair), InputError);
}

TEST(PairArtifacts, SaveLoadRoundTrip) {
  auto pair = hand_pair();
  pair.ipw_variant = IpwVariant::kApplied;
  pair.ipw_epsilon = 0.01;
  const auto dir = testing::scratch_dir("pair");
  save_pair(pair, dir);
  const auto back = load_pair(dir);
  EXPECT_EQ(back.ipw_variant, IpwVariant::kApplied);
  EXPECT_EQ(back.ipw_epsilon, 0.01);
  EXPECT_EQ(back.round1_set.arms, pair.round1_set.arms);
  EXPECT_EQ(back.round2_set.arms, pair.round2_set.arms);
  const auto a = predict_item(pair, fixture_item(), 3.0);
  const auto b = predict_item(back, fixture_item(), 3.0);
  EXPECT_EQ(a.p1, b.p1);
  EXPECT_EQ(a.p2, b.p2);
}

class FittedPair : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new testing::SmallRct(testing::small_rct(8000, 31));
    first_ = new Model(fit_first_round(data_->rct.round1_log, data_->catalog, quick_config()));
  }
  static void TearDownTestSuite() {
    delete data_;
    delete first_;
  }
  static testing::SmallRct* data_;
  static Model* first_;
};

testing::SmallRct* FittedPair::data_ = nullptr;
Model* FittedPair::first_ = nullptr;

TEST_F(FittedPair, EpsilonOneEqualsUnweightedFit) {
  const auto& rct = data_->rct;
  const Dataset weighted = round2_dataset(rct.round2_log, rct.round1_log, data_->catalog,
                                          *first_, testing::round1_set(), 1.0);
  for (double w : weighted.weights) EXPECT_EQ(w, 1.0);
  Dataset plain = weighted;
  std::fill(plain.weights.begin(), plain.weights.end(), 1.0);
  const Model a = train(weighted, quick_config());
  const Model b = train(plain, quick_config());
  EXPECT_NEAR(a.intercept, b.intercept, 1e-10);
  for (std::size_t f = 0; f < a.coefficients.size(); ++f) {
    EXPECT_NEAR(a.coefficients[f], b.coefficients[f], 1e-10);
  }
}

TEST_F(FittedPair, WeightsFollowRoundOnePropensity) {
  const auto& rct = data_->rct;
  const Dataset d = round2_dataset(rct.round2_log, rct.round1_log, data_->catalog, *first_,
                                   testing::round1_set(), 1e-3);
  ASSERT_EQ(d.rows(), rct.round2_log.size());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double mean_p1 = d.row(i)[kRound1Width];
    EXPECT_NEAR(d.weights[i], 1.0 / (1.0 - mean_p1), 1e-12);
    EXPECT_GE(d.weights[i], 1.0);
  }
}

TEST_F(FittedPair, PredictionsAreProbabilities) {
  const Model second = fit_second_round(data_->rct.round2_log, data_->rct.round1_log,
                                        data_->catalog, *first_, testing::round1_set(),
                                        quick_config(), 1e-3);
  PredictorPair pair{*first_, second, testing::round1_set(), testing::round2_set()};
  for (std::size_t i = 0; i < 200; ++i) {
    const auto p = predict_item(pair, data_->items[i], 2.0);
    for (double v : p.p1) EXPECT_TRUE(v > 0 && v < 1);
    for (double v : p.p2) EXPECT_TRUE(v > 0 && v < 1);
    EXPECT_TRUE(p.p_star > 0 && p.p_star < 1);
  }
}

TEST_F(FittedPair, SurvivorSoldInRoundOneIsRejected) {
  auto round1 = data_->rct.round1_log;
  const auto& victim = data_->rct.round2_log.front().item_id;
  for (auto& r : round1) {
    if (r.item_id != victim) continue;
    r.sold = true;
    r.purchase_delay_h = 0.0;
    r.sale_price_yen = data_->catalog.at(victim).price_yen;
    r.coupon_cost_yen = coupon_cost(r.coupon, *r.sale_price_yen);
  }
  EXPECT_THROW(round2_dataset(data_->rct.round2_log, round1, data_->catalog, *first_,
                              testing::round1_set(), 1e-3),
               InputError);
}

TEST(FitFirstRound, SingleArmIsNotIdentifiable) {
  auto d = testing::small_rct(500, 3);
  for (auto& r : d.rct.round1_log) {
    r.coupon = CouponConfig::none();
    if (r.sold) r.coupon_cost_yen = 0;
  }
  EXPECT_THROW(fit_first_round(d.rct.round1_log, d.catalog, quick_config()),
               IdentifiabilityError);
}

TEST(FitSecondRound, EmptyLogThrows) {
  const auto d = testing::small_rct(500, 3);
  const Model first = fit_first_round(d.rct.round1_log, d.catalog, quick_config());
  EXPECT_THROW(fit_second_round({}, d.rct.round1_log, d.catalog, first, testing::round1_set(),
                                quick_config(), 1e-3),
               InputError);
}

TEST(IpwVariant, Names) {
  EXPECT_EQ(ipw_variant_from_string(to_string(IpwVariant::kApplied)), IpwVariant::kApplied);
  EXPECT_EQ(ipw_variant_from_string(to_string(IpwVariant::kMean)), IpwVariant::kMean);
  EXPECT_THROW(ipw_variant_from_string("bogus"), InputError);
}

}  // namespace
}  // namespace dscaf
