#include <gtest/gtest.h>

#include "dscaf/config.hpp"
#include "dscaf/errors.hpp"
#include "test_support.hpp"

namespace dscaf {
namespace {

const std::filesystem::path kDefaultConf =
    std::filesystem::path(DSCAF_SOURCE_DIR) / "config" / "default.conf";

void expect_config_error(const std::string& text, int line, const std::string& key) {
  try {
    parse_run_config(text);
    FAIL() << "expected ConfigError for:\n" << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.key(), key) << e.what();
  }
}

TEST(Config, ShippedFileEqualsBuiltInDefaults) {
  const RunConfig file = load_run_config(kDefaultConf);
  const RunConfig def = default_run_config();
  const auto& a = file.simulator;
  const auto& b = def.simulator;
  EXPECT_EQ(a.n_items, b.n_items);
  EXPECT_EQ(a.rng_seed, b.rng_seed);
  EXPECT_EQ(a.base_logit_r1, b.base_logit_r1);
  EXPECT_EQ(a.base_logit_r2, b.base_logit_r2);
  EXPECT_EQ(a.feature_weights, b.feature_weights);
  EXPECT_EQ(a.effect_scale, b.effect_scale);
  EXPECT_EQ(a.delay_knee_h, b.delay_knee_h);
  EXPECT_EQ(a.delay_floor, b.delay_floor);
  EXPECT_EQ(a.purchase_time_rate, b.purchase_time_rate);
  EXPECT_EQ(a.ltv_log_mean, b.ltv_log_mean);
  EXPECT_EQ(a.ltv_log_sd, b.ltv_log_sd);
  EXPECT_EQ(a.price_log_mean, b.price_log_mean);
  EXPECT_EQ(a.price_log_sd, b.price_log_sd);
  EXPECT_EQ(a.likes_mean, b.likes_mean);
  EXPECT_EQ(a.max_age_days, b.max_age_days);
  EXPECT_EQ(a.items_per_seller, b.items_per_seller);
  EXPECT_EQ(a.rct_max_attach_delay_h, b.rct_max_attach_delay_h);

  EXPECT_EQ(file.round1_set.arms, def.round1_set.arms);
  EXPECT_EQ(file.round2_set.arms, def.round2_set.arms);
  EXPECT_EQ(file.assignment.round1, def.assignment.round1);
  EXPECT_EQ(file.assignment.round2, def.assignment.round2);
  EXPECT_EQ(file.learner.expand(), def.learner.expand());
  EXPECT_EQ(file.learner.k_folds, def.learner.k_folds);
  EXPECT_EQ(file.learner.seed, def.learner.seed);

  EXPECT_EQ(file.policy.lift_threshold, def.policy.lift_threshold);
  EXPECT_EQ(file.policy.attach_delay_h, def.policy.attach_delay_h);
  EXPECT_EQ(file.policy.ipw_epsilon, def.policy.ipw_epsilon);
  EXPECT_EQ(file.policy.ipw_variant, def.policy.ipw_variant);
  EXPECT_EQ(file.policy.infeasible_fallback, def.policy.infeasible_fallback);
  EXPECT_EQ(file.policy.ltv_override, def.policy.ltv_override);

  EXPECT_EQ(file.evaluation.deciles, def.evaluation.deciles);
  EXPECT_EQ(file.evaluation.bootstrap_b, def.evaluation.bootstrap_b);
  EXPECT_EQ(file.evaluation.bootstrap_seed, def.evaluation.bootstrap_seed);
  EXPECT_EQ(file.evaluation.bucket_width_h, def.evaluation.bucket_width_h);
  EXPECT_EQ(file.evaluation.seeds, def.evaluation.seeds);
  EXPECT_EQ(file.evaluation.compare_items, def.evaluation.compare_items);

  EXPECT_EQ(file.io.catalog, def.io.catalog);
  EXPECT_EQ(file.io.model_dir, def.io.model_dir);
  EXPECT_EQ(file.io.comparison, def.io.comparison);
}

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(parse_run_config("").simulator.n_items, default_run_config().simulator.n_items);
  EXPECT_EQ(parse_run_config("# only a comment\n\n").evaluation.seeds,
            default_run_config().evaluation.seeds);
}

TEST(Config, OverridesApply) {
  const auto c = parse_run_config(
      "[simulator]\nn_items = 12\n[learner]\nl2 = 0.5\nkind = boosted_stumps\n"
      "[policy]\nltv_override = 3000\nipw_variant = applied\n"
      "[rct]\nround1_assignment = 0.6, 0.1, 0.1, 0.1, 0.1\n");
  EXPECT_EQ(c.simulator.n_items, 12u);
  EXPECT_EQ(c.learner.l2, std::vector<double>{0.5});
  EXPECT_EQ(c.learner.kind, LearnerKind::kBoostedStumps);
  EXPECT_EQ(c.policy.ltv_override, Yen{3000});
  EXPECT_EQ(c.policy.ipw_variant, IpwVariant::kApplied);
  EXPECT_EQ(c.assignment.round1.size(), 5u);
}

TEST(Config, UnknownKeyReportsLine) {
  expect_config_error("[simulator]\nn_items = 5\nbogus = 1\n", 3, "simulator.bogus");
}

TEST(Config, DuplicateKeyReportsLine) {
  expect_config_error("[policy]\nlift_threshold = 0.1\n\nlift_threshold = 0.2\n", 4,
                      "policy.lift_threshold");
}

TEST(Config, BadValueReportsLine) {
  expect_config_error("[evaluation]\ndeciles = ten\n", 2, "evaluation.deciles");
  expect_config_error("[simulator]\neffect_scale = 0.1x\n", 2, "simulator.effect_scale");
  expect_config_error("[coupons]\nround1 = 5/3/1000, none\n", 2, "coupons.round1");
}

TEST(Config, MissingEqualsReportsLine) {
  expect_config_error("[io]\ncatalog catalog.csv\n", 2, "io");
}

TEST(Config, CrossFieldChecks) {
  expect_config_error("[rct]\nround2_assignment = 0.5, 0.5\n", 0, "rct.round2_assignment");
  expect_config_error("[rct]\nround2_assignment = 0.5, 0.5, 0.5, 0.5\n", 0,
                      "rct.round2_assignment");
  expect_config_error("[io]\nplans = catalog.csv\n", 0, "io");
  expect_config_error("[io]\nplans = manifest.json\n", 0, "io");
  expect_config_error("[evaluation]\nbootstrap_b = 1\n", 0, "evaluation.bootstrap_b");
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(load_run_config("/nonexistent/run.conf"), IoError);
}

TEST(CouponList, Parses) {
  const auto arms = parse_coupon_list("none, 5/3/1000 ,15/72/3000");
  ASSERT_EQ(arms.size(), 3u);
  EXPECT_TRUE(arms[0].is_none());
  EXPECT_EQ(arms[1], make_coupon(5, 3, 1000));
  EXPECT_EQ(arms[2], make_coupon(15, 72, 3000));
  EXPECT_THROW(parse_coupon_list("5/3"), InputError);
  EXPECT_THROW(parse_coupon_list("5/3/x"), InputError);
  EXPECT_THROW(parse_coupon_list("120/3/1000"), InputError);
}

}  // namespace
}  // namespace dscaf
