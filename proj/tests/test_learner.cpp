#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dscaf/errors.hpp"
#include "dscaf/learner.hpp"
#include "test_support.hpp"

namespace dscaf {
namespace {

FeatureVector fv2(double a, double b) { return {{a, b}, "t2"}; }

// Fixture shared with tests/oracles/logistic_fit.py.
Dataset oracle_fixture() {
  Dataset d;
  for (int i = 0; i < 200; ++i) {
    const double x1 = 2.0 * std::sin(0.7 * i);
    const double x2 = std::cos(1.3 * i) + 0.001 * i;
    const double p = 1.0 / (1.0 + std::exp(-(0.5 + 1.2 * x1 - 0.8 * x2)));
    const double u = std::fmod(i * 0.6180339887498949, 1.0);
    d.add(fv2(x1, x2), u < p, 1.0 + i % 3);
  }
  return d;
}

Dataset synthetic(std::size_t n, std::uint64_t seed, double b0, double b1, double b2) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> x(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x(g), b = x(g);
    const double p = 1.0 / (1.0 + std::exp(-(b0 + b1 * a + b2 * b)));
    d.add(fv2(a, b), u(g) < p);
  }
  return d;
}

LearnerConfig logistic(double l2 = 0.0, int epochs = 300) {
  LearnerConfig c;
  c.l2 = l2;
  c.epochs = epochs;
  return c;
}

LearnerConfig stumps(int rounds = 50) {
  LearnerConfig c;
  c.kind = LearnerKind::kBoostedStumps;
  c.learning_rate = 0.3;
  c.epochs = rounds;
  c.max_stumps = rounds;
  return c;
}

TEST(Logistic, BalancedConstantDataGivesHalf) {
  Dataset d;
  for (int i = 0; i < 10; ++i) d.add(fv2(1.0, 2.0), i % 2 == 0);
  const Model m = train(d, logistic());
  EXPECT_NEAR(m.probability(d.row(0)), 0.5, 1e-9);
}

TEST(Logistic, SeparatesSeparableData) {
  Dataset d;
  for (int i = 0; i < 100; ++i) {
    const double x = i < 50 ? -1.0 - i * 0.01 : 1.0 + i * 0.01;
    d.add(fv2(x, 0.3 * std::sin(i)), i >= 50);
  }
  const Model m = train(d, logistic());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    EXPECT_EQ(m.probability(d.row(i)) > 0.5, d.labels[i] == 1);
  }
}

TEST(Logistic, RecoversCoefficients) {
  const Dataset d = synthetic(10000, 5, -0.3, 1.0, -0.7);
  const Model m = train(d, logistic());
  const auto raw = m.raw_coefficients();
  EXPECT_NEAR(m.raw_intercept(), -0.3, 0.1);
  EXPECT_NEAR(raw[0], 1.0, 0.1);
  EXPECT_NEAR(raw[1], -0.7, 0.1);
}

// Values: tests/oracles/logistic_fit.py
TEST(Logistic, MatchesOracleWithoutPenalty) {
  const Dataset d = oracle_fixture();
  ASSERT_EQ(std::count(d.labels.begin(), d.labels.end(), 1), 117);
  const Model m = train(d, logistic(0.0, 3000));
  const auto raw = m.raw_coefficients();
  EXPECT_NEAR(m.raw_intercept(), 0.617577578215, 1e-6);
  EXPECT_NEAR(raw[0], 1.17311810001, 1e-6);
  EXPECT_NEAR(raw[1], -0.617765639593, 1e-6);
  EXPECT_NEAR(log_loss(m, d), 0.466526082492, 1e-9);
}

TEST(Logistic, MatchesOracleWithPenalty) {
  const Dataset d = oracle_fixture();
  const Model m = train(d, logistic(0.05, 3000));
  const auto raw = m.raw_coefficients();
  EXPECT_NEAR(m.raw_intercept(), 0.463014752672, 1e-6);
  EXPECT_NEAR(raw[0], 0.816766856396, 1e-6);
  EXPECT_NEAR(raw[1], -0.394935919964, 1e-6);
}

TEST(Logistic, IntegerWeightEqualsDuplication) {
  const Dataset base = synthetic(300, 8, 0.2, 0.8, 0.4);
  Dataset weighted, duplicated;
  for (std::size_t i = 0; i < base.rows(); ++i) {
    const FeatureVector fv{{base.row(i)[0], base.row(i)[1]}, "t2"};
    const int times = 1 + static_cast<int>(i % 3);
    weighted.add(fv, base.labels[i] == 1, times);
    for (int t = 0; t < times; ++t) duplicated.add(fv, base.labels[i] == 1);
  }
  const Model a = train(weighted, logistic(0.01));
  const Model b = train(duplicated, logistic(0.01));
  EXPECT_NEAR(a.intercept, b.intercept, 1e-8);
  for (std::size_t f = 0; f < 2; ++f) EXPECT_NEAR(a.coefficients[f], b.coefficients[f], 1e-8);
}

TEST(Logistic, DeterministicAndOrderInvariant) {
  const Dataset d = synthetic(500, 11, 0.1, 0.5, -0.5);
  const Model a = train(d, logistic(0.01));
  const Model b = train(d, logistic(0.01));
  EXPECT_EQ(a.intercept, b.intercept);
  EXPECT_EQ(a.coefficients, b.coefficients);

  std::vector<std::size_t> rev(d.rows());
  for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = rev.size() - 1 - i;
  const Model c = train(d.subset(rev), logistic(0.01));
  EXPECT_NEAR(a.intercept, c.intercept, 1e-9);
  for (std::size_t f = 0; f < 2; ++f) EXPECT_NEAR(a.coefficients[f], c.coefficients[f], 1e-9);
}

TEST(Logistic, SingleClassThrows) {
  Dataset d;
  for (int i = 0; i < 5; ++i) d.add(fv2(i, 0), false);
  EXPECT_THROW(train(d, logistic()), DegenerateModelError);
  EXPECT_THROW(train(Dataset{}, logistic()), DegenerateModelError);
}

TEST(Boosted, SingleClassReturnsPrior) {
  Dataset d;
  for (int i = 0; i < 5; ++i) d.add(fv2(i, 0), true);
  const Model m = train(d, stumps());
  EXPECT_TRUE(m.stumps.empty());
  EXPECT_NEAR(m.probability(d.row(0)), kProbCeil, 1e-12);
}

TEST(Boosted, TrainingLossNeverIncreases) {
  const Dataset d = synthetic(2000, 3, 0.0, 1.5, 0.0);
  std::vector<double> trace;
  const Model m = train(d, stumps(40), &trace);
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
  EXPECT_LT(log_loss(m, d), trace.front());
  EXPECT_LE(m.stumps.size(), 40u);
}

TEST(Model, ZeroModelPredictsHalf) {
  const Model m = zero_model("t2", 2);
  EXPECT_EQ(predict(m, fv2(3.0, -8.0)), 0.5);
}

TEST(Model, SchemaMismatchIsRejected) {
  const Model m = zero_model("t2", 2);
  EXPECT_THROW(predict(m, {{1.0, 2.0}, "other"}), SchemaMismatchError);
  EXPECT_THROW(predict(m, {{1.0, 2.0, 3.0}, "t2"}), SchemaMismatchError);
  Dataset d;
  d.add(fv2(1, 2), true);
  EXPECT_THROW(d.add({{1.0}, "t1"}, true), ContractError);
}

TEST(Model, ProbabilitiesAreClamped) {
  const Dataset d = synthetic(500, 2, 0.0, 30.0, 0.0);
  const Model m = train(d, logistic(0.0, 2000));
  for (double x : {-50.0, 50.0}) {
    const double p = m.probability(std::vector<double>{x, 0.0});
    EXPECT_GE(p, kProbFloor);
    EXPECT_LE(p, kProbCeil);
  }
}

TEST(Model, JsonRoundTripIsExact) {
  for (const auto& config : {logistic(0.01), stumps(20)}) {
    const Dataset d = synthetic(400, 4, 0.3, 1.0, -1.0);
    const Model m = train(d, config);
    const Model back = model_from_json(model_to_json(m));
    EXPECT_EQ(back.config, m.config);
    EXPECT_EQ(model_to_json(back), model_to_json(m));
    for (std::size_t i = 0; i < d.rows(); ++i) {
      EXPECT_EQ(back.probability(d.row(i)), m.probability(d.row(i)));
    }
  }
  EXPECT_THROW(model_from_json("{\"format\":\"other\"}"), InputError);
  EXPECT_THROW(model_from_json("not json"), InputError);
}

TEST(Model, SaveAndLoad) {
  const auto dir = testing::scratch_dir("learner_save");
  const Model m = train(synthetic(200, 1, 0, 1, 1), logistic());
  save_model(m, dir / "m.json");
  EXPECT_EQ(model_to_json(load_model(dir / "m.json")), model_to_json(m));
  EXPECT_THROW(load_model(dir / "missing.json"), IoError);
}

TEST(GridSearch, SingleConfigIsSelected) {
  const Dataset d = synthetic(300, 6, 0, 1, 0);
  const std::vector<LearnerConfig> grid = {logistic(0.5)};
  const auto r = grid_search(d, grid, 3, 1);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(r.best, grid[0]);
  ASSERT_EQ(r.table.size(), 1u);
  EXPECT_EQ(r.table[0].fold_losses.size(), 3u);
}

TEST(GridSearch, DuplicateConfigsResolveToFirst) {
  const Dataset d = synthetic(300, 6, 0, 1, 0);
  const std::vector<LearnerConfig> grid = {logistic(1.0), logistic(0.01), logistic(0.01)};
  const auto r = grid_search(d, grid, 3, 1);
  EXPECT_EQ(r.best_index, 1u);
  EXPECT_EQ(r.table[1].mean_log_loss, r.table[2].mean_log_loss);
}

TEST(GridSearch, HeavyPenaltyLoses) {
  const Dataset d = synthetic(1000, 6, 0, 2, 0);
  const std::vector<LearnerConfig> grid = {logistic(100.0), logistic(0.0)};
  EXPECT_EQ(grid_search(d, grid, 3, 1).best_index, 1u);
}

TEST(GridSearch, SingleClassFoldFallsBackToPrior) {
  Dataset d;
  for (int i = 0; i < 6; ++i) d.add(fv2(i, -i), i == 0);
  const std::vector<LearnerConfig> grid = {logistic()};
  const auto r = grid_search(d, grid, 3, 1);
  EXPECT_TRUE(r.table[0].prior_fallback);
}

TEST(GridSearch, Deterministic) {
  const Dataset d = synthetic(300, 6, 0, 1, 0);
  const std::vector<LearnerConfig> grid = {logistic(0.0), logistic(0.1)};
  const auto a = grid_search(d, grid, 3, 9);
  const auto b = grid_search(d, grid, 3, 9);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    EXPECT_EQ(a.table[c].fold_losses, b.table[c].fold_losses);
  }
}

TEST(GridSearch, RejectsBadArguments) {
  const Dataset d = synthetic(10, 6, 0, 1, 0);
  const std::vector<LearnerConfig> none;
  const std::vector<LearnerConfig> one = {logistic()};
  EXPECT_THROW(grid_search(d, none, 3, 1), InputError);
  EXPECT_THROW(grid_search(d, one, 1, 1), InputError);
  EXPECT_THROW(grid_search(d, one, 11, 1), InputError);
}

}  // namespace
}  // namespace dscaf
