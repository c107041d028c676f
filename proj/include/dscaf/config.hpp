#ifndef DSCAF_CONFIG_HPP_
#define DSCAF_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dscaf/domain.hpp"
#include "dscaf/evaluation.hpp"
#include "dscaf/learner.hpp"
#include "dscaf/simulator.hpp"
#include "dscaf/uplift.hpp"

namespace dscaf {

// Cartesian grid of learner hyperparameters.
struct LearnerGrid {
  LearnerKind kind = LearnerKind::kLogistic;
  std::vector<double> learning_rates = {1.0};
  std::vector<double> l2 = {0.0, 1e-4, 1e-2};
  std::vector<int> epochs = {300};
  int max_stumps = 200;
  std::size_t k_folds = 3;
  std::uint64_t seed = 7;

  // Configs in row-major order: learning rate, then l2, then epochs.
  std::vector<LearnerConfig> expand() const;
};

struct PolicyConfig {
  double lift_threshold = 0.05;
  double attach_delay_h = 2.0;
  double ipw_epsilon = kDefaultIpwEpsilon;
  IpwVariant ipw_variant = IpwVariant::kMean;
  InfeasibleFallback infeasible_fallback = InfeasibleFallback::kMaxLift;
  std::optional<Yen> ltv_override;

  PolicyConstraint constraint() const { return {lift_threshold, ltv_override}; }
};

struct EvaluationConfig {
  std::size_t deciles = 10;
  std::size_t bootstrap_b = 200;
  std::uint64_t bootstrap_seed = 11;
  double bucket_width_h = 2.0;
  std::vector<std::uint64_t> seeds = {101, 102, 103, 104, 105,
                                      106, 107, 108, 109, 110};
  std::size_t compare_items = 100000;
};

// File names inside a command's output directory.
struct IoConfig {
  std::string catalog = "catalog.csv";
  std::string round1_log = "round1_log.csv";
  std::string round2_log = "round2_log.csv";
  std::string model_dir = "model";
  std::string grid_table = "grid_search.csv";
  std::string plans = "plans.csv";
  std::string delay_tables = "delay_tables.csv";
  std::string uplift_curve = "uplift_curve.csv";
  std::string evaluation_summary = "evaluation_summary.json";
  std::string comparison = "comparison.json";
};

struct RunConfig {
  SimConfig simulator;
  CouponSet round1_set;
  CouponSet round2_set;
  RctAssignment assignment;
  LearnerGrid learner;
  PolicyConfig policy;
  EvaluationConfig evaluation;
  IoConfig io;
};

// Built-in defaults, identical to config/default.conf.
RunConfig default_run_config();

// Parses sectioned `key = value` text on top of the defaults. Every problem
// raises ConfigError carrying the line number and `section.key`.
RunConfig parse_run_config(const std::string& text);

// Reads and parses; a missing file raises IoError.
RunConfig load_run_config(const std::filesystem::path& path);

// Coupon list syntax: `none` or `pct/validity_h/cap`, comma separated.
std::vector<CouponConfig> parse_coupon_list(const std::string& text);

}  // namespace dscaf

#endif  // DSCAF_CONFIG_HPP_
