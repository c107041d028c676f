#ifndef DSCAF_EVALUATION_HPP_
#define DSCAF_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dscaf/decision.hpp"
#include "dscaf/domain.hpp"
#include "dscaf/simulator.hpp"
#include "dscaf/uplift.hpp"

namespace dscaf {

struct LiftEstimate {
  double lift = 0.0;
  double std_error = 0.0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

// Difference of sold proportions with its two-sample standard error.
LiftEstimate str_lift(std::span<const OutcomeRecord> treated,
                      std::span<const OutcomeRecord> control);

// Splits a log into coupon and no-coupon records.
std::pair<std::vector<OutcomeRecord>, std::vector<OutcomeRecord>> split_by_treatment(
    std::span<const OutcomeRecord> log);

struct TableRow {
  double bucket_start_h = 0.0;
  std::string metric;
  std::optional<double> value;  // empty for an unpopulated bucket
  std::size_t n = 0;
};

struct DelayAnalysisOptions {
  double bucket_width_h = 2.0;
  // Attach delays past the horizon fall in the last bucket; sales past the
  // purchase horizon are left out of the hourly tables.
  double attach_horizon_h = 36.0;
  double purchase_horizon_h = 24.0;
};

// Rows, in order, for the metrics:
//   lift_str_by_attach_delay  coupon minus holdout STR per attach-delay bucket
//   str_treated_by_hour       share of coupon items sold in each post-attach bucket
//   str_control_by_hour       same for holdout items
//   lift_str_by_hour          difference of the two
//   aov_by_hour               mean sale price of coupon sales per bucket
// `n` counts the records (or sales, for AOV) behind each value.
std::vector<TableRow> delay_analysis(std::span<const OutcomeRecord> log,
                                     const DelayAnalysisOptions& options = {});

// Lift STR restricted to attach delays in [lo, hi).
LiftEstimate lift_in_attach_window(std::span<const OutcomeRecord> log, double lo,
                                   double hi);

struct CurvePoint {
  double fraction = 0.0;
  std::optional<double> uplift;
  std::optional<double> lo;
  std::optional<double> hi;
};

struct UpliftCurve {
  std::vector<CurvePoint> points;
  // Uplift of untargeted selection: the population ATE.
  std::optional<double> random_reference;
};

// Items ranked by descending score (ties by position); point q holds the
// treated-minus-control STR inside the top fraction q.
UpliftCurve cumulative_uplift(std::span<const double> scores,
                              std::span<const std::uint8_t> treated,
                              std::span<const std::uint8_t> sold,
                              std::size_t deciles = 10);

// Least-squares slope of uplift against fraction over populated points.
std::optional<double> curve_slope(const UpliftCurve& curve);

// Curve of a resample, given the resampled item indices.
using CurveFn = std::function<UpliftCurve(std::span<const std::size_t>)>;

std::vector<UpliftCurve> bootstrap_replicates(std::size_t n_items,
                                              const CurveFn& curve_fn,
                                              std::size_t replicates,
                                              std::uint64_t seed);

// Per-point 5th/95th percentile band over replicate curves. The lower bound
// takes order statistic floor(0.05 (B-1)), the upper ceil(0.95 (B-1)).
std::vector<std::optional<std::pair<double, double>>> band_from_replicates(
    const std::vector<UpliftCurve>& replicates);

std::vector<std::optional<std::pair<double, double>>> bootstrap_band(
    std::size_t n_items, const CurveFn& curve_fn, std::size_t replicates,
    std::uint64_t seed);

// Copies a band into the curve's lo/hi fields.
void attach_band(UpliftCurve& curve,
                 const std::vector<std::optional<std::pair<double, double>>>& band);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// One-sided paired t-test p-value for mean(a - b) > 0.
double paired_one_sided_p(std::span<const double> a, std::span<const double> b);

enum class InfeasibleFallback { kMaxLift, kNoCoupon };

std::string to_string(InfeasibleFallback fallback);
InfeasibleFallback infeasible_fallback_from_string(const std::string& name);

struct StrategyMetrics {
  std::size_t sales = 0;
  double sales_rate = 0.0;
  double lift_str = 0.0;
  Yen total_coupon_cost = 0;
  Yen gmv = 0;
  double roi_realized = 0.0;
};

struct SeedReport {
  std::uint64_t seed = 0;
  std::uint64_t catalog_hash = 0;
  std::size_t n_items = 0;
  double mean_ltv = 0.0;
  StrategyMetrics holdout;
  StrategyMetrics random;
  StrategyMetrics independent;
  StrategyMetrics dscaf;
};

struct CompareOptions {
  std::size_t n_items = 100000;
  double attach_delay_h = 2.0;
  std::vector<double> random_round1;  // empty = uniform
  std::vector<double> random_round2;
  InfeasibleFallback fallback = InfeasibleFallback::kMaxLift;
};

// Across-seed means; ROI is +inf if any seed spent nothing.
struct AggregateMetrics {
  double sales_rate = 0.0;
  double lift_str = 0.0;
  double coupon_cost = 0.0;
  double gmv = 0.0;
  double roi_realized = 0.0;
};

struct ComparisonReport {
  std::vector<SeedReport> seeds;
  PolicyConstraint constraint;
  CompareOptions options;
  AggregateMetrics holdout;
  AggregateMetrics random;
  AggregateMetrics independent;
  AggregateMetrics dscaf;
  // Paired one-sided test of DSCAF over the per-round baseline on realized
  // ROI; 1 when fewer than two finite seed pairs exist.
  double dscaf_vs_independent_p = 1.0;
};

// Realized ROI: incremental sales over the holdout times mean LTV per yen of
// coupon cost; +inf when nothing was spent.
double realized_roi(std::size_t sales, std::size_t holdout_sales, double mean_ltv,
                    Yen coupon_cost);

// Plans for one item under DSCAF or the per-round baseline, converted into a
// rollout choice with the configured infeasible fallback.
PolicyChoice plan_to_choice(const AllocationPlan& plan, InfeasibleFallback fallback);

ComparisonReport compare_strategies(const SimConfig& sim, const PredictorPair& pair,
                                    const PolicyConstraint& constraint,
                                    std::span<const std::uint64_t> seeds,
                                    const CompareOptions& options);

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows);
void write_curve_csv(std::ostream& out, const UpliftCurve& curve);
std::string report_to_json(const ComparisonReport& report);

}  // namespace dscaf

#endif  // DSCAF_EVALUATION_HPP_
