#ifndef DSCAF_DECISION_HPP_
#define DSCAF_DECISION_HPP_

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dscaf/domain.hpp"
#include "dscaf/uplift.hpp"

namespace dscaf {

// ROI of a plan whose expected cost is zero while its lift is positive.
inline constexpr double kInfiniteRoi = std::numeric_limits<double>::infinity();

struct PolicyConstraint {
  double lift_threshold = 0.0;
  std::optional<Yen> ltv_override;
};

void validate(const PolicyConstraint& constraint);

struct AllocationPlan {
  std::string item_id;
  std::size_t j = 0;
  std::size_t k = 0;
  CouponConfig round1_coupon;
  CouponConfig round2_coupon;
  double attach_delay_h = 0.0;
  double p_dagger = 0.0;
  double p_ddagger = 0.0;
  double p_combined = 0.0;
  double expected_cost = 0.0;
  double p_star = 0.0;
  double lift = 0.0;
  double roi = 0.0;
  bool feasible = false;
};

// p1 + (1 - p1) p2: probability of a sale in either round.
double combine_propensity(double p1, double p2);

// Expected coupon cost given that the item sells in one of the two rounds.
// Defined as 0 when the combined propensity is 0.
double combine_cost(double p1, double p2, double cost_j, double cost_k);

// (p_combined - p_star) * ltv / expected_cost, with +inf for a free positive
// lift and 0 for a free non-positive lift.
double roi(double p_combined, double p_star, double ltv, double expected_cost);

// Metrics of one (j, k) cell.
AllocationPlan evaluate_pair(const ItemPredictions& preds, const ItemRecord& item,
                             const CouponSet& round1_set, const CouponSet& round2_set,
                             const PolicyConstraint& constraint,
                             double attach_delay_h, std::size_t j, std::size_t k);

// Highest-ROI feasible (j, k) over both sets, excluding (none, none). Ties go
// to lower expected cost, then lower (j, k). When nothing clears the lift
// threshold the maximal-lift plan comes back with feasible = false.
AllocationPlan allocate(const ItemPredictions& preds, const ItemRecord& item,
                        const CouponSet& round1_set, const CouponSet& round2_set,
                        const PolicyConstraint& constraint, double attach_delay_h);

// Per-round baseline: j and k are chosen separately, each by its own round's
// lift and ROI, then reported with the combined algebra.
AllocationPlan allocate_independent(const ItemPredictions& preds,
                                    const ItemRecord& item,
                                    const CouponSet& round1_set,
                                    const CouponSet& round2_set,
                                    const PolicyConstraint& constraint,
                                    double attach_delay_h);

// Rolling-horizon step for an unsold item: ages the item by one round per
// consumed history record and plans the next two rounds afresh.
AllocationPlan replan(const ItemRecord& item,
                      std::span<const OutcomeRecord> history,
                      const PredictorPair& pair,
                      const PolicyConstraint& constraint, double attach_delay_h);

inline constexpr std::string_view kPlanHeader =
    "item_id,j_discount_pct,j_validity_h,j_cap,k_discount_pct,k_validity_h,"
    "k_cap,attach_delay_h,p_dagger,p_ddagger,p_combined,p_star,lift,"
    "expected_cost,roi,feasible";

void write_plans(std::ostream& out, const std::vector<AllocationPlan>& plans);

}  // namespace dscaf

#endif  // DSCAF_DECISION_HPP_
