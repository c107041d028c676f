#include "dscaf/decision.hpp"

#include <cmath>
#include <ostream>

#include "dscaf/csv_io.hpp"
#include "dscaf/errors.hpp"

namespace dscaf {
namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InputError(std::string(name) + " must lie in [0, 1]");
  }
}

double item_ltv(const ItemRecord& item, const PolicyConstraint& constraint) {
  return static_cast<double>(constraint.ltv_override.value_or(item.seller_ltv_yen));
}

// Strict "a is preferred over b" for feasible plans.
bool better_by_roi(const AllocationPlan& a, const AllocationPlan& b) {
  if (a.roi != b.roi) return a.roi > b.roi;
  if (a.expected_cost != b.expected_cost) return a.expected_cost < b.expected_cost;
  if (a.j != b.j) return a.j < b.j;
  return a.k < b.k;
}

bool better_by_lift(const AllocationPlan& a, const AllocationPlan& b) {
  if (a.lift != b.lift) return a.lift > b.lift;
  if (a.expected_cost != b.expected_cost) return a.expected_cost < b.expected_cost;
  if (a.j != b.j) return a.j < b.j;
  return a.k < b.k;
}

// Best single-round arm: feasible arms by ROI, otherwise the maximal lift.
std::size_t choose_round_arm(const std::vector<double>& p, const CouponSet& set,
                             const ItemRecord& item, double ltv, double threshold) {
  std::optional<AllocationPlan> best_feasible, best_lift;
  for (std::size_t a = 0; a < set.size(); ++a) {
    AllocationPlan cell;
    cell.j = a;
    cell.lift = p[a] - p[0];
    cell.expected_cost = static_cast<double>(coupon_cost(set[a], item.price_yen));
    cell.roi = roi(p[a], p[0], ltv, cell.expected_cost);
    if (cell.lift >= threshold && (!best_feasible || better_by_roi(cell, *best_feasible))) {
      best_feasible = cell;
    }
    if (!best_lift || better_by_lift(cell, *best_lift)) best_lift = cell;
  }
  return best_feasible ? best_feasible->j : best_lift->j;
}

void check_sets(const ItemPredictions& preds, const CouponSet& round1_set,
                const CouponSet& round2_set) {
  if (preds.p1.size() != round1_set.size() || preds.p2.size() != round2_set.size()) {
    throw ContractError("predictions were not produced on these coupon sets");
  }
}

}  // namespace

void validate(const PolicyConstraint& c) {
  if (!(c.lift_threshold >= 0.0 && c.lift_threshold < 1.0)) {
    throw InputError("lift_threshold must lie in [0, 1)");
  }
  if (c.ltv_override && *c.ltv_override <= 0) {
    throw InputError("ltv_override must be positive");
  }
}

double combine_propensity(double p1, double p2) {
  check_probability(p1, "round-1 propensity");
  check_probability(p2, "round-2 propensity");
  return p1 + (1.0 - p1) * p2;
}

double combine_cost(double p1, double p2, double cost_j, double cost_k) {
  if (!(cost_j >= 0.0) || !(cost_k >= 0.0)) {
    throw InputError("coupon costs must be non-negative");
  }
  const double p = combine_propensity(p1, p2);
  if (p == 0.0) return 0.0;
  return (p1 * cost_j + (1.0 - p1) * p2 * cost_k) / p;
}

double roi(double p_combined, double p_star, double ltv, double expected_cost) {
  check_probability(p_combined, "combined propensity");
  check_probability(p_star, "baseline propensity");
  if (!(ltv > 0.0)) throw InputError("ltv must be positive");
  if (!(expected_cost >= 0.0)) throw InputError("expected cost must be non-negative");
  const double lift = p_combined - p_star;
  if (expected_cost == 0.0) return lift > 0.0 ? kInfiniteRoi : 0.0;
  return lift * ltv / expected_cost;
}

AllocationPlan evaluate_pair(const ItemPredictions& preds, const ItemRecord& item,
                             const CouponSet& round1_set, const CouponSet& round2_set,
                             const PolicyConstraint& constraint,
                             double attach_delay_h, std::size_t j, std::size_t k) {
  check_sets(preds, round1_set, round2_set);
  AllocationPlan plan;
  plan.item_id = item.item_id;
  plan.j = j;
  plan.k = k;
  plan.round1_coupon = round1_set[j];
  plan.round2_coupon = round2_set[k];
  plan.attach_delay_h = attach_delay_h;
  plan.p_dagger = preds.p1[j];
  plan.p_ddagger = preds.p2[k];
  plan.p_combined = combine_propensity(plan.p_dagger, plan.p_ddagger);
  plan.expected_cost = combine_cost(
      plan.p_dagger, plan.p_ddagger,
      static_cast<double>(coupon_cost(plan.round1_coupon, item.price_yen)),
      static_cast<double>(coupon_cost(plan.round2_coupon, item.price_yen)));
  plan.p_star = preds.p_star;
  plan.lift = plan.p_combined - plan.p_star;
  plan.roi = roi(plan.p_combined, plan.p_star, item_ltv(item, constraint),
                 plan.expected_cost);
  plan.feasible = plan.lift >= constraint.lift_threshold;
  return plan;
}

AllocationPlan allocate(const ItemPredictions& preds, const ItemRecord& item,
                        const CouponSet& round1_set, const CouponSet& round2_set,
                        const PolicyConstraint& constraint, double attach_delay_h) {
  validate(constraint);
  check_sets(preds, round1_set, round2_set);
  std::optional<AllocationPlan> best_feasible, best_lift;
  for (std::size_t j = 0; j < round1_set.size(); ++j) {
    for (std::size_t k = 0; k < round2_set.size(); ++k) {
      if (j == 0 && k == 0) continue;  // the baseline itself
      AllocationPlan cell = evaluate_pair(preds, item, round1_set, round2_set,
                                          constraint, attach_delay_h, j, k);
      if (cell.feasible &&
          (!best_feasible || better_by_roi(cell, *best_feasible))) {
        best_feasible = cell;
      }
      if (!best_lift || better_by_lift(cell, *best_lift)) best_lift = std::move(cell);
    }
  }
  return best_feasible ? *best_feasible : *best_lift;
}

AllocationPlan allocate_independent(const ItemPredictions& preds,
                                    const ItemRecord& item,
                                    const CouponSet& round1_set,
                                    const CouponSet& round2_set,
                                    const PolicyConstraint& constraint,
                                    double attach_delay_h) {
  validate(constraint);
  check_sets(preds, round1_set, round2_set);
  const double ltv = item_ltv(item, constraint);
  const std::size_t j =
      choose_round_arm(preds.p1, round1_set, item, ltv, constraint.lift_threshold);
  const std::size_t k =
      choose_round_arm(preds.p2, round2_set, item, ltv, constraint.lift_threshold);
  return evaluate_pair(preds, item, round1_set, round2_set, constraint,
                       attach_delay_h, j, k);
}

AllocationPlan replan(const ItemRecord& item,
                      std::span<const OutcomeRecord> history,
                      const PredictorPair& pair,
                      const PolicyConstraint& constraint, double attach_delay_h) {
  if (item.status == ItemStatus::kSold) {
    throw ContractError("item " + item.item_id + " is already sold");
  }
  for (const auto& r : history) {
    if (r.item_id != item.item_id) {
      throw ContractError("history record for " + r.item_id +
                          " passed with item " + item.item_id);
    }
    if (r.sold) throw ContractError("item " + item.item_id + " is already sold");
  }
  ItemRecord current = item;
  current.age_days += kRoundGapDays * static_cast<double>(history.size());
  const auto preds = predict_item(pair, current, attach_delay_h);
  return allocate(preds, current, pair.round1_set, pair.round2_set, constraint,
                  attach_delay_h);
}

void write_plans(std::ostream& out, const std::vector<AllocationPlan>& plans) {
  out << kPlanHeader << '\n';
  for (const auto& p : plans) {
    out << p.item_id << ',' << p.round1_coupon.discount_pct << ','
        << format_real(p.round1_coupon.validity_hours) << ','
        << p.round1_coupon.cap_yen << ',' << p.round2_coupon.discount_pct << ','
        << format_real(p.round2_coupon.validity_hours) << ','
        << p.round2_coupon.cap_yen << ',' << format_real(p.attach_delay_h) << ','
        << format_real(p.p_dagger) << ',' << format_real(p.p_ddagger) << ','
        << format_real(p.p_combined) << ',' << format_real(p.p_star) << ','
        << format_real(p.lift) << ',' << format_real(p.expected_cost) << ','
        << format_real(p.roi) << ',' << (p.feasible ? 1 : 0) << '\n';
  }
}

}  // namespace dscaf
