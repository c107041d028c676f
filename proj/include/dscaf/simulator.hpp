#ifndef DSCAF_SIMULATOR_HPP_
#define DSCAF_SIMULATOR_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dscaf/domain.hpp"

namespace dscaf {

// Number of item features entering the structural sale model.
inline constexpr std::size_t kTruthFeatureCount = 7;

// Parameters of the synthetic marketplace. Defaults mirror
// config/default.conf; every value is a simulator choice.
struct SimConfig {
  std::size_t n_items = 200000;
  std::uint64_t rng_seed = 42;

  double base_logit_r1 = -0.7;
  double base_logit_r2 = -1.5;
  // Weights on [ln(price/1000), condition, age_days/30, likes/10,
  // demand_index, sin(2 pi season), cos(2 pi season)].
  std::array<double, kTruthFeatureCount> feature_weights = {
      -0.35, 0.10, -0.30, 0.80, 0.40, 0.15, 0.10};
  double effect_scale = 0.07;
  double delay_knee_h = 10.0;
  double delay_floor = 0.3;
  double purchase_time_rate = 1.0;
  double ltv_log_mean = 7.6;
  double ltv_log_sd = 0.5;

  // Catalog distributions.
  double price_log_mean = 8.0;
  double price_log_sd = 0.9;
  double likes_mean = 3.0;
  double max_age_days = 60.0;
  double items_per_seller = 4.0;
  double rct_max_attach_delay_h = 36.0;
};

// Throws InputError on violated invariants.
void validate(const SimConfig& config);

// Delay at which the multiplier reaches its floor.
inline constexpr double kDelayFloorHours = 48.0;

// The structural model behind every simulated outcome. Read-only after
// construction.
class GroundTruth {
 public:
  explicit GroundTruth(SimConfig config);

  const SimConfig& config() const { return config_; }

  // [ln(price/1000), condition, age/30, likes/10, demand, sin, cos].
  std::array<double, kTruthFeatureCount> item_features(const ItemRecord& item) const;
  double base_logit(const ItemRecord& item, int round) const;
  // e(i): likes-driven responsiveness in [0.5, 1.5].
  double responsiveness(const ItemRecord& item) const;
  // d(delay): 1 up to the knee, linear down to the floor at 48 h.
  double delay_multiplier(double attach_delay_h) const;
  // Exponential purchase-time rate for an item at this price.
  double purchase_rate(Yen price_yen) const;

  // sigma(b_r + w.z + alpha * discount * e * d).
  double true_propensity(const ItemRecord& item, const CouponConfig& coupon,
                         int round, double attach_delay_h) const;
  // Probability that a sale lands inside the coupon window (1 for no coupon).
  double window_probability(const ItemRecord& item,
                            const CouponConfig& coupon) const;
  // Probability the simulator records a sale: propensity times the window
  // probability.
  double realized_propensity(const ItemRecord& item, const CouponConfig& coupon,
                             int round, double attach_delay_h) const;

 private:
  SimConfig config_;
};

// Draws n_items listings; deterministic per seed, ordered by item_id.
std::vector<ItemRecord> generate_catalog(const SimConfig& config);

// Simulates one round for one item from its substream. The first two draws
// are always the sale and purchase-time uniforms.
OutcomeRecord simulate_round(const GroundTruth& gt, const ItemRecord& item,
                             const CouponConfig& coupon, int round,
                             double attach_delay_h, double sale_uniform,
                             double time_uniform);

struct RctResult {
  std::vector<OutcomeRecord> round1_log;
  std::vector<std::string> survivors;
  std::vector<OutcomeRecord> round2_log;
};

// Per-arm assignment probabilities; empty means uniform over the set.
struct RctAssignment {
  std::vector<double> round1;
  std::vector<double> round2;
};

RctResult run_rct(const GroundTruth& gt, const std::vector<ItemRecord>& items,
                  const CouponSet& round1_set, const CouponSet& round2_set,
                  const RctAssignment& assignment, std::uint64_t seed);

struct PolicyChoice {
  CouponConfig round1;
  double attach_delay_h = 0.0;
  CouponConfig round2;
};

using Policy = std::function<PolicyChoice(const ItemRecord&)>;

struct RolloutTotals {
  std::size_t n_items = 0;
  std::size_t sales = 0;
  Yen coupon_cost = 0;
  Yen gmv = 0;
};

struct RolloutResult {
  std::vector<OutcomeRecord> records;
  RolloutTotals totals;
};

// Runs both rounds under `policy`. Round-2 coupons attach at the start of the
// round (zero delay). Outcome draws depend only on (seed, item, round), so
// different policies on the same seed share their randomness.
RolloutResult rollout_policy(const GroundTruth& gt,
                             const std::vector<ItemRecord>& items,
                             const Policy& policy, std::uint64_t seed);

// Hash of the CSV serialization of a catalog.
std::uint64_t catalog_hash(const std::vector<ItemRecord>& items);

}  // namespace dscaf

#endif  // DSCAF_SIMULATOR_HPP_
