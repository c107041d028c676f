#ifndef DSCAF_UPLIFT_HPP_
#define DSCAF_UPLIFT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dscaf/domain.hpp"
#include "dscaf/learner.hpp"

namespace dscaf {

// Which round-1 propensity feeds the inverse weights of a survivor: the
// mean over all round-1 arms, or the arm the survivor actually received.
enum class IpwVariant { kMean, kApplied };

std::string to_string(IpwVariant variant);
IpwVariant ipw_variant_from_string(const std::string& name);

inline constexpr double kDefaultIpwEpsilon = 1e-3;

struct PredictorPair {
  Model first;
  Model second;
  CouponSet round1_set;
  CouponSet round2_set;
  double ipw_epsilon = kDefaultIpwEpsilon;
  IpwVariant ipw_variant = IpwVariant::kMean;
};

void validate(const PredictorPair& pair);

struct ItemPredictions {
  std::string item_id;
  std::vector<double> p1;  // per round-1 arm
  double mean_p1 = 0.0;
  std::vector<double> p2;  // per round-2 arm
  double p_star = 0.0;     // no coupon in either round
};

// S-learner training set for the first round: one row per logged item with
// its applied coupon and attach delay.
Dataset round1_dataset(std::span<const OutcomeRecord> round1_log,
                       const Catalog& catalog);

// Throws IdentifiabilityError unless the log holds the no-coupon arm and at
// least one real coupon.
Model fit_first_round(std::span<const OutcomeRecord> round1_log,
                      const Catalog& catalog, const LearnerConfig& config);

// 1 / clamp(1 - p_sold, epsilon, 1).
double ipw_weight(double p_sold, double epsilon);

// Mean of f-dagger over every round-1 arm at the given delay.
double mean_round1_propensity(const Model& first, const CouponSet& round1_set,
                              const ItemRecord& item, double attach_delay_h);

// Weights for survivors, given their round-1 records.
std::vector<double> ipw_weights(const Model& first, const CouponSet& round1_set,
                                std::span<const OutcomeRecord> survivor_round1,
                                const Catalog& catalog, double epsilon,
                                IpwVariant variant = IpwVariant::kMean);

// Weighted round-2 training set. Each round-2 row is matched with the same
// item's round-1 record, which must show the item unsold.
Dataset round2_dataset(std::span<const OutcomeRecord> round2_log,
                       std::span<const OutcomeRecord> round1_log,
                       const Catalog& catalog, const Model& first,
                       const CouponSet& round1_set, double epsilon,
                       IpwVariant variant = IpwVariant::kMean);

Model fit_second_round(std::span<const OutcomeRecord> round2_log,
                       std::span<const OutcomeRecord> round1_log,
                       const Catalog& catalog, const Model& first,
                       const CouponSet& round1_set, const LearnerConfig& config,
                       double epsilon, IpwVariant variant = IpwVariant::kMean);

ItemPredictions predict_item(const PredictorPair& pair, const ItemRecord& item,
                             double attach_delay_h);

inline constexpr int kPairFormatVersion = 1;

// Writes first.model.json, second.model.json and pair.json into `dir`.
void save_pair(const PredictorPair& pair, const std::filesystem::path& dir);
PredictorPair load_pair(const std::filesystem::path& dir);

}  // namespace dscaf

#endif  // DSCAF_UPLIFT_HPP_
