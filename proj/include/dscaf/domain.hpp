#ifndef DSCAF_DOMAIN_HPP_
#define DSCAF_DOMAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dscaf {

using Yen = std::int64_t;

// One treatment arm. discount_pct == 0 is the no-coupon arm, whose validity
// and cap carry no meaning and are normalized to zero.
struct CouponConfig {
  int discount_pct = 0;
  double validity_hours = 0.0;
  Yen cap_yen = 0;

  static CouponConfig none() { return {}; }
  bool is_none() const { return discount_pct == 0; }

  friend bool operator==(const CouponConfig&, const CouponConfig&) = default;
};

// Throws InputError when the arm violates its invariants.
void validate(const CouponConfig& coupon);

// Builds a validated real coupon.
CouponConfig make_coupon(int discount_pct, double validity_hours, Yen cap_yen);

std::string to_string(const CouponConfig& coupon);

enum class SetPurpose { kRound1, kRound2 };

// Ordered arm list; arm 0 is always the no-coupon arm.
struct CouponSet {
  std::vector<CouponConfig> arms;
  SetPurpose purpose = SetPurpose::kRound1;

  std::size_t size() const { return arms.size(); }
  const CouponConfig& operator[](std::size_t i) const { return arms[i]; }
  // Position of `coupon` in the set, if present.
  std::optional<std::size_t> index_of(const CouponConfig& coupon) const;
};

void validate(const CouponSet& set);

enum class ItemStatus { kUnsold, kSold };

struct ItemRecord {
  std::string item_id;
  std::string seller_id;
  Yen price_yen = 1;
  int condition = 3;
  double age_days = 0.0;
  int likes = 0;
  double demand_index = 0.0;
  double season_phase = 0.0;
  Yen seller_ltv_yen = 1;
  double key_action_ts = 0.0;
  ItemStatus status = ItemStatus::kUnsold;
};

void validate(const ItemRecord& item);

// Read-only catalog with id lookup.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<ItemRecord> items);

  const std::vector<ItemRecord>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool contains(const std::string& item_id) const;
  // Throws InputError for unknown ids.
  const ItemRecord& at(const std::string& item_id) const;

 private:
  std::vector<ItemRecord> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct FeatureVector {
  std::vector<double> values;
  std::string schema_id;
};

struct OutcomeRecord {
  std::string item_id;
  int round = 1;
  CouponConfig coupon;
  double attach_delay_h = 0.0;
  bool sold = false;
  std::optional<double> purchase_delay_h;
  std::optional<Yen> sale_price_yen;
  std::optional<Yen> coupon_cost_yen;
};

void validate(const OutcomeRecord& record);

// Redeemed cost of `coupon` on an item sold at `price_yen`, floored to whole
// yen and capped at the coupon limit.
Yen coupon_cost(const CouponConfig& coupon, Yen price_yen);

// Hours covered by one promotion round. Round-2 encodings age the item by
// this amount and the rolling planner advances the item clock by it.
inline constexpr double kRoundGapDays = 3.0;

inline constexpr const char* kRound1Schema = "round1.v1";
inline constexpr const char* kRound2Schema = "round2.v1";

// Round-1 layout, one coordinate each:
//   0 log(price_yen)      1 condition        2 age_days       3 likes
//   4 demand_index        5 sin(2*pi*season) 6 cos(2*pi*season)
//   7 attach_delay_h      8 discount_pct     9 log(validity_hours) (0 if none)
//   10 cap_yen / 1000
// Standardization happens inside the model, not here.
inline constexpr std::size_t kRound1Width = 11;
// Round-2 layout: round-1 layout with coordinate 7 holding the elapsed item
// age in days at the round-2 attach, plus a trailing mean round-1 propensity.
inline constexpr std::size_t kRound2Width = kRound1Width + 1;

inline constexpr std::size_t kDiscountCoordinate = 8;

FeatureVector encode_round1(const ItemRecord& item, const CouponConfig& coupon,
                            double attach_delay_h);
FeatureVector encode_round2(const ItemRecord& item, const CouponConfig& coupon,
                            double mean_p1);

}  // namespace dscaf

#endif  // DSCAF_DOMAIN_HPP_
