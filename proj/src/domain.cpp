#include "dscaf/domain.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dscaf/errors.hpp"

namespace dscaf {

void validate(const CouponConfig& coupon) {
  if (coupon.discount_pct < 0 || coupon.discount_pct >= 100) {
    throw InputError("discount_pct must lie in [0, 100), got " +
                     std::to_string(coupon.discount_pct));
  }
  if (coupon.is_none()) {
    if (coupon.cap_yen != 0) {
      throw InputError("no-coupon arm must have cap_yen = 0");
    }
    return;
  }
  if (!(coupon.validity_hours > 0.0) || !std::isfinite(coupon.validity_hours)) {
    throw InputError("coupon validity_hours must be positive");
  }
  if (coupon.cap_yen <= 0) {
    throw InputError("a real coupon needs a positive cap_yen");
  }
}

CouponConfig make_coupon(int discount_pct, double validity_hours, Yen cap_yen) {
  CouponConfig c{discount_pct, validity_hours, cap_yen};
  if (c.is_none()) c.validity_hours = 0.0;
  validate(c);
  return c;
}

std::string to_string(const CouponConfig& coupon) {
  if (coupon.is_none()) return "none";
  std::ostringstream os;
  os << coupon.discount_pct << "%/" << coupon.validity_hours << "h/"
     << coupon.cap_yen;
  return os.str();
}

std::optional<std::size_t> CouponSet::index_of(
    const CouponConfig& coupon) const {
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i] == coupon) return i;
  }
  return std::nullopt;
}

void validate(const CouponSet& set) {
  if (set.arms.size() < 2) {
    throw InputError("a coupon set needs the no-coupon arm plus at least one coupon");
  }
  if (!set.arms.front().is_none()) {
    throw InputError("arm 0 of a coupon set must be the no-coupon arm");
  }
  for (std::size_t i = 0; i < set.arms.size(); ++i) {
    validate(set.arms[i]);
    if (i > 0 && set.arms[i].is_none()) {
      throw InputError("the no-coupon arm may appear only once");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (set.arms[k] == set.arms[i]) {
        throw InputError("duplicate coupon arm " + to_string(set.arms[i]));
      }
    }
  }
}

void validate(const ItemRecord& item) {
  if (item.price_yen <= 0) {
    throw InputError("item " + item.item_id + ": price_yen must be positive");
  }
  if (item.seller_ltv_yen <= 0) {
    throw InputError("item " + item.item_id + ": seller_ltv_yen must be positive");
  }
  if (item.condition < 1 || item.condition > 5) {
    throw InputError("item " + item.item_id + ": condition must lie in 1..5");
  }
  if (!(item.age_days >= 0.0) || item.likes < 0) {
    throw InputError("item " + item.item_id + ": negative age or likes");
  }
  if (!std::isfinite(item.demand_index) || !std::isfinite(item.key_action_ts) ||
      !std::isfinite(item.age_days)) {
    throw InputError("item " + item.item_id + ": non-finite feature");
  }
  if (!(item.season_phase >= 0.0 && item.season_phase < 1.0)) {
    throw InputError("item " + item.item_id + ": season_phase must lie in [0,1)");
  }
}

Catalog::Catalog(std::vector<ItemRecord> items) : items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].item_id, i).second) {
      throw InputError("duplicate item_id " + items_[i].item_id);
    }
  }
}

bool Catalog::contains(const std::string& item_id) const {
  return index_.count(item_id) != 0;
}

const ItemRecord& Catalog::at(const std::string& item_id) const {
  const auto it = index_.find(item_id);
  if (it == index_.end()) throw InputError("unknown item_id " + item_id);
  return items_[it->second];
}

void validate(const OutcomeRecord& r) {
  if (r.round != 1 && r.round != 2) {
    throw InputError("record " + r.item_id + ": round must be 1 or 2");
  }
  validate(r.coupon);
  if (!(r.attach_delay_h >= 0.0)) {
    throw InputError("record " + r.item_id + ": negative attach delay");
  }
  const bool complete = r.purchase_delay_h && r.sale_price_yen && r.coupon_cost_yen;
  const bool empty = !r.purchase_delay_h && !r.sale_price_yen && !r.coupon_cost_yen;
  if (r.sold ? !complete : !empty) {
    throw InputError("record " + r.item_id +
                     ": sale fields must be present iff sold");
  }
  if (!r.sold) return;
  if (!(*r.purchase_delay_h >= 0.0)) {
    throw InputError("record " + r.item_id + ": negative purchase delay");
  }
  if (!r.coupon.is_none() && *r.purchase_delay_h > r.coupon.validity_hours) {
    throw InputError("record " + r.item_id +
                     ": coupon sale outside the validity window");
  }
  if (*r.coupon_cost_yen != coupon_cost(r.coupon, *r.sale_price_yen)) {
    throw InputError("record " + r.item_id + ": coupon cost inconsistent with price");
  }
}

Yen coupon_cost(const CouponConfig& coupon, Yen price_yen) {
  if (price_yen <= 0) {
    throw InputError("coupon_cost needs a positive price, got " +
                     std::to_string(price_yen));
  }
  if (coupon.is_none()) return 0;
  const Yen raw = price_yen * coupon.discount_pct / 100;
  return std::min(raw, coupon.cap_yen);
}

namespace {

void encode_common(const ItemRecord& item, const CouponConfig& coupon,
                   double slot7, std::vector<double>& out) {
  validate(item);
  validate(coupon);
  const double angle = 2.0 * std::numbers::pi * item.season_phase;
  out[0] = std::log(static_cast<double>(item.price_yen));
  out[1] = item.condition;
  out[2] = item.age_days;
  out[3] = item.likes;
  out[4] = item.demand_index;
  out[5] = std::sin(angle);
  out[6] = std::cos(angle);
  out[7] = slot7;
  out[8] = coupon.discount_pct;
  out[9] = coupon.is_none() ? 0.0 : std::log(coupon.validity_hours);
  out[10] = static_cast<double>(coupon.cap_yen) / 1000.0;
}

}  // namespace

FeatureVector encode_round1(const ItemRecord& item, const CouponConfig& coupon,
                            double attach_delay_h) {
  if (!(attach_delay_h >= 0.0) || !std::isfinite(attach_delay_h)) {
    throw InputError("attach delay must be finite and non-negative");
  }
  FeatureVector fv{std::vector<double>(kRound1Width), kRound1Schema};
  encode_common(item, coupon, attach_delay_h, fv.values);
  return fv;
}

FeatureVector encode_round2(const ItemRecord& item, const CouponConfig& coupon,
                            double mean_p1) {
  if (!(mean_p1 >= 0.0 && mean_p1 <= 1.0)) {
    throw InputError("mean round-1 propensity must lie in [0,1]");
  }
  FeatureVector fv{std::vector<double>(kRound2Width), kRound2Schema};
  encode_common(item, coupon, item.age_days + kRoundGapDays, fv.values);
  fv.values[kRound1Width] = mean_p1;
  return fv;
}

}  // namespace dscaf
