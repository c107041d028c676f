#include "dscaf/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "dscaf/csv_io.hpp"
#include "dscaf/errors.hpp"
#include "dscaf/rng.hpp"

namespace dscaf {
namespace {

// Rounds to a fixed number of decimals so that values survive the 12-digit
// CSV round trip bit for bit.
double quantize(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  double v = 0.0;
  std::from_chars(buf, buf + std::char_traits<char>::length(buf), v);
  return v == 0.0 ? 0.0 : v;  // drop negative zero
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::size_t draw_arm(double u, const std::vector<double>& probs) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding slack lands on the last arm with positive mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

std::vector<double> resolve_assignment(const std::vector<double>& probs,
                                       const CouponSet& set, const char* what) {
  if (probs.empty()) return std::vector<double>(set.size(), 1.0 / set.size());
  if (probs.size() != set.size()) {
    throw InputError(std::string(what) +
                     ": assignment needs one probability per arm");
  }
  double total = 0.0;
  for (const double p : probs) {
    if (!(p >= 0.0)) throw InputError(std::string(what) + ": negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InputError(std::string(what) + ": assignment probabilities must sum to 1");
  }
  return probs;
}

bool by_item_id(const OutcomeRecord& a, const OutcomeRecord& b) {
  return a.item_id < b.item_id;
}

}  // namespace

void validate(const SimConfig& c) {
  if (!(c.base_logit_r2 < c.base_logit_r1)) {
    throw InputError("base_logit_r2 must be below base_logit_r1");
  }
  if (!(c.effect_scale > 0.0)) throw InputError("effect_scale must be positive");
  if (!(c.delay_floor > 0.0 && c.delay_floor <= 1.0)) {
    throw InputError("delay_floor must lie in (0, 1]");
  }
  if (!(c.delay_knee_h >= 0.0 && c.delay_knee_h < kDelayFloorHours)) {
    throw InputError("delay_knee_h must lie in [0, 48)");
  }
  if (!(c.purchase_time_rate > 0.0)) {
    throw InputError("purchase_time_rate must be positive");
  }
  if (!(c.ltv_log_sd >= 0.0) || !(c.price_log_sd >= 0.0)) {
    throw InputError("log-normal scale parameters must be non-negative");
  }
  if (!(c.likes_mean >= 0.0) || !(c.max_age_days >= 0.0) ||
      !(c.items_per_seller >= 1.0) || !(c.rct_max_attach_delay_h >= 0.0)) {
    throw InputError("catalog distribution parameters out of range");
  }
}

GroundTruth::GroundTruth(SimConfig config) : config_(std::move(config)) {
  validate(config_);
}

std::array<double, kTruthFeatureCount> GroundTruth::item_features(
    const ItemRecord& item) const {
  const double angle = 2.0 * std::numbers::pi * item.season_phase;
  return {std::log(static_cast<double>(item.price_yen) / 1000.0),
          static_cast<double>(item.condition),
          item.age_days / 30.0,
          item.likes / 10.0,
          item.demand_index,
          std::sin(angle),
          std::cos(angle)};
}

double GroundTruth::base_logit(const ItemRecord& item, int round) const {
  if (round != 1 && round != 2) throw InputError("round must be 1 or 2");
  const auto z = item_features(item);
  double logit = round == 1 ? config_.base_logit_r1 : config_.base_logit_r2;
  for (std::size_t f = 0; f < kTruthFeatureCount; ++f) {
    logit += config_.feature_weights[f] * z[f];
  }
  return logit;
}

double GroundTruth::responsiveness(const ItemRecord& item) const {
  return 0.5 + std::min(item.likes, 10) / 10.0;
}

double GroundTruth::delay_multiplier(double attach_delay_h) const {
  if (!(attach_delay_h >= 0.0)) throw InputError("negative attach delay");
  if (attach_delay_h <= config_.delay_knee_h) return 1.0;
  if (attach_delay_h >= kDelayFloorHours) return config_.delay_floor;
  const double t = (attach_delay_h - config_.delay_knee_h) /
                   (kDelayFloorHours - config_.delay_knee_h);
  return 1.0 + t * (config_.delay_floor - 1.0);
}

double GroundTruth::purchase_rate(Yen price_yen) const {
  return config_.purchase_time_rate /
         (1.0 + std::log(static_cast<double>(price_yen) / 1000.0 + 1.0));
}

double GroundTruth::true_propensity(const ItemRecord& item,
                                    const CouponConfig& coupon, int round,
                                    double attach_delay_h) const {
  double logit = base_logit(item, round);
  if (!coupon.is_none()) {
    logit += config_.effect_scale * coupon.discount_pct * responsiveness(item) *
             delay_multiplier(attach_delay_h);
  }
  return logistic(logit);
}

double GroundTruth::window_probability(const ItemRecord& item,
                                       const CouponConfig& coupon) const {
  if (coupon.is_none()) return 1.0;
  return -std::expm1(-purchase_rate(item.price_yen) * coupon.validity_hours);
}

double GroundTruth::realized_propensity(const ItemRecord& item,
                                        const CouponConfig& coupon, int round,
                                        double attach_delay_h) const {
  return true_propensity(item, coupon, round, attach_delay_h) *
         window_probability(item, coupon);
}

std::vector<ItemRecord> generate_catalog(const SimConfig& config) {
  validate(config);
  const std::size_t n = config.n_items;
  const auto n_sellers = static_cast<std::uint64_t>(
      std::max(1.0, std::ceil(static_cast<double>(n) / config.items_per_seller)));
  std::vector<ItemRecord> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = substream(config.rng_seed, StreamTag::kCatalog, i);
    std::normal_distribution<double> log_price(config.price_log_mean,
                                               config.price_log_sd);
    std::poisson_distribution<int> likes(config.likes_mean);
    std::normal_distribution<double> demand(0.0, 1.0);

    ItemRecord it;
    char id[32];
    std::snprintf(id, sizeof id, "i%08zu", i);
    it.item_id = id;
    it.price_yen = std::max<Yen>(1, std::llround(std::exp(log_price(g))));
    it.condition = 1 + static_cast<int>(std::min(4.0, std::floor(g.uniform() * 5.0)));
    it.age_days = quantize(g.uniform() * config.max_age_days, 4);
    it.likes = config.likes_mean > 0.0 ? likes(g) : 0;
    it.demand_index = quantize(demand(g), 6);
    it.season_phase = quantize(g.uniform(), 6);
    if (it.season_phase >= 1.0) it.season_phase = 0.0;
    it.key_action_ts = quantize(g.uniform() * 24.0 * 365.0, 3);

    const auto seller = static_cast<std::uint64_t>(
        std::min<double>(n_sellers - 1, std::floor(g.uniform() * n_sellers)));
    std::snprintf(id, sizeof id, "s%07llu", static_cast<unsigned long long>(seller));
    it.seller_id = id;
    auto sg = substream(config.rng_seed, StreamTag::kSeller, seller);
    std::normal_distribution<double> log_ltv(config.ltv_log_mean, config.ltv_log_sd);
    it.seller_ltv_yen = std::max<Yen>(1, std::llround(std::exp(log_ltv(sg))));
    items.push_back(std::move(it));
  }
  return items;
}

OutcomeRecord simulate_round(const GroundTruth& gt, const ItemRecord& item,
                             const CouponConfig& coupon, int round,
                             double attach_delay_h, double sale_uniform,
                             double time_uniform) {
  OutcomeRecord r;
  r.item_id = item.item_id;
  r.round = round;
  r.coupon = coupon;
  r.attach_delay_h = attach_delay_h;
  const double p = gt.true_propensity(item, coupon, round, attach_delay_h);
  if (!(sale_uniform < p)) return r;
  const double t =
      quantize(-std::log1p(-time_uniform) / gt.purchase_rate(item.price_yen), 6);
  // Coupon sales drawn beyond the validity window are recorded as unsold.
  if (!coupon.is_none() && t > coupon.validity_hours) return r;
  r.sold = true;
  r.purchase_delay_h = t;
  r.sale_price_yen = item.price_yen;
  r.coupon_cost_yen = coupon_cost(coupon, item.price_yen);
  return r;
}

RctResult run_rct(const GroundTruth& gt, const std::vector<ItemRecord>& items,
                  const CouponSet& round1_set, const CouponSet& round2_set,
                  const RctAssignment& assignment, std::uint64_t seed) {
  validate(round1_set);
  validate(round2_set);
  const auto probs1 = resolve_assignment(assignment.round1, round1_set, "round 1");
  const auto probs2 = resolve_assignment(assignment.round2, round2_set, "round 2");
  const double max_delay = gt.config().rct_max_attach_delay_h;

  RctResult out;
  out.round1_log.reserve(items.size());
  for (const auto& item : items) {
    const std::uint64_t key = fnv1a64(item.item_id);
    auto g1 = substream(seed, StreamTag::kRct, key, 1);
    const double u_sale = g1.uniform();
    const double u_time = g1.uniform();
    const auto& arm1 = round1_set[draw_arm(g1.uniform(), probs1)];
    const double delay = quantize(g1.uniform() * max_delay, 6);
    auto r1 = simulate_round(gt, item, arm1, 1, delay, u_sale, u_time);
    const bool sold = r1.sold;
    out.round1_log.push_back(std::move(r1));
    if (sold) continue;

    out.survivors.push_back(item.item_id);
    auto g2 = substream(seed, StreamTag::kRct, key, 2);
    const double u_sale2 = g2.uniform();
    const double u_time2 = g2.uniform();
    const auto& arm2 = round2_set[draw_arm(g2.uniform(), probs2)];
    out.round2_log.push_back(simulate_round(gt, item, arm2, 2, 0.0, u_sale2, u_time2));
  }
  std::stable_sort(out.round1_log.begin(), out.round1_log.end(), by_item_id);
  std::stable_sort(out.round2_log.begin(), out.round2_log.end(), by_item_id);
  std::sort(out.survivors.begin(), out.survivors.end());
  return out;
}

RolloutResult rollout_policy(const GroundTruth& gt,
                             const std::vector<ItemRecord>& items,
                             const Policy& policy, std::uint64_t seed) {
  RolloutResult out;
  out.totals.n_items = items.size();
  out.records.reserve(items.size() + items.size() / 2);
  auto account = [&](const OutcomeRecord& r) {
    if (!r.sold) return;
    ++out.totals.sales;
    out.totals.coupon_cost += *r.coupon_cost_yen;
    out.totals.gmv += *r.sale_price_yen;
  };
  for (const auto& item : items) {
    const PolicyChoice choice = policy(item);
    validate(choice.round1);
    validate(choice.round2);
    const std::uint64_t key = fnv1a64(item.item_id);
    auto g1 = substream(seed, StreamTag::kRollout, key, 1);
    const double u_sale = g1.uniform();
    const double u_time = g1.uniform();
    auto r1 = simulate_round(gt, item, choice.round1, 1, choice.attach_delay_h,
                             u_sale, u_time);
    account(r1);
    const bool sold = r1.sold;
    out.records.push_back(std::move(r1));
    if (sold) continue;
    auto g2 = substream(seed, StreamTag::kRollout, key, 2);
    const double u_sale2 = g2.uniform();
    const double u_time2 = g2.uniform();
    auto r2 = simulate_round(gt, item, choice.round2, 2, 0.0, u_sale2, u_time2);
    account(r2);
    out.records.push_back(std::move(r2));
  }
  std::stable_sort(out.records.begin(), out.records.end(), by_item_id);
  return out;
}

std::uint64_t catalog_hash(const std::vector<ItemRecord>& items) {
  std::ostringstream os;
  write_catalog(os, items);
  return fnv1a64(os.str());
}

}  // namespace dscaf
