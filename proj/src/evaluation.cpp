#include "dscaf/evaluation.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "dscaf/csv_io.hpp"
#include "dscaf/errors.hpp"
#include "dscaf/rng.hpp"
#include "json.hpp"

namespace dscaf {
namespace {

using Json = nlohmann::ordered_json;

double rate(std::size_t hits, std::size_t n) {
  return static_cast<double>(hits) / static_cast<double>(n);
}

// Shared by str_lift and cumulative_uplift so that the last curve point and
// the population lift are computed by identical arithmetic.
double proportion_diff(std::size_t sold_t, std::size_t n_t, std::size_t sold_c,
                       std::size_t n_c) {
  return rate(sold_t, n_t) - rate(sold_c, n_c);
}

std::size_t bucket_of(double hours, double width, std::size_t n_buckets) {
  const auto b = static_cast<std::size_t>(std::floor(hours / width));
  return std::min(b, n_buckets - 1);
}

std::size_t bucket_count(double horizon, double width) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / width - 1e-9)));
}

// Round to the 12 significant digits used by every text output.
double r12(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format_real(x).c_str(), nullptr);
}

Json real_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return r12(x);
}

}  // namespace

LiftEstimate str_lift(std::span<const OutcomeRecord> treated,
                      std::span<const OutcomeRecord> control) {
  if (treated.empty() || control.empty()) {
    throw InputError("lift STR needs non-empty treated and control groups");
  }
  auto sold = [](std::span<const OutcomeRecord> g) {
    return static_cast<std::size_t>(
        std::count_if(g.begin(), g.end(), [](const auto& r) { return r.sold; }));
  };
  LiftEstimate e;
  e.n_treated = treated.size();
  e.n_control = control.size();
  const std::size_t st = sold(treated), sc = sold(control);
  e.lift = proportion_diff(st, e.n_treated, sc, e.n_control);
  const double pt = rate(st, e.n_treated), pc = rate(sc, e.n_control);
  e.std_error = std::sqrt(pt * (1.0 - pt) / static_cast<double>(e.n_treated) +
                          pc * (1.0 - pc) / static_cast<double>(e.n_control));
  return e;
}

std::pair<std::vector<OutcomeRecord>, std::vector<OutcomeRecord>> split_by_treatment(
    std::span<const OutcomeRecord> log) {
  std::pair<std::vector<OutcomeRecord>, std::vector<OutcomeRecord>> out;
  for (const auto& r : log) (r.coupon.is_none() ? out.second : out.first).push_back(r);
  return out;
}

std::vector<TableRow> delay_analysis(std::span<const OutcomeRecord> log,
                                     const DelayAnalysisOptions& options) {
  if (!(options.bucket_width_h > 0.0) || !(options.attach_horizon_h > 0.0) ||
      !(options.purchase_horizon_h > 0.0)) {
    throw InputError("bucket width and horizons must be positive");
  }
  const double width = options.bucket_width_h;
  const std::size_t n_attach = bucket_count(options.attach_horizon_h, width);
  const std::size_t n_hour = bucket_count(options.purchase_horizon_h, width);

  struct Counts {
    std::size_t n = 0, sold = 0;
  };
  std::vector<Counts> attach_t(n_attach), attach_c(n_attach);
  std::vector<std::size_t> hour_t(n_hour, 0), hour_c(n_hour, 0);
  std::vector<double> price_sum(n_hour, 0.0);
  std::size_t total_t = 0, total_c = 0;

  for (const auto& r : log) {
    const bool treated = !r.coupon.is_none();
    auto& a = (treated ? attach_t : attach_c)[bucket_of(r.attach_delay_h, width, n_attach)];
    ++a.n;
    (treated ? total_t : total_c) += 1;
    if (!r.sold) continue;
    ++a.sold;
    if (*r.purchase_delay_h >= n_hour * width) continue;
    const std::size_t h = bucket_of(*r.purchase_delay_h, width, n_hour);
    if (treated) {
      ++hour_t[h];
      price_sum[h] += static_cast<double>(*r.sale_price_yen);
    } else {
      ++hour_c[h];
    }
  }

  std::vector<TableRow> rows;
  for (std::size_t b = 0; b < n_attach; ++b) {
    TableRow row{b * width, "lift_str_by_attach_delay", std::nullopt,
                 attach_t[b].n + attach_c[b].n};
    if (attach_t[b].n > 0 && attach_c[b].n > 0) {
      row.value = proportion_diff(attach_t[b].sold, attach_t[b].n, attach_c[b].sold,
                                  attach_c[b].n);
    }
    rows.push_back(std::move(row));
  }
  auto hourly = [&](const char* metric, const std::vector<std::size_t>& hits,
                    std::size_t total) {
    for (std::size_t b = 0; b < n_hour; ++b) {
      TableRow row{b * width, metric, std::nullopt, total};
      if (total > 0) row.value = rate(hits[b], total);
      rows.push_back(std::move(row));
    }
  };
  hourly("str_treated_by_hour", hour_t, total_t);
  hourly("str_control_by_hour", hour_c, total_c);
  for (std::size_t b = 0; b < n_hour; ++b) {
    TableRow row{b * width, "lift_str_by_hour", std::nullopt, total_t + total_c};
    if (total_t > 0 && total_c > 0) {
      row.value = proportion_diff(hour_t[b], total_t, hour_c[b], total_c);
    }
    rows.push_back(std::move(row));
  }
  for (std::size_t b = 0; b < n_hour; ++b) {
    TableRow row{b * width, "aov_by_hour", std::nullopt, hour_t[b]};
    if (hour_t[b] > 0) row.value = price_sum[b] / static_cast<double>(hour_t[b]);
    rows.push_back(std::move(row));
  }
  return rows;
}

LiftEstimate lift_in_attach_window(std::span<const OutcomeRecord> log, double lo,
                                   double hi) {
  std::vector<OutcomeRecord> treated, control;
  for (const auto& r : log) {
    if (r.attach_delay_h < lo || r.attach_delay_h >= hi) continue;
    (r.coupon.is_none() ? control : treated).push_back(r);
  }
  return str_lift(treated, control);
}

UpliftCurve cumulative_uplift(std::span<const double> scores,
                              std::span<const std::uint8_t> treated,
                              std::span<const std::uint8_t> sold,
                              std::size_t deciles) {
  const std::size_t n = scores.size();
  if (treated.size() != n || sold.size() != n) {
    throw InputError("scores, treatment flags and outcomes must align");
  }
  if (deciles == 0) throw InputError("need at least one curve point");
  const auto n_treated =
      static_cast<std::size_t>(std::count(treated.begin(), treated.end(), 1));
  if (n_treated == 0 || n_treated == n) {
    throw InputError("cumulative uplift needs both treated and control items");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  UpliftCurve curve;
  std::size_t taken = 0, nt = 0, nc = 0, st = 0, sc = 0;
  for (std::size_t d = 1; d <= deciles; ++d) {
    const std::size_t upto = d == deciles ? n : (n * d + deciles - 1) / deciles;
    for (; taken < upto; ++taken) {
      const std::size_t i = order[taken];
      if (treated[i]) {
        ++nt;
        st += sold[i] ? 1 : 0;
      } else {
        ++nc;
        sc += sold[i] ? 1 : 0;
      }
    }
    CurvePoint p;
    p.fraction = d == deciles ? 1.0 : static_cast<double>(d) / static_cast<double>(deciles);
    if (nt > 0 && nc > 0) p.uplift = proportion_diff(st, nt, sc, nc);
    curve.points.push_back(p);
  }
  curve.random_reference = curve.points.back().uplift;
  return curve;
}

std::optional<double> curve_slope(const UpliftCurve& curve) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& p : curve.points) {
    if (!p.uplift) continue;
    ++m;
    sx += p.fraction;
    sy += *p.uplift;
    sxx += p.fraction * p.fraction;
    sxy += p.fraction * *p.uplift;
  }
  if (m < 2) return std::nullopt;
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  return (m * sxy - sx * sy) / denom;
}

std::vector<UpliftCurve> bootstrap_replicates(std::size_t n_items,
                                              const CurveFn& curve_fn,
                                              std::size_t replicates,
                                              std::uint64_t seed) {
  if (replicates < 2) throw InputError("bootstrap needs at least two replicates");
  std::vector<UpliftCurve> out;
  out.reserve(replicates);
  std::vector<std::size_t> idx(n_items);
  for (std::size_t b = 0; b < replicates; ++b) {
    auto g = substream(seed, StreamTag::kBootstrap, b);
    for (auto& i : idx) {
      i = std::min(n_items - 1,
                   static_cast<std::size_t>(g.uniform() * static_cast<double>(n_items)));
    }
    out.push_back(curve_fn(idx));
  }
  return out;
}

std::vector<std::optional<std::pair<double, double>>> band_from_replicates(
    const std::vector<UpliftCurve>& replicates) {
  std::size_t n_points = 0;
  for (const auto& c : replicates) n_points = std::max(n_points, c.points.size());
  std::vector<std::optional<std::pair<double, double>>> band(n_points);
  std::vector<double> values;
  for (std::size_t p = 0; p < n_points; ++p) {
    values.clear();
    for (const auto& c : replicates) {
      if (p < c.points.size() && c.points[p].uplift) values.push_back(*c.points[p].uplift);
    }
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    const double last = static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(0.05 * last + 1e-9));
    const auto hi = static_cast<std::size_t>(std::ceil(0.95 * last - 1e-9));
    band[p] = std::make_pair(values[lo], values[hi]);
  }
  return band;
}

std::vector<std::optional<std::pair<double, double>>> bootstrap_band(
    std::size_t n_items, const CurveFn& curve_fn, std::size_t replicates,
    std::uint64_t seed) {
  return band_from_replicates(bootstrap_replicates(n_items, curve_fn, replicates, seed));
}

void attach_band(UpliftCurve& curve,
                 const std::vector<std::optional<std::pair<double, double>>>& band) {
  for (std::size_t p = 0; p < curve.points.size() && p < band.size(); ++p) {
    if (!band[p]) continue;
    curve.points[p].lo = band[p]->first;
    curve.points[p].hi = band[p]->second;
  }
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InputError("spearman needs two aligned samples of size >= 2");
  }
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double paired_one_sided_p(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InputError("paired test needs two aligned samples of size >= 2");
  }
  const double n = static_cast<double>(a.size());
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) return mean > 0.0 ? 0.0 : 1.0;
  const double t = mean / (sd / std::sqrt(n));
  const boost::math::students_t dist(n - 1.0);
  return boost::math::cdf(boost::math::complement(dist, t));
}

std::string to_string(InfeasibleFallback fallback) {
  return fallback == InfeasibleFallback::kMaxLift ? "max_lift" : "no_coupon";
}

InfeasibleFallback infeasible_fallback_from_string(const std::string& name) {
  if (name == "max_lift") return InfeasibleFallback::kMaxLift;
  if (name == "no_coupon") return InfeasibleFallback::kNoCoupon;
  throw InputError("unknown infeasible fallback '" + name + "'");
}

double realized_roi(std::size_t sales, std::size_t holdout_sales, double mean_ltv,
                    Yen coupon_cost) {
  if (coupon_cost == 0) return kInfiniteRoi;
  const double incremental =
      static_cast<double>(sales) - static_cast<double>(holdout_sales);
  return incremental * mean_ltv / static_cast<double>(coupon_cost);
}

PolicyChoice plan_to_choice(const AllocationPlan& plan, InfeasibleFallback fallback) {
  if (!plan.feasible && fallback == InfeasibleFallback::kNoCoupon) {
    return {CouponConfig::none(), plan.attach_delay_h, CouponConfig::none()};
  }
  return {plan.round1_coupon, plan.attach_delay_h, plan.round2_coupon};
}

namespace {

std::size_t pick(double u, const std::vector<double>& probs) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

std::vector<double> arm_probs(const std::vector<double>& given, const CouponSet& set) {
  if (given.empty()) return std::vector<double>(set.size(), 1.0 / set.size());
  if (given.size() != set.size()) {
    throw InputError("random strategy needs one probability per arm");
  }
  double total = 0.0;
  for (const double p : given) {
    if (!(p >= 0.0)) throw InputError("negative arm probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("arm probabilities must sum to 1");
  return given;
}

StrategyMetrics metrics_of(const RolloutTotals& t, std::size_t holdout_sales,
                           double mean_ltv) {
  StrategyMetrics m;
  m.sales = t.sales;
  m.sales_rate = t.n_items ? rate(t.sales, t.n_items) : 0.0;
  m.lift_str = t.n_items ? m.sales_rate - rate(holdout_sales, t.n_items) : 0.0;
  m.total_coupon_cost = t.coupon_cost;
  m.gmv = t.gmv;
  m.roi_realized = realized_roi(t.sales, holdout_sales, mean_ltv, t.coupon_cost);
  return m;
}

AggregateMetrics aggregate(const std::vector<SeedReport>& seeds,
                           StrategyMetrics SeedReport::*field) {
  AggregateMetrics a;
  if (seeds.empty()) return a;
  for (const auto& s : seeds) {
    const StrategyMetrics& m = s.*field;
    a.sales_rate += m.sales_rate;
    a.lift_str += m.lift_str;
    a.coupon_cost += static_cast<double>(m.total_coupon_cost);
    a.gmv += static_cast<double>(m.gmv);
    a.roi_realized += m.roi_realized;
  }
  const double n = static_cast<double>(seeds.size());
  a.sales_rate /= n;
  a.lift_str /= n;
  a.coupon_cost /= n;
  a.gmv /= n;
  a.roi_realized /= n;
  return a;
}

}  // namespace

ComparisonReport compare_strategies(const SimConfig& sim, const PredictorPair& pair,
                                    const PolicyConstraint& constraint,
                                    std::span<const std::uint64_t> seeds,
                                    const CompareOptions& options) {
  validate(pair);
  validate(constraint);
  const auto probs1 = arm_probs(options.random_round1, pair.round1_set);
  const auto probs2 = arm_probs(options.random_round2, pair.round2_set);
  const GroundTruth gt(sim);

  ComparisonReport report;
  report.constraint = constraint;
  report.options = options;
  for (const std::uint64_t seed : seeds) {
    SimConfig cfg = sim;
    cfg.n_items = options.n_items;
    cfg.rng_seed = seed;
    const auto catalog = generate_catalog(cfg);

    SeedReport sr;
    sr.seed = seed;
    sr.n_items = catalog.size();
    sr.catalog_hash = catalog_hash(catalog);
    double ltv_sum = 0.0;
    for (const auto& it : catalog) ltv_sum += static_cast<double>(it.seller_ltv_yen);
    sr.mean_ltv = catalog.empty() ? 0.0 : ltv_sum / static_cast<double>(catalog.size());

    auto run = [&](const Policy& policy) {
      if (catalog_hash(catalog) != sr.catalog_hash) {
        throw ContractError("catalog changed between strategy rollouts");
      }
      return rollout_policy(gt, catalog, policy, seed).totals;
    };

    const double delay = options.attach_delay_h;
    const auto holdout = run([&](const ItemRecord&) {
      return PolicyChoice{CouponConfig::none(), delay, CouponConfig::none()};
    });
    const auto random = run([&](const ItemRecord& item) {
      auto g = substream(seed, StreamTag::kRandomPolicy, fnv1a64(item.item_id));
      const auto& a1 = pair.round1_set[pick(g.uniform(), probs1)];
      const auto& a2 = pair.round2_set[pick(g.uniform(), probs2)];
      return PolicyChoice{a1, delay, a2};
    });
    const auto independent = run([&](const ItemRecord& item) {
      const auto preds = predict_item(pair, item, delay);
      return plan_to_choice(allocate_independent(preds, item, pair.round1_set,
                                                 pair.round2_set, constraint, delay),
                            options.fallback);
    });
    const auto dscaf = run([&](const ItemRecord& item) {
      const auto preds = predict_item(pair, item, delay);
      return plan_to_choice(
          allocate(preds, item, pair.round1_set, pair.round2_set, constraint, delay),
          options.fallback);
    });

    sr.holdout = metrics_of(holdout, holdout.sales, sr.mean_ltv);
    sr.random = metrics_of(random, holdout.sales, sr.mean_ltv);
    sr.independent = metrics_of(independent, holdout.sales, sr.mean_ltv);
    sr.dscaf = metrics_of(dscaf, holdout.sales, sr.mean_ltv);
    report.seeds.push_back(sr);
  }

  report.holdout = aggregate(report.seeds, &SeedReport::holdout);
  report.random = aggregate(report.seeds, &SeedReport::random);
  report.independent = aggregate(report.seeds, &SeedReport::independent);
  report.dscaf = aggregate(report.seeds, &SeedReport::dscaf);

  std::vector<double> a, b;
  for (const auto& s : report.seeds) {
    if (std::isfinite(s.dscaf.roi_realized) && std::isfinite(s.independent.roi_realized)) {
      a.push_back(s.dscaf.roi_realized);
      b.push_back(s.independent.roi_realized);
    }
  }
  if (a.size() >= 2 && a.size() == report.seeds.size()) {
    report.dscaf_vs_independent_p = paired_one_sided_p(a, b);
  }
  return report;
}

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << "bucket_start_h,metric,value,n\n";
  for (const auto& r : rows) {
    out << format_real(r.bucket_start_h) << ',' << r.metric << ','
        << format_real(r.value) << ',' << r.n << '\n';
  }
}

void write_curve_csv(std::ostream& out, const UpliftCurve& curve) {
  out << "fraction,uplift,lo,hi\n";
  for (const auto& p : curve.points) {
    out << format_real(p.fraction) << ',' << format_real(p.uplift) << ','
        << format_real(p.lo) << ',' << format_real(p.hi) << '\n';
  }
}

namespace {

Json metrics_json(const StrategyMetrics& m) {
  Json j;
  j["sales"] = m.sales;
  j["sales_rate"] = r12(m.sales_rate);
  j["lift_str"] = r12(m.lift_str);
  j["total_coupon_cost"] = m.total_coupon_cost;
  j["gmv"] = m.gmv;
  j["roi_realized"] = real_or_inf(m.roi_realized);
  return j;
}

Json aggregate_json(const AggregateMetrics& m) {
  Json j;
  j["sales_rate"] = r12(m.sales_rate);
  j["lift_str"] = r12(m.lift_str);
  j["coupon_cost"] = r12(m.coupon_cost);
  j["gmv"] = r12(m.gmv);
  j["roi_realized"] = real_or_inf(m.roi_realized);
  return j;
}

}  // namespace

std::string report_to_json(const ComparisonReport& report) {
  Json j;
  j["format"] = "dscaf-comparison";
  j["version"] = 1;
  Json c;
  c["lift_threshold"] = r12(report.constraint.lift_threshold);
  if (report.constraint.ltv_override) {
    c["ltv_override"] = *report.constraint.ltv_override;
  } else {
    c["ltv_override"] = nullptr;
  }
  j["constraint"] = c;
  Json o;
  o["n_items"] = report.options.n_items;
  o["attach_delay_h"] = r12(report.options.attach_delay_h);
  o["infeasible_fallback"] = to_string(report.options.fallback);
  j["options"] = o;
  Json seeds = Json::array();
  for (const auto& s : report.seeds) {
    Json js;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(s.catalog_hash));
    js["seed"] = s.seed;
    js["catalog_hash"] = hash;
    js["n_items"] = s.n_items;
    js["mean_ltv"] = r12(s.mean_ltv);
    js["holdout"] = metrics_json(s.holdout);
    js["random"] = metrics_json(s.random);
    js["independent"] = metrics_json(s.independent);
    js["dscaf"] = metrics_json(s.dscaf);
    seeds.push_back(std::move(js));
  }
  j["seeds"] = std::move(seeds);
  Json agg;
  agg["holdout"] = aggregate_json(report.holdout);
  agg["random"] = aggregate_json(report.random);
  agg["independent"] = aggregate_json(report.independent);
  agg["dscaf"] = aggregate_json(report.dscaf);
  j["aggregate"] = std::move(agg);
  j["dscaf_vs_independent_roi_p"] = r12(report.dscaf_vs_independent_p);
  return j.dump(2) + "\n";
}

}  // namespace dscaf
