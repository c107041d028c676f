#include "dscaf/uplift.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include "dscaf/csv_io.hpp"
#include "dscaf/errors.hpp"
#include "json.hpp"

namespace dscaf {
namespace {

using Json = nlohmann::ordered_json;

Json coupon_to_json(const CouponConfig& c) {
  return {{"discount_pct", c.discount_pct},
          {"validity_hours", c.validity_hours},
          {"cap_yen", c.cap_yen}};
}

CouponSet set_from_json(const Json& arms, SetPurpose purpose) {
  CouponSet set;
  set.purpose = purpose;
  for (const auto& a : arms) {
    set.arms.push_back({a.at("discount_pct").get<int>(),
                        a.at("validity_hours").get<double>(),
                        a.at("cap_yen").get<Yen>()});
  }
  validate(set);
  return set;
}

std::string read_all(const std::filesystem::path& path) {
  auto in = open_input(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string to_string(IpwVariant variant) {
  return variant == IpwVariant::kMean ? "mean" : "applied";
}

IpwVariant ipw_variant_from_string(const std::string& name) {
  if (name == "mean") return IpwVariant::kMean;
  if (name == "applied") return IpwVariant::kApplied;
  throw InputError("unknown ipw variant '" + name + "'");
}

void validate(const PredictorPair& pair) {
  validate(pair.round1_set);
  validate(pair.round2_set);
  if (pair.first.schema_id != kRound1Schema || pair.first.n_features != kRound1Width) {
    throw SchemaMismatchError("first-round model has schema '" +
                              pair.first.schema_id + "', expected " + kRound1Schema);
  }
  if (pair.second.schema_id != kRound2Schema ||
      pair.second.n_features != kRound2Width) {
    throw SchemaMismatchError("second-round model has schema '" +
                              pair.second.schema_id + "', expected " + kRound2Schema);
  }
  if (!(pair.ipw_epsilon > 0.0 && pair.ipw_epsilon <= 1.0)) {
    throw InputError("ipw_epsilon must lie in (0, 1]");
  }
}

Dataset round1_dataset(std::span<const OutcomeRecord> round1_log,
                       const Catalog& catalog) {
  Dataset data;
  data.schema_id = kRound1Schema;
  data.n_cols = kRound1Width;
  for (const auto& r : round1_log) {
    if (r.round != 1) throw InputError("round-1 log holds a round-2 record");
    data.add(encode_round1(catalog.at(r.item_id), r.coupon, r.attach_delay_h), r.sold);
  }
  return data;
}

Model fit_first_round(std::span<const OutcomeRecord> round1_log,
                      const Catalog& catalog, const LearnerConfig& config) {
  bool has_control = false, has_treated = false;
  for (const auto& r : round1_log) {
    (r.coupon.is_none() ? has_control : has_treated) = true;
  }
  if (!has_control || !has_treated) {
    throw IdentifiabilityError(
        "round-1 log must contain the no-coupon arm and at least one coupon "
        "arm; treatment effects are unidentifiable otherwise");
  }
  return train(round1_dataset(round1_log, catalog), config);
}

double ipw_weight(double p_sold, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw InputError("ipw epsilon must lie in (0, 1]");
  }
  return 1.0 / std::clamp(1.0 - p_sold, epsilon, 1.0);
}

double mean_round1_propensity(const Model& first, const CouponSet& round1_set,
                              const ItemRecord& item, double attach_delay_h) {
  double sum = 0.0;
  for (const auto& arm : round1_set.arms) {
    sum += predict(first, encode_round1(item, arm, attach_delay_h));
  }
  return sum / static_cast<double>(round1_set.size());
}

namespace {

double survivor_weight(const Model& first, const CouponSet& round1_set,
                       const OutcomeRecord& r1, const ItemRecord& item,
                       double epsilon, IpwVariant variant) {
  const double p =
      variant == IpwVariant::kMean
          ? mean_round1_propensity(first, round1_set, item, r1.attach_delay_h)
          : predict(first, encode_round1(item, r1.coupon, r1.attach_delay_h));
  return ipw_weight(p, epsilon);
}

}  // namespace

std::vector<double> ipw_weights(const Model& first, const CouponSet& round1_set,
                                std::span<const OutcomeRecord> survivor_round1,
                                const Catalog& catalog, double epsilon,
                                IpwVariant variant) {
  std::vector<double> out;
  out.reserve(survivor_round1.size());
  for (const auto& r : survivor_round1) {
    out.push_back(survivor_weight(first, round1_set, r, catalog.at(r.item_id),
                                  epsilon, variant));
  }
  return out;
}

Dataset round2_dataset(std::span<const OutcomeRecord> round2_log,
                       std::span<const OutcomeRecord> round1_log,
                       const Catalog& catalog, const Model& first,
                       const CouponSet& round1_set, double epsilon,
                       IpwVariant variant) {
  std::unordered_map<std::string, const OutcomeRecord*> first_records;
  first_records.reserve(round1_log.size());
  for (const auto& r : round1_log) first_records[r.item_id] = &r;

  Dataset data;
  data.schema_id = kRound2Schema;
  data.n_cols = kRound2Width;
  for (const auto& r : round2_log) {
    if (r.round != 2) throw InputError("round-2 log holds a round-1 record");
    const auto it = first_records.find(r.item_id);
    if (it == first_records.end()) {
      throw InputError("round-2 item " + r.item_id + " has no round-1 record");
    }
    if (it->second->sold) {
      throw InputError("round-2 item " + r.item_id + " already sold in round 1");
    }
    const ItemRecord& item = catalog.at(r.item_id);
    const double attach = it->second->attach_delay_h;
    const double mean_p1 = mean_round1_propensity(first, round1_set, item, attach);
    const double w = survivor_weight(first, round1_set, *it->second, item,
                                     epsilon, variant);
    data.add(encode_round2(item, r.coupon, mean_p1), r.sold, w);
  }
  return data;
}

Model fit_second_round(std::span<const OutcomeRecord> round2_log,
                       std::span<const OutcomeRecord> round1_log,
                       const Catalog& catalog, const Model& first,
                       const CouponSet& round1_set, const LearnerConfig& config,
                       double epsilon, IpwVariant variant) {
  if (round2_log.empty()) {
    throw InputError("second-round training needs a non-empty survivor log");
  }
  return train(round2_dataset(round2_log, round1_log, catalog, first, round1_set,
                              epsilon, variant),
               config);
}

ItemPredictions predict_item(const PredictorPair& pair, const ItemRecord& item,
                             double attach_delay_h) {
  ItemPredictions out;
  out.item_id = item.item_id;
  out.p1.reserve(pair.round1_set.size());
  double sum = 0.0;
  for (const auto& arm : pair.round1_set.arms) {
    out.p1.push_back(predict(pair.first, encode_round1(item, arm, attach_delay_h)));
    sum += out.p1.back();
  }
  out.mean_p1 = sum / static_cast<double>(out.p1.size());
  out.p2.reserve(pair.round2_set.size());
  for (const auto& arm : pair.round2_set.arms) {
    out.p2.push_back(predict(pair.second, encode_round2(item, arm, out.mean_p1)));
  }
  out.p_star = out.p1[0] + (1.0 - out.p1[0]) * out.p2[0];
  return out;
}

void save_pair(const PredictorPair& pair, const std::filesystem::path& dir) {
  validate(pair);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_model(pair.first, dir / "first.model.json");
  save_model(pair.second, dir / "second.model.json");

  Json j;
  j["format"] = "dscaf-pair";
  j["version"] = kPairFormatVersion;
  j["first_model"] = "first.model.json";
  j["second_model"] = "second.model.json";
  j["first_schema"] = pair.first.schema_id;
  j["second_schema"] = pair.second.schema_id;
  j["ipw_epsilon"] = pair.ipw_epsilon;
  j["ipw_variant"] = to_string(pair.ipw_variant);
  Json r1 = Json::array(), r2 = Json::array();
  for (const auto& a : pair.round1_set.arms) r1.push_back(coupon_to_json(a));
  for (const auto& a : pair.round2_set.arms) r2.push_back(coupon_to_json(a));
  j["round1_set"] = std::move(r1);
  j["round2_set"] = std::move(r2);
  auto out = open_output(dir / "pair.json");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + (dir / "pair.json").string());
}

PredictorPair load_pair(const std::filesystem::path& dir) {
  PredictorPair pair;
  try {
    const Json j = Json::parse(read_all(dir / "pair.json"));
    if (j.at("format") != "dscaf-pair") throw InputError("not a predictor pair manifest");
    if (j.at("version").get<int>() != kPairFormatVersion) {
      throw SchemaMismatchError("unsupported predictor pair format version");
    }
    pair.first = load_model(dir / j.at("first_model").get<std::string>());
    pair.second = load_model(dir / j.at("second_model").get<std::string>());
    if (pair.first.schema_id != j.at("first_schema").get<std::string>() ||
        pair.second.schema_id != j.at("second_schema").get<std::string>()) {
      throw SchemaMismatchError("pair manifest schema ids disagree with the models");
    }
    pair.ipw_epsilon = j.at("ipw_epsilon").get<double>();
    pair.ipw_variant = ipw_variant_from_string(j.at("ipw_variant").get<std::string>());
    pair.round1_set = set_from_json(j.at("round1_set"), SetPurpose::kRound1);
    pair.round2_set = set_from_json(j.at("round2_set"), SetPurpose::kRound2);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed predictor pair manifest: ") + e.what());
  }
  validate(pair);
  return pair;
}

}  // namespace dscaf
