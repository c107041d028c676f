#include "dscaf/config.hpp"

#include <charconv>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "dscaf/csv_io.hpp"
#include "dscaf/errors.hpp"

namespace dscaf {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw InputError("expected a decimal number, got '" + s + "'");
  }
  return v;
}

template <typename Int>
Int to_int(const std::string& s) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw InputError("expected an integer, got '" + s + "'");
  }
  return v;
}

std::vector<double> to_reals(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_real(item));
  return out;
}

template <typename Int>
std::vector<Int> to_ints(const std::string& s) {
  std::vector<Int> out;
  for (const auto& item : split_list(s)) out.push_back(to_int<Int>(item));
  return out;
}

std::vector<double> to_assignment(const std::string& s) {
  if (trim(s) == "uniform") return {};
  return to_reals(s);
}

CouponSet to_set(const std::string& s, SetPurpose purpose) {
  CouponSet set{parse_coupon_list(s), purpose};
  validate(set);
  return set;
}

template <typename T>
std::vector<T> non_empty(std::vector<T> v) {
  if (v.empty()) throw InputError("list must not be empty");
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // simulator
    t["simulator.n_items"] = [](RunConfig& c, const std::string& v) { c.simulator.n_items = to_int<std::size_t>(v); };
    t["simulator.rng_seed"] = [](RunConfig& c, const std::string& v) { c.simulator.rng_seed = to_int<std::uint64_t>(v); };
    t["simulator.base_logit_r1"] = [](RunConfig& c, const std::string& v) { c.simulator.base_logit_r1 = to_real(v); };
    t["simulator.base_logit_r2"] = [](RunConfig& c, const std::string& v) { c.simulator.base_logit_r2 = to_real(v); };
    t["simulator.feature_weights"] = [](RunConfig& c, const std::string& v) {
      const auto w = to_reals(v);
      if (w.size() != kTruthFeatureCount) {
        throw InputError("expected " + std::to_string(kTruthFeatureCount) + " weights");
      }
      std::copy(w.begin(), w.end(), c.simulator.feature_weights.begin());
    };
    t["simulator.effect_scale"] = [](RunConfig& c, const std::string& v) { c.simulator.effect_scale = to_real(v); };
    t["simulator.delay_knee_h"] = [](RunConfig& c, const std::string& v) { c.simulator.delay_knee_h = to_real(v); };
    t["simulator.delay_floor"] = [](RunConfig& c, const std::string& v) { c.simulator.delay_floor = to_real(v); };
    t["simulator.purchase_time_rate"] = [](RunConfig& c, const std::string& v) { c.simulator.purchase_time_rate = to_real(v); };
    t["simulator.ltv_lognormal"] = [](RunConfig& c, const std::string& v) {
      const auto p = to_reals(v);
      if (p.size() != 2) throw InputError("expected 'mu, sigma'");
      c.simulator.ltv_log_mean = p[0];
      c.simulator.ltv_log_sd = p[1];
    };
    t["simulator.price_lognormal"] = [](RunConfig& c, const std::string& v) {
      const auto p = to_reals(v);
      if (p.size() != 2) throw InputError("expected 'mu, sigma'");
      c.simulator.price_log_mean = p[0];
      c.simulator.price_log_sd = p[1];
    };
    t["simulator.likes_mean"] = [](RunConfig& c, const std::string& v) { c.simulator.likes_mean = to_real(v); };
    t["simulator.max_age_days"] = [](RunConfig& c, const std::string& v) { c.simulator.max_age_days = to_real(v); };
    t["simulator.items_per_seller"] = [](RunConfig& c, const std::string& v) { c.simulator.items_per_seller = to_real(v); };
    t["simulator.rct_max_attach_delay_h"] = [](RunConfig& c, const std::string& v) { c.simulator.rct_max_attach_delay_h = to_real(v); };
    // coupons
    t["coupons.round1"] = [](RunConfig& c, const std::string& v) { c.round1_set = to_set(v, SetPurpose::kRound1); };
    t["coupons.round2"] = [](RunConfig& c, const std::string& v) { c.round2_set = to_set(v, SetPurpose::kRound2); };
    // rct
    t["rct.round1_assignment"] = [](RunConfig& c, const std::string& v) { c.assignment.round1 = to_assignment(v); };
    t["rct.round2_assignment"] = [](RunConfig& c, const std::string& v) { c.assignment.round2 = to_assignment(v); };
    // learner
    t["learner.kind"] = [](RunConfig& c, const std::string& v) { c.learner.kind = learner_kind_from_string(v); };
    t["learner.learning_rate"] = [](RunConfig& c, const std::string& v) { c.learner.learning_rates = non_empty(to_reals(v)); };
    t["learner.l2"] = [](RunConfig& c, const std::string& v) { c.learner.l2 = non_empty(to_reals(v)); };
    t["learner.epochs"] = [](RunConfig& c, const std::string& v) { c.learner.epochs = non_empty(to_ints<int>(v)); };
    t["learner.max_stumps"] = [](RunConfig& c, const std::string& v) { c.learner.max_stumps = to_int<int>(v); };
    t["learner.k_folds"] = [](RunConfig& c, const std::string& v) { c.learner.k_folds = to_int<std::size_t>(v); };
    t["learner.seed"] = [](RunConfig& c, const std::string& v) { c.learner.seed = to_int<std::uint64_t>(v); };
    // policy
    t["policy.lift_threshold"] = [](RunConfig& c, const std::string& v) { c.policy.lift_threshold = to_real(v); };
    t["policy.attach_delay_h"] = [](RunConfig& c, const std::string& v) { c.policy.attach_delay_h = to_real(v); };
    t["policy.ipw_epsilon"] = [](RunConfig& c, const std::string& v) { c.policy.ipw_epsilon = to_real(v); };
    t["policy.ipw_variant"] = [](RunConfig& c, const std::string& v) { c.policy.ipw_variant = ipw_variant_from_string(v); };
    t["policy.infeasible_fallback"] = [](RunConfig& c, const std::string& v) {
      c.policy.infeasible_fallback = infeasible_fallback_from_string(v);
    };
    t["policy.ltv_override"] = [](RunConfig& c, const std::string& v) {
      if (v == "none") {
        c.policy.ltv_override.reset();
      } else {
        c.policy.ltv_override = to_int<Yen>(v);
      }
    };
    // evaluation
    t["evaluation.deciles"] = [](RunConfig& c, const std::string& v) { c.evaluation.deciles = to_int<std::size_t>(v); };
    t["evaluation.bootstrap_b"] = [](RunConfig& c, const std::string& v) { c.evaluation.bootstrap_b = to_int<std::size_t>(v); };
    t["evaluation.bootstrap_seed"] = [](RunConfig& c, const std::string& v) { c.evaluation.bootstrap_seed = to_int<std::uint64_t>(v); };
    t["evaluation.bucket_width_h"] = [](RunConfig& c, const std::string& v) { c.evaluation.bucket_width_h = to_real(v); };
    t["evaluation.seeds"] = [](RunConfig& c, const std::string& v) { c.evaluation.seeds = non_empty(to_ints<std::uint64_t>(v)); };
    t["evaluation.compare_items"] = [](RunConfig& c, const std::string& v) { c.evaluation.compare_items = to_int<std::size_t>(v); };
    // io
    t["io.catalog"] = [](RunConfig& c, const std::string& v) { c.io.catalog = v; };
    t["io.round1_log"] = [](RunConfig& c, const std::string& v) { c.io.round1_log = v; };
    t["io.round2_log"] = [](RunConfig& c, const std::string& v) { c.io.round2_log = v; };
    t["io.model_dir"] = [](RunConfig& c, const std::string& v) { c.io.model_dir = v; };
    t["io.grid_table"] = [](RunConfig& c, const std::string& v) { c.io.grid_table = v; };
    t["io.plans"] = [](RunConfig& c, const std::string& v) { c.io.plans = v; };
    t["io.delay_tables"] = [](RunConfig& c, const std::string& v) { c.io.delay_tables = v; };
    t["io.uplift_curve"] = [](RunConfig& c, const std::string& v) { c.io.uplift_curve = v; };
    t["io.evaluation_summary"] = [](RunConfig& c, const std::string& v) { c.io.evaluation_summary = v; };
    t["io.comparison"] = [](RunConfig& c, const std::string& v) { c.io.comparison = v; };
    return t;
  }();
  return table;
}

// Whole-config checks that no single key can make.
void validate_run_config(const RunConfig& c) {
  auto check = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(what, 0, key);
  };
  try {
    validate(c.simulator);
  } catch (const InputError& e) {
    throw ConfigError(e.what(), 0, "simulator");
  }
  auto check_assignment = [&](const std::vector<double>& p, const CouponSet& set,
                              const std::string& key) {
    if (p.empty()) return;
    check(p.size() == set.size(), key, "needs one probability per coupon arm");
    double total = 0.0;
    for (const double x : p) {
      check(x >= 0.0, key, "probabilities must be non-negative");
      total += x;
    }
    check(std::abs(total - 1.0) <= 1e-9, key, "probabilities must sum to 1");
  };
  check_assignment(c.assignment.round1, c.round1_set, "rct.round1_assignment");
  check_assignment(c.assignment.round2, c.round2_set, "rct.round2_assignment");
  check(c.learner.k_folds >= 2, "learner.k_folds", "must be at least 2");
  for (const auto& cfg : c.learner.expand()) {
    try {
      validate(cfg);
    } catch (const InputError& e) {
      throw ConfigError(e.what(), 0, "learner");
    }
  }
  try {
    validate(c.policy.constraint());
  } catch (const InputError& e) {
    throw ConfigError(e.what(), 0, "policy");
  }
  check(c.policy.attach_delay_h >= 0.0, "policy.attach_delay_h", "must be non-negative");
  check(c.policy.ipw_epsilon > 0.0 && c.policy.ipw_epsilon <= 1.0,
        "policy.ipw_epsilon", "must lie in (0, 1]");
  check(c.evaluation.deciles >= 1, "evaluation.deciles", "must be positive");
  check(c.evaluation.bootstrap_b >= 2, "evaluation.bootstrap_b", "must be at least 2");
  check(c.evaluation.bucket_width_h > 0.0, "evaluation.bucket_width_h", "must be positive");
  const std::vector<std::string> paths = {
      c.io.catalog,      c.io.round1_log,   c.io.round2_log,
      c.io.model_dir,    c.io.grid_table,   c.io.plans,
      c.io.delay_tables, c.io.uplift_curve, c.io.evaluation_summary,
      c.io.comparison};
  std::set<std::string> seen;
  for (const auto& p : paths) {
    check(!p.empty(), "io", "paths must not be empty");
    check(p != "manifest.json", "io", "manifest.json is reserved");
    check(seen.insert(p).second, "io", "path '" + p + "' is used twice");
  }
}

}  // namespace

std::vector<LearnerConfig> LearnerGrid::expand() const {
  std::vector<LearnerConfig> out;
  for (const double lr : learning_rates) {
    for (const double reg : l2) {
      for (const int ep : epochs) {
        LearnerConfig c;
        c.kind = kind;
        c.learning_rate = lr;
        c.l2 = reg;
        c.epochs = ep;
        c.max_stumps = max_stumps;
        c.rng_seed = seed;
        out.push_back(c);
      }
    }
  }
  return out;
}

std::vector<CouponConfig> parse_coupon_list(const std::string& text) {
  std::vector<CouponConfig> arms;
  for (const auto& token : split_list(text)) {
    if (token == "none") {
      arms.push_back(CouponConfig::none());
      continue;
    }
    const auto a = token.find('/');
    const auto b = a == std::string::npos ? a : token.find('/', a + 1);
    if (b == std::string::npos || token.find('/', b + 1) != std::string::npos) {
      throw InputError("coupon '" + token + "' is not of the form pct/validity_h/cap");
    }
    arms.push_back(make_coupon(to_int<int>(trim(token.substr(0, a))),
                               to_real(trim(token.substr(a + 1, b - a - 1))),
                               to_int<Yen>(trim(token.substr(b + 1)))));
  }
  return arms;
}

RunConfig default_run_config() {
  RunConfig c;
  c.round1_set = {{CouponConfig::none(), make_coupon(5, 3, 1000), make_coupon(5, 10, 1000),
                   make_coupon(10, 10, 2000), make_coupon(15, 72, 3000)},
                  SetPurpose::kRound1};
  c.round2_set = {{CouponConfig::none(), make_coupon(5, 10, 1000),
                   make_coupon(10, 72, 2000), make_coupon(15, 72, 3000)},
                  SetPurpose::kRound2};
  return c;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig config = default_run_config();
  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no, "");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value'", line_no, section);
    }
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown key", line_no, key);
    if (!seen.insert(key).second) throw ConfigError("duplicate key", line_no, key);
    try {
      it->second(config, value);
    } catch (const InputError& e) {
      throw ConfigError(e.what(), line_no, key);
    }
  }
  validate_run_config(config);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

}  // namespace dscaf
