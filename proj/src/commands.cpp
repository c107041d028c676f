#include "dscaf/commands.hpp"

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <iterator>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "dscaf/config.hpp"
#include "dscaf/csv_io.hpp"
#include "dscaf/decision.hpp"
#include "dscaf/errors.hpp"
#include "dscaf/evaluation.hpp"
#include "dscaf/learner.hpp"
#include "dscaf/rng.hpp"
#include "dscaf/simulator.hpp"
#include "dscaf/uplift.hpp"
#include "json.hpp"

namespace dscaf {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  auto in = open_input(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Log {
 public:
  explicit Log(bool quiet) : quiet_(quiet) {}
  void operator()(const std::string& msg) const {
    if (!quiet_) std::cerr << "[dscaf] " << msg << '\n';
  }

 private:
  bool quiet_;
};

// Identity of a run, recorded in every output directory.
struct RunIdentity {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
};

RunIdentity identify(const std::string& command, const fs::path& config_path,
                     std::uint64_t seed) {
  return {command, hex64(fnv1a64(read_file(config_path))), seed};
}

// Creates `out`, refusing to reuse a directory written by a different run.
void claim_output_dir(const fs::path& out, const RunIdentity& id) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  const fs::path manifest = out / "manifest.json";
  if (!fs::exists(manifest)) return;
  Json j;
  try {
    j = Json::parse(read_file(manifest));
  } catch (const nlohmann::json::exception&) {
    throw IoError("refusing to overwrite " + out.string() +
                  ": existing manifest.json is unreadable");
  }
  const bool same = j.value("command", "") == id.command &&
                    j.value("config_hash", "") == id.config_hash &&
                    j.value("seed", std::uint64_t{0}) == id.seed &&
                    j.value("tool_version", "") == kToolVersion;
  if (!same) {
    throw IoError("refusing to overwrite " + out.string() +
                  ": manifest.json belongs to a different run (command, config "
                  "hash, seed or tool version differ)");
  }
}

void write_manifest(const fs::path& out, const RunIdentity& id,
                    const std::vector<std::string>& files, Json extra) {
  Json j;
  j["tool"] = "dscaf";
  j["tool_version"] = kToolVersion;
  j["command"] = id.command;
  j["config_hash"] = id.config_hash;
  j["seed"] = id.seed;
  Json hashes = Json::object();
  for (const auto& f : files) hashes[f] = hex64(fnv1a64(read_file(out / f)));
  j["files"] = std::move(hashes);
  j["details"] = std::move(extra);
  auto o = open_output(out / "manifest.json");
  o << j.dump(2) << '\n';
  if (!o) throw IoError("failed writing manifest in " + out.string());
}

template <typename Fn>
void write_text(const fs::path& path, Fn fn) {
  auto out = open_output(path);
  fn(out);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void require_identifiable(std::span<const OutcomeRecord> round1_log) {
  bool control = false, treated = false;
  for (const auto& r : round1_log) (r.coupon.is_none() ? control : treated) = true;
  if (!control || !treated) {
    throw IdentifiabilityError(
        "round-1 log must contain both the no-coupon arm and a coupon arm: "
        "treatment effects are unidentifiable from a single-arm log");
  }
}

void write_grid_table(const fs::path& path, const TrainedPair& t) {
  write_text(path, [&](std::ostream& o) {
    o << "round,index,kind,learning_rate,l2,epochs,max_stumps,mean_log_loss,"
         "prior_fallback,selected\n";
    auto rows = [&](int round, const GridSearchResult& g) {
      for (const auto& r : g.table) {
        o << round << ',' << r.index << ',' << to_string(r.config.kind) << ','
          << format_real(r.config.learning_rate) << ',' << format_real(r.config.l2)
          << ',' << r.config.epochs << ',' << r.config.max_stumps << ','
          << format_real(r.mean_log_loss) << ',' << (r.prior_fallback ? 1 : 0) << ','
          << (r.index == g.best_index ? 1 : 0) << '\n';
      }
    };
    rows(1, t.grid1);
    rows(2, t.grid2);
  });
}

std::vector<std::string> model_files(const RunConfig& config) {
  const fs::path dir = config.io.model_dir;
  return {(dir / "pair.json").generic_string(), (dir / "first.model.json").generic_string(),
          (dir / "second.model.json").generic_string()};
}

}  // namespace

TrainedPair train_predictor_pair(const RunConfig& config, const Catalog& catalog,
                                 std::span<const OutcomeRecord> round1_log,
                                 std::span<const OutcomeRecord> round2_log,
                                 std::uint64_t seed, const ProgressFn& progress) {
  auto log = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  require_identifiable(round1_log);
  LearnerGrid grid_spec = config.learner;
  grid_spec.seed = seed;
  const auto grid = grid_spec.expand();

  TrainedPair out;
  const Dataset d1 = round1_dataset(round1_log, catalog);
  log("grid search, round 1: " + std::to_string(grid.size()) + " configs x " +
      std::to_string(grid_spec.k_folds) + " folds on " + std::to_string(d1.rows()) + " rows");
  out.grid1 = grid_search(d1, grid, grid_spec.k_folds, seed);
  out.pair.first = train(d1, out.grid1.best);

  if (round2_log.empty()) throw InputError("round-2 log is empty; cannot fit the second round");
  const Dataset d2 = round2_dataset(round2_log, round1_log, catalog, out.pair.first,
                                    config.round1_set, config.policy.ipw_epsilon,
                                    config.policy.ipw_variant);
  log("grid search, round 2: " + std::to_string(d2.rows()) + " rows");
  out.grid2 = grid_search(d2, grid, grid_spec.k_folds, seed);
  out.pair.second = train(d2, out.grid2.best);

  out.pair.round1_set = config.round1_set;
  out.pair.round2_set = config.round2_set;
  out.pair.ipw_epsilon = config.policy.ipw_epsilon;
  out.pair.ipw_variant = config.policy.ipw_variant;
  return out;
}

void cmd_simulate(const CommonOptions& options) {
  const Log log(options.quiet);
  RunConfig config = load_run_config(options.config);
  if (options.seed) config.simulator.rng_seed = *options.seed;
  const RunIdentity id = identify("simulate", options.config, config.simulator.rng_seed);
  claim_output_dir(options.out, id);

  const GroundTruth gt(config.simulator);
  const auto catalog = generate_catalog(config.simulator);
  log("generated " + std::to_string(catalog.size()) + " items");
  const auto rct = run_rct(gt, catalog, config.round1_set, config.round2_set,
                           config.assignment, config.simulator.rng_seed);
  log("round 1: " + std::to_string(rct.round1_log.size()) + " records, " +
      std::to_string(rct.survivors.size()) + " survivors");

  write_catalog_file(options.out / config.io.catalog, catalog);
  write_outcomes_file(options.out / config.io.round1_log, rct.round1_log);
  write_outcomes_file(options.out / config.io.round2_log, rct.round2_log);
  Json details;
  details["n_items"] = catalog.size();
  details["round1_records"] = rct.round1_log.size();
  details["survivors"] = rct.survivors.size();
  details["round2_records"] = rct.round2_log.size();
  write_manifest(options.out, id,
                 {config.io.catalog, config.io.round1_log, config.io.round2_log},
                 std::move(details));
}

void cmd_train(const CommonOptions& options, const fs::path& data_dir) {
  const Log log(options.quiet);
  RunConfig config = load_run_config(options.config);
  const std::uint64_t seed = options.seed.value_or(config.learner.seed);
  const RunIdentity id = identify("train", options.config, seed);

  const Catalog catalog(read_catalog_file(data_dir / config.io.catalog));
  const auto r1 = read_outcomes_file(data_dir / config.io.round1_log);
  const auto r2 = read_outcomes_file(data_dir / config.io.round2_log);
  require_identifiable(r1);
  claim_output_dir(options.out, id);

  const TrainedPair trained = train_predictor_pair(config, catalog, r1, r2, seed, log);
  save_pair(trained.pair, options.out / config.io.model_dir);
  write_grid_table(options.out / config.io.grid_table, trained);

  auto files = model_files(config);
  files.push_back(config.io.grid_table);
  Json details;
  details["round1_rows"] = r1.size();
  details["round2_rows"] = r2.size();
  details["round1_best_index"] = trained.grid1.best_index;
  details["round2_best_index"] = trained.grid2.best_index;
  write_manifest(options.out, id, files, std::move(details));
}

void cmd_allocate(const CommonOptions& options, const fs::path& model_dir,
                  const fs::path& catalog_path,
                  const std::optional<fs::path>& history_path) {
  const Log log(options.quiet);
  RunConfig config = load_run_config(options.config);
  const std::uint64_t seed = options.seed.value_or(0);
  const RunIdentity id = identify("allocate", options.config, seed);

  const PredictorPair pair = load_pair(model_dir);
  const auto items = read_catalog_file(catalog_path);
  std::unordered_map<std::string, std::vector<OutcomeRecord>> history;
  if (history_path) {
    for (auto& r : read_outcomes_file(*history_path)) {
      history[r.item_id].push_back(std::move(r));
    }
  }
  claim_output_dir(options.out, id);

  const PolicyConstraint constraint = config.policy.constraint();
  std::vector<AllocationPlan> plans;
  plans.reserve(items.size());
  std::size_t skipped = 0;
  for (const auto& item : items) {
    const auto it = history.find(item.item_id);
    std::vector<OutcomeRecord> past;
    if (it != history.end()) past = it->second;
    const bool sold = std::any_of(past.begin(), past.end(), [](const auto& r) { return r.sold; });
    if (sold || item.status == ItemStatus::kSold) {
      ++skipped;
      continue;
    }
    plans.push_back(replan(item, past, pair, constraint, config.policy.attach_delay_h));
  }
  std::stable_sort(plans.begin(), plans.end(),
                   [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  log("planned " + std::to_string(plans.size()) + " items, skipped " +
      std::to_string(skipped) + " sold");

  write_text(options.out / config.io.plans, [&](std::ostream& o) { write_plans(o, plans); });
  Json details;
  details["plans"] = plans.size();
  details["skipped_sold"] = skipped;
  details["feasible"] = std::count_if(plans.begin(), plans.end(),
                                      [](const auto& p) { return p.feasible; });
  write_manifest(options.out, id, {config.io.plans}, std::move(details));
}

void cmd_evaluate(const CommonOptions& options, const fs::path& data_dir,
                  const std::optional<fs::path>& model_dir) {
  const Log log(options.quiet);
  RunConfig config = load_run_config(options.config);
  const std::uint64_t seed = options.seed.value_or(config.evaluation.bootstrap_seed);
  const RunIdentity id = identify("evaluate", options.config, seed);

  const Catalog catalog(read_catalog_file(data_dir / config.io.catalog));
  const auto r1 = read_outcomes_file(data_dir / config.io.round1_log);
  const auto [treated, control] = split_by_treatment(r1);
  if (control.empty()) {
    throw MissingHoldoutError("round-1 log has no holdout (no-coupon) records; "
                              "lift STR is undefined without a control group");
  }
  if (treated.empty()) {
    throw MissingHoldoutError("round-1 log has no coupon records; lift STR is undefined");
  }
  std::optional<PredictorPair> pair;
  if (model_dir) pair = load_pair(*model_dir);
  claim_output_dir(options.out, id);

  DelayAnalysisOptions delay_opts;
  delay_opts.bucket_width_h = config.evaluation.bucket_width_h;
  delay_opts.attach_horizon_h = std::max(config.simulator.rct_max_attach_delay_h,
                                         config.evaluation.bucket_width_h);
  const auto tables = delay_analysis(r1, delay_opts);
  write_text(options.out / config.io.delay_tables,
             [&](std::ostream& o) { write_table_csv(o, tables); });

  const LiftEstimate overall = str_lift(treated, control);
  Json summary;
  summary["records"] = r1.size();
  summary["lift_str"] = std::strtod(format_real(overall.lift).c_str(), nullptr);
  summary["lift_str_stderr"] = std::strtod(format_real(overall.std_error).c_str(), nullptr);
  std::vector<std::string> files = {config.io.delay_tables};

  if (pair) {
    std::vector<double> scores(r1.size());
    std::vector<std::uint8_t> is_treated(r1.size()), sold(r1.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      const ItemRecord& item = catalog.at(r1[i].item_id);
      const auto preds = predict_item(*pair, item, r1[i].attach_delay_h);
      double s = 0.0;
      for (std::size_t j = 1; j < preds.p1.size(); ++j) s += preds.p1[j] - preds.p1[0];
      scores[i] = s / static_cast<double>(preds.p1.size() - 1);
      is_treated[i] = r1[i].coupon.is_none() ? 0 : 1;
      sold[i] = r1[i].sold ? 1 : 0;
    }
    const std::size_t deciles = config.evaluation.deciles;
    UpliftCurve curve = cumulative_uplift(scores, is_treated, sold, deciles);
    const CurveFn resampled = [&](std::span<const std::size_t> idx) {
      std::vector<double> s(idx.size());
      std::vector<std::uint8_t> t(idx.size()), y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        s[i] = scores[idx[i]];
        t[i] = is_treated[idx[i]];
        y[i] = sold[idx[i]];
      }
      const auto nt = std::count(t.begin(), t.end(), 1);
      if (nt == 0 || nt == static_cast<long>(t.size())) return UpliftCurve{};
      return cumulative_uplift(s, t, y, deciles);
    };
    log("bootstrap: " + std::to_string(config.evaluation.bootstrap_b) + " replicates");
    attach_band(curve, bootstrap_band(r1.size(), resampled,
                                      config.evaluation.bootstrap_b, seed));
    write_text(options.out / config.io.uplift_curve,
               [&](std::ostream& o) { write_curve_csv(o, curve); });
    files.push_back(config.io.uplift_curve);
    if (curve.random_reference) {
      summary["random_reference"] =
          std::strtod(format_real(*curve.random_reference).c_str(), nullptr);
    }
    const auto slope = curve_slope(curve);
    summary["curve_slope"] =
        slope ? Json(std::strtod(format_real(*slope).c_str(), nullptr)) : Json(nullptr);
  }
  write_text(options.out / config.io.evaluation_summary,
             [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  files.push_back(config.io.evaluation_summary);
  write_manifest(options.out, id, files, Json::object());
}

void cmd_compare(const CommonOptions& options) {
  const Log log(options.quiet);
  RunConfig config = load_run_config(options.config);
  if (options.seed) config.simulator.rng_seed = *options.seed;
  const std::uint64_t train_seed = config.simulator.rng_seed;
  for (const auto s : config.evaluation.seeds) {
    if (s == train_seed) {
      throw ConfigError("evaluation seeds must differ from the training seed " +
                            std::to_string(train_seed),
                        0, "evaluation.seeds");
    }
  }
  const RunIdentity id = identify("compare", options.config, train_seed);
  claim_output_dir(options.out, id);

  const GroundTruth gt(config.simulator);
  const auto items = generate_catalog(config.simulator);
  const auto rct = run_rct(gt, items, config.round1_set, config.round2_set,
                           config.assignment, train_seed);
  log("training RCT: " + std::to_string(items.size()) + " items");
  const Catalog catalog(items);
  const TrainedPair trained =
      train_predictor_pair(config, catalog, rct.round1_log, rct.round2_log,
                           config.learner.seed, log);
  save_pair(trained.pair, options.out / config.io.model_dir);
  write_grid_table(options.out / config.io.grid_table, trained);

  CompareOptions copts;
  copts.n_items = config.evaluation.compare_items;
  copts.attach_delay_h = config.policy.attach_delay_h;
  copts.fallback = config.policy.infeasible_fallback;
  log("rolling out strategies over " + std::to_string(config.evaluation.seeds.size()) +
      " seeds x " + std::to_string(copts.n_items) + " items");
  const ComparisonReport report = compare_strategies(
      config.simulator, trained.pair, config.policy.constraint(), config.evaluation.seeds, copts);
  write_text(options.out / config.io.comparison,
             [&](std::ostream& o) { o << report_to_json(report); });

  auto files = model_files(config);
  files.push_back(config.io.grid_table);
  files.push_back(config.io.comparison);
  write_manifest(options.out, id, files, Json::object());
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "dscaf: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "dscaf: " << e.what() << '\n';
    return kExitIo;
  } catch (const IdentifiabilityError& e) {
    std::cerr << "dscaf: identifiability failure: " << e.what() << '\n';
    return kExitIdentifiability;
  } catch (const SchemaMismatchError& e) {
    std::cerr << "dscaf: schema mismatch: " << e.what() << '\n';
    return kExitSchema;
  } catch (const MissingHoldoutError& e) {
    std::cerr << "dscaf: missing holdout: " << e.what() << '\n';
    return kExitMissingHoldout;
  } catch (const std::exception& e) {
    std::cerr << "dscaf: internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (...) {
    std::cerr << "dscaf: unknown internal error\n";
    return kExitInternal;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Sequential two-round coupon allocation: simulate, train, allocate, evaluate, compare"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions common;
  std::string config_path, out_path;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration file")->required();
    sub->add_option("--out", out_path, "Output directory")->required();
    sub->add_option("--seed", seed, "Override the command's seed");
    sub->add_flag("--quiet", common.quiet, "Suppress progress messages");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a catalog and an RCT log");
  add_common(simulate);

  std::string data_dir;
  auto* train_cmd = app.add_subcommand("train", "Fit the two-round predictor pair");
  add_common(train_cmd);
  train_cmd->add_option("--data", data_dir, "Directory written by `simulate`")->required();

  std::string model_dir, catalog_path, history_path;
  auto* allocate_cmd = app.add_subcommand("allocate", "Plan coupons for unsold items");
  add_common(allocate_cmd);
  allocate_cmd->add_option("--model", model_dir, "Model directory written by `train`")->required();
  allocate_cmd->add_option("--catalog", catalog_path, "Item catalog CSV")->required();
  allocate_cmd->add_option("--history", history_path, "Outcome log of consumed rounds");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Delay tables and uplift curves");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("--data", data_dir, "Directory written by `simulate`")->required();
  evaluate_cmd->add_option("--model", model_dir, "Model directory for the uplift curve");

  auto* compare_cmd = app.add_subcommand("compare", "Random vs per-round vs sequential allocation");
  add_common(compare_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  common.config = config_path;
  common.out = out_path;
  auto* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) common.seed = seed;

  try {
    if (active == simulate) {
      cmd_simulate(common);
    } else if (active == train_cmd) {
      cmd_train(common, data_dir);
    } else if (active == allocate_cmd) {
      std::optional<fs::path> history;
      if (!history_path.empty()) history = history_path;
      cmd_allocate(common, model_dir, catalog_path, history);
    } else if (active == evaluate_cmd) {
      std::optional<fs::path> model;
      if (!model_dir.empty()) model = model_dir;
      cmd_evaluate(common, data_dir, model);
    } else {
      cmd_compare(common);
    }
  } catch (...) {
    return exit_code_for_current_exception();
  }
  return kExitOk;
}

}  // namespace dscaf
