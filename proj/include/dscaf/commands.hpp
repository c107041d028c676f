#ifndef DSCAF_COMMANDS_HPP_
#define DSCAF_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "dscaf/config.hpp"
#include "dscaf/learner.hpp"
#include "dscaf/uplift.hpp"

namespace dscaf {

inline constexpr const char* kToolVersion = "1.0.0";

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitIdentifiability = 4,
  kExitSchema = 5,
  kExitMissingHoldout = 6,
};

struct CommonOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct TrainedPair {
  PredictorPair pair;
  GridSearchResult grid1;
  GridSearchResult grid2;
};

using ProgressFn = std::function<void(const std::string&)>;

// Grid search and fit of both rounds on an RCT. Throws IdentifiabilityError
// unless round 1 holds both the holdout and a coupon arm.
TrainedPair train_predictor_pair(const RunConfig& config, const Catalog& catalog,
                                 std::span<const OutcomeRecord> round1_log,
                                 std::span<const OutcomeRecord> round2_log,
                                 std::uint64_t seed, const ProgressFn& progress = {});

// Catalog plus both RCT logs.
void cmd_simulate(const CommonOptions& options);

// Grid search and predictor-pair training on a simulate output directory.
void cmd_train(const CommonOptions& options, const std::filesystem::path& data_dir);

// One plan per unsold catalog item. `history` is an optional outcome log of
// rounds already consumed; items sold there are skipped and the rest are
// replanned with their history.
void cmd_allocate(const CommonOptions& options, const std::filesystem::path& model_dir,
                  const std::filesystem::path& catalog,
                  const std::optional<std::filesystem::path>& history);

// Delay/AOV tables and, given a model, the cumulative uplift curve with
// bootstrap bands.
void cmd_evaluate(const CommonOptions& options, const std::filesystem::path& data_dir,
                  const std::optional<std::filesystem::path>& model_dir);

// Train on a fresh RCT, then roll out every strategy across the evaluation
// seeds.
void cmd_compare(const CommonOptions& options);

// Maps a library exception onto an exit code.
int exit_code_for_current_exception();

// CLI entry point.
int run_cli(int argc, char** argv);

}  // namespace dscaf

#endif  // DSCAF_COMMANDS_HPP_
