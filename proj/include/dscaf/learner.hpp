#ifndef DSCAF_LEARNER_HPP_
#define DSCAF_LEARNER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dscaf/domain.hpp"

namespace dscaf {

// Probability clamp applied to every prediction and inside the log-loss.
inline constexpr double kProbFloor = 1e-6;
inline constexpr double kProbCeil = 1.0 - 1e-6;

// Row-major sample matrix with labels and positive weights.
struct Dataset {
  std::size_t n_cols = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> labels;
  std::vector<double> weights;
  std::string schema_id;

  std::size_t rows() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_cols, n_cols};
  }
  // Appends one sample; the vector's schema must match.
  void add(const FeatureVector& fv, bool label, double weight = 1.0);
  // Rows selected by index, in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

void validate(const Dataset& data);

enum class LearnerKind { kLogistic, kBoostedStumps };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kLogistic;
  double learning_rate = 1.0;
  double l2 = 0.0;
  // Gradient-descent epochs (logistic) or boosting rounds (stumps).
  int epochs = 300;
  // Upper bound on the ensemble size (stumps only).
  int max_stumps = 200;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

void validate(const LearnerConfig& config);

struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;  // standardized value; x <= threshold goes left
  double left = 0.0;
  double right = 0.0;
};

// Trained classifier. Inputs are standardized with the stored constants
// before either the linear score or the stump ensemble is applied.
struct Model {
  LearnerKind kind = LearnerKind::kLogistic;
  std::string schema_id;
  std::size_t n_features = 0;
  std::vector<double> mean;
  std::vector<double> scale;
  double intercept = 0.0;
  std::vector<double> coefficients;  // logistic, standardized space
  std::vector<Stump> stumps;         // boosted
  LearnerConfig config;

  // Log-odds for a raw (unstandardized) row.
  double score(std::span<const double> raw) const;
  // Clamped probability for a raw row; no schema check.
  double probability(std::span<const double> raw) const;

  // Logistic coefficients mapped back to raw feature units.
  std::vector<double> raw_coefficients() const;
  double raw_intercept() const;
};

// All-zero logistic model on a schema (predicts 0.5).
Model zero_model(const std::string& schema_id, std::size_t n_features);

// Full-batch training. When `loss_trace` is given it receives the training
// log-loss before the first update and after every update.
Model train(const Dataset& data, const LearnerConfig& config,
            std::vector<double>* loss_trace = nullptr);

// Schema-checked prediction.
double predict(const Model& model, const FeatureVector& fv);

// Weighted mean log-loss with the probability clamp.
double log_loss(const Model& model, const Dataset& data);

struct GridRow {
  std::size_t index = 0;
  LearnerConfig config;
  double mean_log_loss = 0.0;
  std::vector<double> fold_losses;
  // A fold whose training part held a single class was scored with the
  // prior model.
  bool prior_fallback = false;
};

struct GridSearchResult {
  LearnerConfig best;
  std::size_t best_index = 0;
  std::vector<GridRow> table;
};

GridSearchResult grid_search(const Dataset& data,
                             std::span<const LearnerConfig> grid,
                             std::size_t k_folds, std::uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace dscaf

#endif  // DSCAF_LEARNER_HPP_
