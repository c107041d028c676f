#include "dscaf/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "dscaf/csv_io.hpp"
#include "dscaf/errors.hpp"
#include "dscaf/rng.hpp"
#include "json.hpp"

namespace dscaf {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::size_t kSplitCandidates = 32;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, kProbCeil); }

double logit(double p) { return std::log(p / (1.0 - p)); }

double sample_loss(double p, bool label) {
  const double q = clamp_prob(p);
  return label ? -std::log(q) : -std::log(1.0 - q);
}

struct ClassCounts {
  double positive_weight = 0.0;
  double total_weight = 0.0;
  bool single_class() const {
    return positive_weight <= 0.0 || positive_weight >= total_weight;
  }
  double prior() const { return positive_weight / total_weight; }
};

ClassCounts count_classes(const Dataset& data) {
  ClassCounts c;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    c.total_weight += data.weights[i];
    if (data.labels[i]) c.positive_weight += data.weights[i];
  }
  return c;
}

Model prior_model(const Dataset& data, const LearnerConfig& config) {
  Model m = zero_model(data.schema_id, data.n_cols);
  m.kind = config.kind;
  m.config = config;
  const ClassCounts c = count_classes(data);
  m.intercept = logit(clamp_prob(c.total_weight > 0 ? c.prior() : 0.5));
  if (config.kind == LearnerKind::kBoostedStumps) m.coefficients.clear();
  return m;
}

// Weighted column means and standard deviations; constant columns get unit
// scale.
void fit_standardizer(const Dataset& data, Model& m) {
  const std::size_t d = data.n_cols;
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) total += data.weights[i];
  if (total <= 0.0) return;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    for (std::size_t f = 0; f < d; ++f) m.mean[f] += data.weights[i] * x[f];
  }
  for (auto& mu : m.mean) mu /= total;
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    for (std::size_t f = 0; f < d; ++f) {
      const double dx = x[f] - m.mean[f];
      var[f] += data.weights[i] * dx * dx;
    }
  }
  for (std::size_t f = 0; f < d; ++f) {
    const double sd = std::sqrt(var[f] / total);
    m.scale[f] = sd > 1e-12 ? sd : 1.0;
  }
}

std::vector<double> standardized_matrix(const Dataset& data, const Model& m) {
  std::vector<double> z(data.features.size());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    for (std::size_t f = 0; f < data.n_cols; ++f) {
      z[i * data.n_cols + f] = (x[f] - m.mean[f]) / m.scale[f];
    }
  }
  return z;
}

double weighted_loss(const std::vector<double>& scores, const Dataset& data,
                     double total_weight) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    loss += data.weights[i] * sample_loss(sigmoid(scores[i]), data.labels[i]);
  }
  return loss / total_weight;
}

void train_logistic(const Dataset& data, const LearnerConfig& config, Model& m,
                    std::vector<double>* trace) {
  const std::size_t n = data.rows();
  const std::size_t d = data.n_cols;
  const auto z = standardized_matrix(data, m);
  const ClassCounts counts = count_classes(data);
  const double total = counts.total_weight;
  m.intercept = logit(clamp_prob(counts.prior()));
  m.coefficients.assign(d, 0.0);

  // Nesterov-accelerated full-batch descent: the gradient is taken at the
  // look-ahead point (look_b, look), the iterate is (m.intercept, m.coefficients).
  std::vector<double> scores(n);
  std::vector<double> grad(d);
  std::vector<double> look = m.coefficients, prev = m.coefficients;
  double look_b = m.intercept, prev_b = m.intercept;
  auto compute_scores = [&](double b, const std::vector<double>& w) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b;
      const double* x = z.data() + i * d;
      for (std::size_t f = 0; f < d; ++f) s += w[f] * x[f];
      scores[i] = s;
    }
  };

  if (trace) {
    compute_scores(m.intercept, m.coefficients);
    trace->push_back(weighted_loss(scores, data, total));
  }
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    compute_scores(look_b, look);
    double grad_b = 0.0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r =
          data.weights[i] * (sigmoid(scores[i]) - (data.labels[i] ? 1.0 : 0.0));
      grad_b += r;
      const double* x = z.data() + i * d;
      for (std::size_t f = 0; f < d; ++f) grad[f] += r * x[f];
    }
    prev_b = m.intercept;
    prev = m.coefficients;
    m.intercept = look_b - config.learning_rate * grad_b / total;
    for (std::size_t f = 0; f < d; ++f) {
      m.coefficients[f] =
          look[f] - config.learning_rate * (grad[f] / total + config.l2 * look[f]);
    }
    const double momentum = static_cast<double>(epoch) / static_cast<double>(epoch + 3);
    look_b = m.intercept + momentum * (m.intercept - prev_b);
    for (std::size_t f = 0; f < d; ++f) {
      look[f] = m.coefficients[f] + momentum * (m.coefficients[f] - prev[f]);
    }
    if (trace) {
      compute_scores(m.intercept, m.coefficients);
      trace->push_back(weighted_loss(scores, data, total));
    }
  }
}

// Thresholds at 32 evenly spaced sample quantiles, deduplicated, excluding
// the column maximum.
std::vector<double> split_candidates(const std::vector<double>& z, std::size_t n,
                                     std::size_t d, std::size_t f) {
  std::vector<double> column(n);
  for (std::size_t i = 0; i < n; ++i) column[i] = z[i * d + f];
  std::sort(column.begin(), column.end());
  std::vector<double> out;
  if (n == 0) return out;
  for (std::size_t c = 1; c <= kSplitCandidates; ++c) {
    const double v = column[c * n / (kSplitCandidates + 1)];
    if (v < column.back() && (out.empty() || v > out.back())) out.push_back(v);
  }
  return out;
}

void train_stumps(const Dataset& data, const LearnerConfig& config, Model& m,
                  std::vector<double>* trace) {
  const std::size_t n = data.rows();
  const std::size_t d = data.n_cols;
  const auto z = standardized_matrix(data, m);
  const ClassCounts counts = count_classes(data);
  const double total = counts.total_weight;
  m.intercept = logit(clamp_prob(counts.prior()));

  std::vector<std::vector<double>> thresholds(d);
  std::vector<std::uint8_t> bins(n * d);
  for (std::size_t f = 0; f < d; ++f) {
    thresholds[f] = split_candidates(z, n, d, f);
    const auto& t = thresholds[f];
    for (std::size_t i = 0; i < n; ++i) {
      bins[i * d + f] = static_cast<std::uint8_t>(
          std::lower_bound(t.begin(), t.end(), z[i * d + f]) - t.begin());
    }
  }

  std::vector<double> scores(n, m.intercept);
  double loss = weighted_loss(scores, data, total);
  if (trace) trace->push_back(loss);

  const int rounds = std::min(config.epochs, config.max_stumps);
  std::vector<double> g(n), h(n), hist_g, hist_h, trial(n);
  for (int round = 0; round < rounds; ++round) {
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      g[i] = data.weights[i] * (p - (data.labels[i] ? 1.0 : 0.0)) / total;
      h[i] = data.weights[i] * p * (1.0 - p) / total;
      g_total += g[i];
      h_total += h[i];
    }
    const double lambda = config.l2 + 1e-12;
    const double parent = g_total * g_total / (h_total + lambda);

    double best_gain = 1e-15;
    Stump best;
    bool found = false;
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t n_bins = thresholds[f].size() + 1;
      if (n_bins < 2) continue;
      hist_g.assign(n_bins, 0.0);
      hist_h.assign(n_bins, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        hist_g[bins[i * d + f]] += g[i];
        hist_h[bins[i * d + f]] += h[i];
      }
      double gl = 0.0, hl = 0.0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        gl += hist_g[b];
        hl += hist_h[b];
        const double gr = g_total - gl, hr = h_total - hl;
        const double gain =
            gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best = {f, thresholds[f][b], -gl / (hl + lambda), -gr / (hr + lambda)};
          found = true;
        }
      }
    }
    if (!found) break;

    // Shrink the step until the training loss does not increase.
    best.left *= config.learning_rate;
    best.right *= config.learning_rate;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving) {
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = scores[i] +
                   (z[i * d + best.feature] <= best.threshold ? best.left : best.right);
      }
      const double trial_loss = weighted_loss(trial, data, total);
      if (trial_loss <= loss) {
        loss = trial_loss;
        scores.swap(trial);
        accepted = true;
        break;
      }
      best.left *= 0.5;
      best.right *= 0.5;
    }
    if (!accepted) break;
    m.stumps.push_back(best);
    if (trace) trace->push_back(loss);
  }
}

}  // namespace

void Dataset::add(const FeatureVector& fv, bool label, double weight) {
  if (labels.empty() && features.empty() && schema_id.empty()) {
    schema_id = fv.schema_id;
    n_cols = fv.values.size();
  }
  if (fv.schema_id != schema_id || fv.values.size() != n_cols) {
    throw ContractError("feature vector schema " + fv.schema_id +
                        " does not match dataset schema " + schema_id);
  }
  features.insert(features.end(), fv.values.begin(), fv.values.end());
  labels.push_back(label ? 1 : 0);
  weights.push_back(weight);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.n_cols = n_cols;
  out.schema_id = schema_id;
  out.features.reserve(indices.size() * n_cols);
  out.labels.reserve(indices.size());
  out.weights.reserve(indices.size());
  for (const std::size_t i : indices) {
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
    out.weights.push_back(weights[i]);
  }
  return out;
}

void validate(const Dataset& data) {
  if (data.features.size() != data.rows() * data.n_cols ||
      data.weights.size() != data.rows()) {
    throw InputError("dataset parts disagree on the number of rows");
  }
  for (const double w : data.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw InputError("sample weights must be positive and finite");
    }
  }
  for (const double x : data.features) {
    if (!std::isfinite(x)) throw InputError("non-finite feature value");
  }
  for (const auto y : data.labels) {
    if (y > 1) throw InputError("labels must be 0 or 1");
  }
}

std::string to_string(LearnerKind kind) {
  return kind == LearnerKind::kLogistic ? "logistic" : "boosted_stumps";
}

LearnerKind learner_kind_from_string(const std::string& name) {
  if (name == "logistic") return LearnerKind::kLogistic;
  if (name == "boosted_stumps") return LearnerKind::kBoostedStumps;
  throw InputError("unknown learner kind '" + name + "'");
}

void validate(const LearnerConfig& c) {
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw InputError("learning_rate must be positive");
  }
  if (!(c.l2 >= 0.0) || !std::isfinite(c.l2)) {
    throw InputError("l2 must be non-negative");
  }
  if (c.epochs < 0 || c.max_stumps < 0) {
    throw InputError("epochs and max_stumps must be non-negative");
  }
}

double Model::score(std::span<const double> raw) const {
  double s = intercept;
  if (kind == LearnerKind::kLogistic) {
    for (std::size_t f = 0; f < coefficients.size(); ++f) {
      s += coefficients[f] * (raw[f] - mean[f]) / scale[f];
    }
  } else {
    for (const auto& st : stumps) {
      const double x = (raw[st.feature] - mean[st.feature]) / scale[st.feature];
      s += x <= st.threshold ? st.left : st.right;
    }
  }
  return s;
}

double Model::probability(std::span<const double> raw) const {
  return clamp_prob(sigmoid(score(raw)));
}

std::vector<double> Model::raw_coefficients() const {
  std::vector<double> out(coefficients.size());
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = coefficients[f] / scale[f];
  return out;
}

double Model::raw_intercept() const {
  double b = intercept;
  for (std::size_t f = 0; f < coefficients.size(); ++f) {
    b -= coefficients[f] * mean[f] / scale[f];
  }
  return b;
}

Model zero_model(const std::string& schema_id, std::size_t n_features) {
  Model m;
  m.schema_id = schema_id;
  m.n_features = n_features;
  m.mean.assign(n_features, 0.0);
  m.scale.assign(n_features, 1.0);
  m.coefficients.assign(n_features, 0.0);
  return m;
}

Model train(const Dataset& data, const LearnerConfig& config,
            std::vector<double>* loss_trace) {
  validate(data);
  validate(config);
  if (data.rows() == 0) throw DegenerateModelError("cannot train on an empty dataset");
  const ClassCounts counts = count_classes(data);
  if (counts.single_class()) {
    if (config.kind == LearnerKind::kLogistic) {
      throw DegenerateModelError(
          "logistic training needs samples of both classes");
    }
    Model m = prior_model(data, config);
    if (loss_trace) loss_trace->push_back(log_loss(m, data));
    return m;
  }

  Model m;
  m.kind = config.kind;
  m.schema_id = data.schema_id;
  m.n_features = data.n_cols;
  m.config = config;
  fit_standardizer(data, m);
  if (config.kind == LearnerKind::kLogistic) {
    train_logistic(data, config, m, loss_trace);
  } else {
    train_stumps(data, config, m, loss_trace);
  }
  return m;
}

double predict(const Model& model, const FeatureVector& fv) {
  if (fv.schema_id != model.schema_id || fv.values.size() != model.n_features) {
    throw SchemaMismatchError("feature vector schema '" + fv.schema_id +
                              "' does not match model schema '" +
                              model.schema_id + "'");
  }
  return model.probability(fv.values);
}

double log_loss(const Model& model, const Dataset& data) {
  double loss = 0.0, total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    loss += data.weights[i] * sample_loss(model.probability(data.row(i)), data.labels[i]);
    total += data.weights[i];
  }
  return total > 0.0 ? loss / total : 0.0;
}

GridSearchResult grid_search(const Dataset& data,
                             std::span<const LearnerConfig> grid,
                             std::size_t k_folds, std::uint64_t seed) {
  validate(data);
  if (grid.empty()) throw InputError("grid search needs at least one config");
  if (k_folds < 2) throw InputError("grid search needs k_folds >= 2");
  if (data.rows() < k_folds) throw InputError("fewer samples than folds");

  std::vector<std::size_t> order(data.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto g = substream(seed, StreamTag::kFolds, 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(g.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }

  std::vector<Dataset> train_parts, valid_parts;
  for (std::size_t k = 0; k < k_folds; ++k) {
    std::vector<std::size_t> tr, va;
    for (std::size_t p = 0; p < order.size(); ++p) {
      (p % k_folds == k ? va : tr).push_back(order[p]);
    }
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    train_parts.push_back(data.subset(tr));
    valid_parts.push_back(data.subset(va));
  }

  GridSearchResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    GridRow row;
    row.index = c;
    row.config = grid[c];
    double sum = 0.0;
    for (std::size_t k = 0; k < k_folds; ++k) {
      Model m;
      if (count_classes(train_parts[k]).single_class()) {
        m = prior_model(train_parts[k], grid[c]);
        row.prior_fallback = true;
      } else {
        m = train(train_parts[k], grid[c]);
      }
      row.fold_losses.push_back(log_loss(m, valid_parts[k]));
      sum += row.fold_losses.back();
    }
    row.mean_log_loss = sum / static_cast<double>(k_folds);
    if (row.mean_log_loss < best_loss) {
      best_loss = row.mean_log_loss;
      result.best_index = c;
    }
    result.table.push_back(std::move(row));
  }
  result.best = grid[result.best_index];
  return result;
}

namespace {

Json config_to_json(const LearnerConfig& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["learning_rate"] = c.learning_rate;
  j["l2"] = c.l2;
  j["epochs"] = c.epochs;
  j["max_stumps"] = c.max_stumps;
  j["rng_seed"] = c.rng_seed;
  return j;
}

LearnerConfig config_from_json(const Json& j) {
  LearnerConfig c;
  c.kind = learner_kind_from_string(j.at("kind").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.max_stumps = j.at("max_stumps").get<int>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string model_to_json(const Model& m) {
  Json j;
  j["format"] = "dscaf-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(m.kind);
  j["schema_id"] = m.schema_id;
  j["n_features"] = m.n_features;
  j["standardization"] = {{"mean", m.mean}, {"scale", m.scale}};
  j["intercept"] = m.intercept;
  j["coefficients"] = m.coefficients;
  Json stumps = Json::array();
  for (const auto& s : m.stumps) {
    stumps.push_back({{"feature", s.feature},
                      {"threshold", s.threshold},
                      {"left", s.left},
                      {"right", s.right}});
  }
  j["stumps"] = std::move(stumps);
  j["config"] = config_to_json(m.config);
  return j.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    if (j.at("format") != "dscaf-model") throw InputError("not a model artifact");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw SchemaMismatchError("unsupported model format version");
    }
    Model m;
    m.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    m.schema_id = j.at("schema_id").get<std::string>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    m.scale = j.at("standardization").at("scale").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    for (const auto& s : j.at("stumps")) {
      m.stumps.push_back({s.at("feature").get<std::size_t>(),
                          s.at("threshold").get<double>(),
                          s.at("left").get<double>(), s.at("right").get<double>()});
    }
    m.config = config_from_json(j.at("config"));
    const bool coef_ok = m.kind == LearnerKind::kLogistic
                             ? m.coefficients.size() == m.n_features
                             : m.coefficients.empty();
    bool stumps_ok = true;
    for (const auto& s : m.stumps) stumps_ok = stumps_ok && s.feature < m.n_features;
    if (m.mean.size() != m.n_features || m.scale.size() != m.n_features ||
        !coef_ok || !stumps_ok) {
      throw InputError("model parameter dimensions do not match its schema");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model artifact: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << model_to_json(model);
  if (!out) throw IoError("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace dscaf
