#include "gridharden/outage_ml.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "gridharden/errors.hpp"

namespace gridharden::ml {

namespace {

void check_trainable(const LabeledDataset& data, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("penalty c must be positive");
  if (data.features.size() != data.labels.size()) throw InputError("features and labels differ in length");
  if (data.count(1) == 0 || data.count(-1) == 0) {
    throw InputError("training set needs both classes (single-class input)");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] != 1 && data.labels[i] != -1) throw InputError("labels must be +1 or -1");
    if (!std::isfinite(data.features[i][0]) || !std::isfinite(data.features[i][1])) {
      throw InputError("non-finite feature");
    }
  }
}

double dot(const Feature& a, const Feature& b) { return a[0] * b[0] + a[1] * b[1]; }

}  // namespace

SvmModel train(const LabeledDataset& data, double c, const TrainOptions& options) {
  check_trainable(data, c);
  const std::size_t n = data.size();
  const auto& x = data.features;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.labels[i];

  // Seeded scan order decides which index wins a tie in the pair search.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (options.seed != 0) {
    std::mt19937_64 engine(options.seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[engine() % (i + 1)]);
  }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> score(n, 0.0);  // w . x_k, bias excluded
  Feature w{0.0, 0.0};
  const double tol = options.kkt_tolerance;
  const std::int64_t cap = static_cast<std::int64_t>(std::max(1, options.max_passes)) *
                           static_cast<std::int64_t>(std::max<std::size_t>(n, 1));

  // I_up: alpha_k can move so that y_k alpha_k grows; I_low: shrinks.
  const auto in_up = [&](std::size_t k) { return y[k] > 0 ? alpha[k] < c : alpha[k] > 0.0; };
  const auto in_low = [&](std::size_t k) { return y[k] > 0 ? alpha[k] > 0.0 : alpha[k] < c; };

  SvmModel model;
  model.c = c;
  model.bounds = data.bounds;
  model.kkt_tolerance = tol;
  double m_up = 0.0;
  double m_low = 0.0;
  std::int64_t iter = 0;
  for (;; ++iter) {
    std::size_t i = n;
    std::size_t j = n;
    m_up = -HUGE_VAL;
    m_low = HUGE_VAL;
    for (std::size_t k : order) {
      const double v = y[k] - score[k];
      if (in_up(k) && v > m_up) {
        m_up = v;
        i = k;
      }
      if (in_low(k) && v < m_low) {
        m_low = v;
        j = k;
      }
    }
    if (i == n || j == n || m_up - m_low <= tol) {
      model.converged = true;
      break;
    }
    if (iter >= cap) break;

    // Move alpha_i by y_i t and alpha_j by -y_j t; the dual gains
    // (m_up - m_low) t - eta t^2 / 2.
    const double eta = std::max(dot(x[i], x[i]) + dot(x[j], x[j]) - 2.0 * dot(x[i], x[j]), 1e-12);
    double t = (m_up - m_low) / eta;
    t = std::min(t, y[i] > 0 ? c - alpha[i] : alpha[i]);
    t = std::min(t, y[j] > 0 ? alpha[j] : c - alpha[j]);
    alpha[i] += y[i] * t;
    alpha[j] -= y[j] * t;
    // Snap to the bound that limited the step.
    if (y[i] > 0 ? c - alpha[i] <= 0.0 : alpha[i] <= 0.0) alpha[i] = y[i] > 0 ? c : 0.0;
    if (y[j] > 0 ? alpha[j] <= 0.0 : c - alpha[j] <= 0.0) alpha[j] = y[j] > 0 ? 0.0 : c;
    const Feature step{t * (x[i][0] - x[j][0]), t * (x[i][1] - x[j][1])};
    w[0] += step[0];
    w[1] += step[1];
    for (std::size_t k = 0; k < n; ++k) score[k] += dot(step, x[k]);
  }
  model.iterations = iter;

  // Recompute w from the duals to shed accumulated drift.
  w = {0.0, 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    w[0] += alpha[k] * y[k] * x[k][0];
    w[1] += alpha[k] * y[k] * x[k][1];
  }
  model.w = w;

  const double free_tol = 1e-12 * std::max(1.0, c);
  double bias_sum = 0.0;
  int free_count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (alpha[k] > free_tol && alpha[k] < c - free_tol) {
      bias_sum += y[k] - dot(w, x[k]);
      ++free_count;
    }
  }
  if (free_count > 0) {
    model.g = bias_sum / free_count;
  } else {
    double up = -HUGE_VAL;
    double low = HUGE_VAL;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = y[k] - dot(w, x[k]);
      if (in_up(k)) up = std::max(up, v);
      if (in_low(k)) low = std::min(low, v);
    }
    if (!std::isfinite(up)) up = low;
    if (!std::isfinite(low)) low = up;
    model.g = 0.5 * (up + low);
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (alpha[k] > 0.0) {
      model.support_vector_indices.push_back(static_cast<int>(k));
      model.dual_coefficients.push_back(alpha[k]);
    }
  }
  model.dual_objective = dual_objective(data, alpha);
  return model;
}

std::vector<double> full_duals(const SvmModel& model, std::size_t n) {
  std::vector<double> alpha(n, 0.0);
  for (std::size_t k = 0; k < model.support_vector_indices.size(); ++k) {
    alpha.at(model.support_vector_indices[k]) = model.dual_coefficients[k];
  }
  return alpha;
}

double dual_objective(const LabeledDataset& data, const std::vector<double>& alpha) {
  Feature w{0.0, 0.0};
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    sum += alpha[k];
    w[0] += alpha[k] * data.labels[k] * data.features[k][0];
    w[1] += alpha[k] * data.labels[k] * data.features[k][1];
  }
  return sum - 0.5 * dot(w, w);
}

PenaltySelection select_penalty(const LabeledDataset& train_set, const LabeledDataset& validation,
                                const std::vector<double>& c_grid, const TrainOptions& options) {
  if (c_grid.empty()) throw InputError("penalty grid is empty");
  if (validation.size() == 0) throw InputError("validation set is empty");
  PenaltySelection out;
  std::optional<double> best_accuracy;
  for (double c : c_grid) {
    PenaltyScore s;
    s.c = c;
    try {
      const auto model = train(train_set, c, options);
      s.accuracy = evaluate(model, validation).accuracy();
      if (!best_accuracy || *s.accuracy > *best_accuracy ||
          (*s.accuracy == *best_accuracy && c < out.best_c)) {
        best_accuracy = s.accuracy;
        out.best_c = c;
      }
    } catch (const InputError& e) {
      s.error = e.what();
      std::fprintf(stderr, "warning: c=%g skipped: %s\n", c, e.what());
    }
    out.scores.push_back(std::move(s));
  }
  if (!best_accuracy) throw InputError("training failed for every penalty value");
  return out;
}

PenaltySelection select_penalty_cv(const LabeledDataset& train_set, int folds,
                                   const std::vector<double>& c_grid, std::uint64_t seed,
                                   int tie_band, const TrainOptions& options) {
  if (c_grid.empty()) throw InputError("penalty grid is empty");
  if (folds < 2) throw InputError("cross-validation needs at least 2 folds");
  std::vector<int> fold_of(train_set.size(), 0);
  std::mt19937_64 engine(seed);
  for (int label : {synth::kOperational, synth::kOutage}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      if (train_set.labels[i] == label) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(folds)) {
      throw InputError("class " + std::to_string(label) + " has fewer samples than folds");
    }
    for (std::size_t i = members.size() - 1; i > 0; --i) {
      std::swap(members[i], members[engine() % (i + 1)]);
    }
    for (std::size_t k = 0; k < members.size(); ++k) fold_of[members[k]] = static_cast<int>(k % folds);
  }
  std::vector<std::pair<LabeledDataset, LabeledDataset>> parts(folds);
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    for (int f = 0; f < folds; ++f) {
      auto& dst = fold_of[i] == f ? parts[f].second : parts[f].first;
      dst.features.push_back(train_set.features[i]);
      dst.labels.push_back(train_set.labels[i]);
    }
  }

  PenaltySelection out;
  std::vector<int> correct(c_grid.size(), -1);
  for (std::size_t k = 0; k < c_grid.size(); ++k) {
    PenaltyScore s;
    s.c = c_grid[k];
    try {
      int hits = 0;
      for (const auto& [fit, held] : parts) {
        const auto cm = evaluate(train(fit, s.c, options), held);
        hits += cm.operational_as_operational + cm.outage_as_outage;
      }
      correct[k] = hits;
      s.accuracy = static_cast<double>(hits) / static_cast<double>(train_set.size());
    } catch (const InputError& e) {
      s.error = e.what();
      std::fprintf(stderr, "warning: c=%g skipped: %s\n", s.c, e.what());
    }
    out.scores.push_back(std::move(s));
  }
  const int best = *std::max_element(correct.begin(), correct.end());
  if (best < 0) throw InputError("training failed for every penalty value");
  bool found = false;
  for (std::size_t k = 0; k < c_grid.size(); ++k) {
    if (correct[k] >= 0 && correct[k] >= best - tie_band && (!found || c_grid[k] < out.best_c)) {
      out.best_c = c_grid[k];
      found = true;
    }
  }
  return out;
}

double ConfusionMatrix::accuracy() const {
  const int n = total();
  return n == 0 ? 0.0 : static_cast<double>(operational_as_operational + outage_as_outage) / n;
}

double ConfusionMatrix::row_percent(int count, int row_total) const {
  return row_total == 0 ? 0.0 : 100.0 * count / row_total;
}

std::string ConfusionMatrix::report() const {
  const int op = operational_as_operational + operational_as_outage;
  const int out = outage_as_operational + outage_as_outage;
  const auto cell = [&](int count, int row) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%d (%.2f%%)", count, row_percent(count, row));
    return std::string(buf);
  };
  char buf[512];
  std::string s;
  std::snprintf(buf, sizeof buf, "%-22s %-24s %-24s\n", "Actual \\ Predicted", "Operational",
                "Outage");
  s += buf;
  std::snprintf(buf, sizeof buf, "%-22s %-24s %-24s\n", "Operational",
                cell(operational_as_operational, op).c_str(),
                cell(operational_as_outage, op).c_str());
  s += buf;
  std::snprintf(buf, sizeof buf, "%-22s %-24s %-24s\n", "Outage",
                cell(outage_as_operational, out).c_str(), cell(outage_as_outage, out).c_str());
  s += buf;
  std::snprintf(buf, sizeof buf, "Overall accuracy: %d/%d = %.2f%%\n",
                operational_as_operational + outage_as_outage, total(), 100.0 * accuracy());
  s += buf;
  return s;
}

nlohmann::ordered_json ConfusionMatrix::to_json() const {
  nlohmann::ordered_json j;
  j["operational_as_operational"] = operational_as_operational;
  j["operational_as_outage"] = operational_as_outage;
  j["outage_as_operational"] = outage_as_operational;
  j["outage_as_outage"] = outage_as_outage;
  j["accuracy"] = accuracy();
  return j;
}

ConfusionMatrix evaluate(const SvmModel& model, const LabeledDataset& test_set) {
  if (test_set.size() == 0) throw InputError("test set is empty");
  ConfusionMatrix m;
  for (std::size_t k = 0; k < test_set.size(); ++k) {
    const bool predicted_outage = model.predict(test_set.features[k]) == 1;
    if (test_set.labels[k] == 1) {
      (predicted_outage ? m.outage_as_outage : m.outage_as_operational) += 1;
    } else {
      (predicted_outage ? m.operational_as_outage : m.operational_as_operational) += 1;
    }
  }
  return m;
}

nlohmann::ordered_json model_to_json(const SvmModel& model) {
  nlohmann::ordered_json j;
  j["schema"] = kModelSchema;
  j["w"] = model.w;
  j["g"] = model.g;
  j["c"] = model.c;
  j["bounds"] = model.bounds;
  j["support_vector_indices"] = model.support_vector_indices;
  j["dual_coefficients"] = model.dual_coefficients;
  j["training"] = {{"kkt_tolerance", model.kkt_tolerance},
                   {"iterations", model.iterations},
                   {"converged", model.converged},
                   {"dual_objective", model.dual_objective}};
  return j;
}

SvmModel model_from_json(const nlohmann::ordered_json& j) {
  SvmModel m;
  try {
    if (j.value("schema", std::string()) != kModelSchema) {
      throw InputError("model file: unsupported schema (expected " + std::string(kModelSchema) + ")");
    }
    m.w = j.at("w").get<Feature>();
    m.g = j.at("g").get<double>();
    m.c = j.at("c").get<double>();
    m.bounds = j.at("bounds").get<Feature>();
    m.support_vector_indices = j.value("support_vector_indices", std::vector<int>{});
    m.dual_coefficients = j.value("dual_coefficients", std::vector<double>{});
    if (j.contains("training")) {
      const auto& t = j.at("training");
      m.kkt_tolerance = t.value("kkt_tolerance", 0.0);
      m.iterations = t.value("iterations", std::int64_t{0});
      m.converged = t.value("converged", false);
      m.dual_objective = t.value("dual_objective", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  if (!(m.bounds[0] > 0.0 && m.bounds[1] > 0.0)) throw InputError("model file: bounds must be positive");
  return m;
}

ExperimentResult run_experiment(const LabeledDataset& normalized, const ExperimentConfig& config) {
  ExperimentResult r;
  const std::uint64_t seed = config.spec.seed;
  std::tie(r.train_set, r.test_set) = split(normalized, config.test_fraction, seed ^ 0x5eedULL);
  double c = 0.0;
  if (config.fixed_c) {
    c = *config.fixed_c;
  } else {
    r.selection = select_penalty_cv(r.train_set, config.cv_folds, config.c_grid, seed ^ 0xa11dULL,
                                    config.tie_band, config.train);
    c = r.selection->best_c;
  }
  r.model = train(r.train_set, c, config.train);
  r.confusion = evaluate(r.model, r.test_set);
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(synth::normalize(synth::generate_samples(config.spec), config.bounds),
                        config);
}

}  // namespace gridharden::ml
