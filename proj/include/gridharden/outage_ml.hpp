#pragma once

// Soft-margin linear SVM trained in the dual by pairwise coordinate ascent
// (SMO with the maximal violating pair), plus penalty selection and a
// confusion-matrix report.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridharden/synth_data.hpp"
#include "json.hpp"

namespace gridharden::ml {

using synth::Feature;
using synth::LabeledDataset;

inline constexpr const char* kModelSchema = "gridharden.svm/1";

struct TrainOptions {
  double kkt_tolerance = 1e-3;
  int max_passes = 200;  // iteration cap = max_passes * samples
  std::uint64_t seed = 0;  // fixes the scan order, hence tie breaks
};

struct SvmModel {
  Feature w{0.0, 0.0};
  double g = 0.0;
  double c = 1.0;
  std::vector<int> support_vector_indices;  // into the training set
  std::vector<double> dual_coefficients;    // alpha of each support vector
  Feature bounds{0.0, 0.0};                 // normalization of the inputs
  double kkt_tolerance = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  double dual_objective = 0.0;

  [[nodiscard]] double decision_value(const Feature& x) const {
    return w[0] * x[0] + w[1] * x[1] + g;
  }
  // sgn(0) counts as outage.
  [[nodiscard]] int predict(const Feature& x) const { return decision_value(x) >= 0.0 ? 1 : -1; }
};

// Throws InputError on a single-class or empty set, c <= 0 or non-finite
// features. A run that hits the iteration cap returns the last iterate with
// converged = false.
SvmModel train(const LabeledDataset& data, double c, const TrainOptions& options = {});

// Full dual vector of a trained model, zero for non-support vectors.
std::vector<double> full_duals(const SvmModel& model, std::size_t n);
// sum(alpha) - 0.5 |sum alpha_i y_i x_i|^2
double dual_objective(const LabeledDataset& data, const std::vector<double>& alpha);

struct PenaltyScore {
  double c = 0.0;
  std::optional<double> accuracy;  // empty when training failed
  std::string error;
};

struct PenaltySelection {
  double best_c = 0.0;
  std::vector<PenaltyScore> scores;
};

inline const std::vector<double> kDefaultPenaltyGrid{0.01, 0.1, 1.0, 10.0, 100.0};

// Highest validation accuracy wins; ties go to the smaller c. Grid points
// whose training throws are skipped; InputError if all fail.
PenaltySelection select_penalty(const LabeledDataset& train_set, const LabeledDataset& validation,
                                const std::vector<double>& c_grid,
                                const TrainOptions& options = {});

// Stratified k-fold cross-validation on the training set. Each c is scored
// by its pooled count of correct held-out predictions; counts within
// `tie_band` of the best count as ties and go to the smaller c.
PenaltySelection select_penalty_cv(const LabeledDataset& train_set, int folds,
                                   const std::vector<double>& c_grid, std::uint64_t seed,
                                   int tie_band = 1, const TrainOptions& options = {});

struct ConfusionMatrix {
  int operational_as_operational = 0;
  int operational_as_outage = 0;
  int outage_as_operational = 0;
  int outage_as_outage = 0;

  [[nodiscard]] int total() const {
    return operational_as_operational + operational_as_outage + outage_as_operational +
           outage_as_outage;
  }
  [[nodiscard]] double accuracy() const;
  // Row-wise percentage of each cell, e.g. 56 of 60 -> 93.33.
  [[nodiscard]] double row_percent(int count, int row_total) const;
  // Two-by-two table with counts and row percentages plus overall accuracy.
  [[nodiscard]] std::string report() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

ConfusionMatrix evaluate(const SvmModel& model, const LabeledDataset& test_set);

nlohmann::ordered_json model_to_json(const SvmModel& model);
SvmModel model_from_json(const nlohmann::ordered_json& json);

// End-to-end experiment on generated data: normalize, stratified test
// split, penalty selection by cross-validation on the training part,
// retrain on the whole training part, evaluate on the test part.
struct ExperimentConfig {
  synth::SampleSpec spec;
  Feature bounds = synth::kDefaultBounds;
  double test_fraction = 0.2;
  int cv_folds = 5;
  int tie_band = 1;  // samples
  std::vector<double> c_grid = kDefaultPenaltyGrid;
  std::optional<double> fixed_c;  // skips selection
  TrainOptions train;
};

struct ExperimentResult {
  LabeledDataset train_set;
  LabeledDataset test_set;
  std::optional<PenaltySelection> selection;
  SvmModel model;
  ConfusionMatrix confusion;
};

ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const LabeledDataset& normalized, const ExperimentConfig& config);

}  // namespace gridharden::ml
