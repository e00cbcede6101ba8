#pragma once

// Two-feature labeled samples (wind speed, distance to storm center) for
// training the outage classifier.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace gridharden::synth {

using Feature = std::array<double, 2>;  // (wind mph, distance km) or normalized

inline constexpr int kOutage = +1;
inline constexpr int kOperational = -1;

// Name written to metadata so a dataset can be regenerated.
inline constexpr const char* kPrngName = "mt19937_64/box-muller";

struct SampleSpec {
  int n_per_class = 300;
  Feature mean_operational{60.0, 180.0};
  Feature mean_outage{130.0, 40.0};
  Feature std_dev{60.0, 50.0};
  Feature noise_std{3.2, 4.8};  // 2% of the default bounds
  std::uint64_t seed = 1;

  void validate() const;  // InputError
};

struct LabeledDataset {
  std::vector<Feature> features;
  std::vector<int> labels;  // +1 outage, -1 operational
  Feature bounds{0.0, 0.0};  // (max wind, max distance); zero until normalized

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] std::size_t count(int label) const;
  [[nodiscard]] bool normalized() const { return bounds[0] > 0.0; }
};

inline constexpr Feature kDefaultBounds{160.0, 240.0};

// Operational samples first, then outage samples.
LabeledDataset generate_samples(const SampleSpec& spec);

// Clips each feature into [0, bound] and divides by the bound.
LabeledDataset normalize(const LabeledDataset& raw, const Feature& bounds);
Feature normalize_point(const Feature& raw, const Feature& bounds);
Feature denormalize_point(const Feature& normalized, const Feature& bounds);

// Stratified: each class gives round(fraction * class size) test samples.
// Both parts keep the input order.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double test_fraction,
                                                std::uint64_t seed);

// Header wind_norm,dist_norm,label with labels written as +1 / -1.
std::string to_csv(const LabeledDataset& data);
LabeledDataset from_csv(std::string_view text);

nlohmann::ordered_json metadata(const SampleSpec& spec, const Feature& bounds);
SampleSpec spec_from_json(const nlohmann::ordered_json& json, SampleSpec base = {});

}  // namespace gridharden::synth
