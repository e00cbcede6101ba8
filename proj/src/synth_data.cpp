#include "gridharden/synth_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "gridharden/errors.hpp"

namespace gridharden::synth {

namespace {

// std::normal_distribution is implementation-defined, so the transform is
// spelled out to keep datasets identical across standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  // 53 random bits in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

double parse_double(std::string_view field, int line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '+')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw InputError("line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

Feature read_pair(const nlohmann::ordered_json& j, const char* key, Feature fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw InputError(std::string(key) + " must be a pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

void SampleSpec::validate() const {
  if (n_per_class <= 0) throw InputError("n_per_class must be positive");
  for (int k = 0; k < 2; ++k) {
    if (!(std_dev[k] > 0.0)) throw InputError("std_dev must be positive");
    if (!(noise_std[k] >= 0.0)) throw InputError("noise_std must be nonnegative");
    if (!std::isfinite(mean_operational[k]) || !std::isfinite(mean_outage[k])) {
      throw InputError("class means must be finite");
    }
  }
}

std::size_t LabeledDataset::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

LabeledDataset generate_samples(const SampleSpec& spec) {
  if (spec.n_per_class <= 0) throw InputError("n_per_class must be positive");
  Gaussian gauss(spec.seed);
  LabeledDataset out;
  out.features.reserve(2 * spec.n_per_class);
  for (int label : {kOperational, kOutage}) {
    const Feature& mean = label == kOutage ? spec.mean_outage : spec.mean_operational;
    for (int i = 0; i < spec.n_per_class; ++i) {
      Feature x{};
      for (int k = 0; k < 2; ++k) x[k] = mean[k] + spec.std_dev[k] * gauss.next();
      for (int k = 0; k < 2; ++k) x[k] += spec.noise_std[k] * gauss.next();
      out.features.push_back(x);
      out.labels.push_back(label);
    }
  }
  return out;
}

Feature normalize_point(const Feature& raw, const Feature& bounds) {
  Feature out{};
  for (int k = 0; k < 2; ++k) out[k] = std::clamp(raw[k], 0.0, bounds[k]) / bounds[k];
  return out;
}

Feature denormalize_point(const Feature& normalized, const Feature& bounds) {
  return {normalized[0] * bounds[0], normalized[1] * bounds[1]};
}

LabeledDataset normalize(const LabeledDataset& raw, const Feature& bounds) {
  for (double b : bounds) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InputError("normalization bounds must be positive");
  }
  LabeledDataset out = raw;
  for (auto& x : out.features) x = normalize_point(x, bounds);
  out.bounds = bounds;
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double test_fraction,
                                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("test fraction must lie in (0, 1)");
  }
  std::mt19937_64 engine(seed);
  std::vector<char> in_test(data.size(), 0);
  for (int label : {kOperational, kOutage}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == label) members.push_back(i);
    }
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * members.size()));
    if (n_test == 0 || n_test >= members.size()) {
      throw InputError("stratified split impossible: class " + std::to_string(label) + " has " +
                       std::to_string(members.size()) + " samples");
    }
    // Fisher-Yates with a plain modulo draw; std::shuffle differs between
    // library vendors.
    for (std::size_t i = members.size() - 1; i > 0; --i) {
      std::swap(members[i], members[engine() % (i + 1)]);
    }
    for (std::size_t k = 0; k < n_test; ++k) in_test[members[k]] = 1;
  }
  std::pair<LabeledDataset, LabeledDataset> parts;
  parts.first.bounds = parts.second.bounds = data.bounds;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& dst = in_test[i] ? parts.second : parts.first;
    dst.features.push_back(data.features[i]);
    dst.labels.push_back(data.labels[i]);
  }
  return parts;
}

std::string to_csv(const LabeledDataset& data) {
  std::string out = "wind_norm,dist_norm,label\n";
  char buf[96];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%+d\n", data.features[i][0], data.features[i][1],
                  data.labels[i]);
    out += buf;
  }
  return out;
}

LabeledDataset from_csv(std::string_view text) {
  LabeledDataset out;
  std::size_t pos = 0;
  int line = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.empty()) continue;
    if (header) {
      header = false;
      if (row != "wind_norm,dist_norm,label") throw InputError("unexpected dataset header");
      continue;
    }
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      throw InputError("line " + std::to_string(line) + ": expected 3 fields");
    }
    const Feature x{parse_double(row.substr(0, c1), line),
                    parse_double(row.substr(c1 + 1, c2 - c1 - 1), line)};
    const double y = parse_double(row.substr(c2 + 1), line);
    if (y != 1.0 && y != -1.0) throw InputError("line " + std::to_string(line) + ": label must be +1 or -1");
    if (x[0] < 0.0 || x[0] > 1.0 || x[1] < 0.0 || x[1] > 1.0) {
      throw InputError("line " + std::to_string(line) + ": feature outside [0, 1]");
    }
    out.features.push_back(x);
    out.labels.push_back(static_cast<int>(y));
  }
  if (header) throw InputError("empty dataset file");
  return out;
}

nlohmann::ordered_json metadata(const SampleSpec& spec, const Feature& bounds) {
  nlohmann::ordered_json j;
  j["n_per_class"] = spec.n_per_class;
  j["mean_operational"] = spec.mean_operational;
  j["mean_outage"] = spec.mean_outage;
  j["std_dev"] = spec.std_dev;
  j["noise_std"] = spec.noise_std;
  j["bounds"] = bounds;
  j["seed"] = spec.seed;
  j["prng"] = kPrngName;
  return j;
}

SampleSpec spec_from_json(const nlohmann::ordered_json& json, SampleSpec base) {
  try {
    if (json.contains("n_per_class")) base.n_per_class = json.at("n_per_class").get<int>();
    base.mean_operational = read_pair(json, "mean_operational", base.mean_operational);
    base.mean_outage = read_pair(json, "mean_outage", base.mean_outage);
    base.std_dev = read_pair(json, "std_dev", base.std_dev);
    base.noise_std = read_pair(json, "noise_std", base.noise_std);
    if (json.contains("seed")) base.seed = json.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("sample spec: ") + e.what());
  }
  base.validate();
  return base;
}

}  // namespace gridharden::synth
