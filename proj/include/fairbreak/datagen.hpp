#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fairbreak/classifier.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/distribution.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/fair_boundary.hpp"
#include "fairbreak/io.hpp"
#include "fairbreak/rng.hpp"

namespace fairbreak {

// Two-Gaussian benchmark generator: a balanced mixture of a positive and a
// negative class, with the sensitive attribute correlated to the class via
// the posterior of a rotated copy of the features.
struct SyntheticConfig {
  int n_samples = 6000;
  std::uint64_t seed = 1;
  GaussianComponent positive{1.0, {2.0, 2.0}, {{{5.0, 1.0}, {1.0, 5.0}}}};
  GaussianComponent negative{1.0, {-2.0, -2.0}, {{{10.0, 1.0}, {1.0, 3.0}}}};
  double rotation = 0.52359877559829887307710723054658;  // pi/6
  double train_fraction = 0.7;
};

struct SyntheticData {
  LabeledDataset train;
  LabeledDataset test;
};

// Deterministic generation given the seed. Random stream order: the positive
// block's features (two normals per sample), then the negative block's, then
// one uniform per sample (in sample order) for the sensitive attribute.
//
// z_i ~ Bernoulli(f_pos(x') / (f_pos(x') + f_neg(x'))) where x' rotates x by
// -rotation (row-vector convention: x' = [x1 cos a + x2 sin a,
// -x1 sin a + x2 cos a]), so group membership leaks the label direction but
// is not a deterministic function of it.
//
// The train/test split interleaves deterministically: sample i goes to train
// iff floor((i+1) f) > floor(i f), which keeps both class blocks represented
// in both splits at the requested fraction.
inline SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_samples < 2 || cfg.n_samples % 2 != 0) {
    throw InvalidArgument("n_samples must be even and at least 2");
  }
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie strictly between 0 and 1");
  }
  detail::validate_cov(cfg.positive.cov);
  detail::validate_cov(cfg.negative.cov);

  Rng rng(cfg.seed);
  const int half = cfg.n_samples / 2;
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(cfg.n_samples));
  for (int i = 0; i < cfg.n_samples; ++i) {
    const bool pos = i < half;
    const Vec2 x = sample_gaussian(pos ? cfg.positive : cfg.negative, rng);
    samples.push_back(Sample{{x[0], x[1]}, pos ? 1 : 0, 0});
  }
  const double c = std::cos(cfg.rotation), s = std::sin(cfg.rotation);
  for (Sample& smp : samples) {
    const Vec2 xr{smp.x[0] * c + smp.x[1] * s, -smp.x[0] * s + smp.x[1] * c};
    const double f_pos = component_pdf(cfg.positive, xr);
    const double f_neg = component_pdf(cfg.negative, xr);
    const double denom = f_pos + f_neg;
    const double prob = denom > 0.0 ? f_pos / denom : 0.5;
    smp.z = rng.bernoulli(prob) ? 1 : 0;
  }

  std::vector<Sample> train, test;
  const double f = cfg.train_fraction;
  for (int i = 0; i < cfg.n_samples; ++i) {
    const bool in_train =
        std::floor((i + 1) * f) > std::floor(i * f);
    (in_train ? train : test).push_back(std::move(samples[static_cast<std::size_t>(i)]));
  }
  if (train.empty() || test.empty()) {
    throw InvalidArgument("train fraction leaves one split empty");
  }
  return SyntheticData{LabeledDataset(2, std::move(train)), LabeledDataset(2, std::move(test))};
}

// ---- Config file: key=value ------------------------------------------------
// Keys: n_samples, seed, rotation, train_fraction, positive_mean (a,b),
// positive_cov (row-major a,b,c,d), negative_mean, negative_cov.
// Missing keys keep their defaults; unknown keys are rejected.

namespace detail {

inline Vec2 parse_vec2(const std::string& text) {
  const std::vector<std::string> f = split(text, ',');
  if (f.size() != 2) throw FileFormatError("expected 2 comma-separated numbers: '" + text + "'");
  return Vec2{parse_double(strip(f[0])), parse_double(strip(f[1]))};
}

inline Mat2 parse_mat2(const std::string& text) {
  const std::vector<std::string> f = split(text, ',');
  if (f.size() != 4) throw FileFormatError("expected 4 comma-separated numbers: '" + text + "'");
  return Mat2{{{parse_double(strip(f[0])), parse_double(strip(f[1]))},
               {parse_double(strip(f[2])), parse_double(strip(f[3]))}}};
}

}  // namespace detail

inline SyntheticConfig parse_synthetic_config(const std::map<std::string, std::string>& kv) {
  SyntheticConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "n_samples") {
      cfg.n_samples = static_cast<int>(parse_int(value));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(value));
    } else if (key == "rotation") {
      cfg.rotation = parse_double(value);
    } else if (key == "train_fraction") {
      cfg.train_fraction = parse_double(value);
    } else if (key == "positive_mean") {
      cfg.positive.mean = detail::parse_vec2(value);
    } else if (key == "positive_cov") {
      cfg.positive.cov = detail::parse_mat2(value);
    } else if (key == "negative_mean") {
      cfg.negative.mean = detail::parse_vec2(value);
    } else if (key == "negative_cov") {
      cfg.negative.cov = detail::parse_mat2(value);
    } else {
      throw FileFormatError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

inline SyntheticConfig load_synthetic_config(const std::string& path) {
  return parse_synthetic_config(read_key_value_file(path));
}

inline std::string serialize_synthetic_config(const SyntheticConfig& cfg) {
  std::string text;
  text += "n_samples=" + std::to_string(cfg.n_samples) + "\n";
  text += "seed=" + std::to_string(cfg.seed) + "\n";
  text += "rotation=" + format_double(cfg.rotation) + "\n";
  text += "train_fraction=" + format_double(cfg.train_fraction) + "\n";
  text += "positive_mean=" + format_double(cfg.positive.mean[0]) + "," +
          format_double(cfg.positive.mean[1]) + "\n";
  text += "positive_cov=" + format_double(cfg.positive.cov[0][0]) + "," +
          format_double(cfg.positive.cov[0][1]) + "," + format_double(cfg.positive.cov[1][0]) +
          "," + format_double(cfg.positive.cov[1][1]) + "\n";
  text += "negative_mean=" + format_double(cfg.negative.mean[0]) + "," +
          format_double(cfg.negative.mean[1]) + "\n";
  text += "negative_cov=" + format_double(cfg.negative.cov[0][0]) + "," +
          format_double(cfg.negative.cov[0][1]) + "," + format_double(cfg.negative.cov[1][0]) +
          "," + format_double(cfg.negative.cov[1][1]) + "\n";
  return text;
}

// ---- Small random test instances -------------------------------------------

struct RandomInstance {
  DiscreteJointDistribution distribution;
  Classifier classifier;
};

// Random discrete joint distribution (all sixteen per-point cells positive)
// together with a random linear or threshold classifier over the same space.
// Random stream order: per point two coordinate uniforms then four cell
// uniforms; then one uniform choosing the classifier family; then its
// parameters (three normals for linear; one uniform and one uniform for the
// threshold variant).
inline RandomInstance random_discrete_instance(int n_points, std::uint64_t seed) {
  if (n_points < 1 || n_points > 64) {
    throw InvalidArgument("n_points must lie in [1, 64]");
  }
  Rng rng(seed);
  std::vector<SupportPoint> points;
  std::vector<std::array<double, 4>> cells;
  double total = 0.0;
  for (int i = 0; i < n_points; ++i) {
    SupportPoint pt;
    pt.id = i;
    pt.coords = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    points.push_back(std::move(pt));
    std::array<double, 4> c{};
    for (double& m : c) {
      m = rng.uniform(0.05, 1.0);
      total += m;
    }
    cells.push_back(c);
  }
  for (auto& c : cells) {
    for (double& m : c) m /= total;
  }
  if (rng.bernoulli(0.5)) {
    LinearClassifier lin;
    lin.weights = {rng.normal(), rng.normal()};
    lin.bias = 0.3 * rng.normal();
    return RandomInstance{DiscreteJointDistribution(2, std::move(points), cells),
                          Classifier(lin)};
  }
  ThresholdClassifier thr;
  thr.threshold = rng.uniform(-1.0, 1.0);
  thr.direction = rng.bernoulli(0.5) ? Direction::GreaterEqual : Direction::LessEqual;
  return RandomInstance{DiscreteJointDistribution(2, std::move(points), cells),
                        Classifier(thr)};
}

}  // namespace fairbreak
