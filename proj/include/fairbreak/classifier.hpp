#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairbreak/errors.hpp"
#include "fairbreak/io.hpp"

namespace fairbreak {

enum class Direction { GreaterEqual, LessEqual };

// Linear halfspace: predicts 1 iff weights.x + bias >= 0.
struct LinearClassifier {
  std::vector<double> weights;
  double bias = 0.0;

  int predict(std::span<const double> x) const {
    if (x.size() != weights.size()) {
      throw DimensionError("linear classifier expects dimension " +
                           std::to_string(weights.size()) + ", got " +
                           std::to_string(x.size()));
    }
    double score = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) score += weights[i] * x[i];
    return score >= 0.0 ? 1 : 0;
  }
};

// One-dimensional threshold on the first feature.
struct ThresholdClassifier {
  double threshold = 0.0;
  Direction direction = Direction::GreaterEqual;

  int predict(std::span<const double> x) const {
    if (x.empty()) throw DimensionError("threshold classifier needs at least one feature");
    if (direction == Direction::GreaterEqual) return x[0] >= threshold ? 1 : 0;
    return x[0] <= threshold ? 1 : 0;
  }
};

// Type-erased deterministic classifier h: R^n -> {0,1}.
// required_dim < 0 means the classifier accepts any dimension >= 1.
class Classifier {
 public:
  using Fn = std::function<int(std::span<const double>)>;

  Classifier(Fn fn, int required_dim)
      : fn_(std::move(fn)), required_dim_(required_dim) {}

  Classifier(const LinearClassifier& lin)  // NOLINT: implicit by design
      : Classifier(Fn([lin](std::span<const double> x) { return lin.predict(x); }),
                   static_cast<int>(lin.weights.size())) {}

  Classifier(const ThresholdClassifier& thr)  // NOLINT: implicit by design
      : Classifier(Fn([thr](std::span<const double> x) { return thr.predict(x); }), -1) {}

  int operator()(std::span<const double> x) const {
    if (required_dim_ >= 0 && static_cast<int>(x.size()) != required_dim_) {
      throw DimensionError("classifier expects dimension " + std::to_string(required_dim_) +
                           ", got " + std::to_string(x.size()));
    }
    if (x.empty()) throw DimensionError("empty feature vector");
    return fn_(x) != 0 ? 1 : 0;
  }

  int required_dim() const { return required_dim_; }

 private:
  Fn fn_;
  int required_dim_;
};

inline Classifier constant_classifier(int label) {
  return Classifier([label](std::span<const double>) { return label; }, -1);
}

// ---- Model file format: text key-value -------------------------------------
//   weights=w1,w2,...       bias=b            (linear)
//   threshold=t             direction=ge|le   (threshold)

inline std::string serialize_model(const LinearClassifier& lin) {
  std::string text = "weights=";
  for (std::size_t i = 0; i < lin.weights.size(); ++i) {
    if (i) text += ',';
    text += format_double(lin.weights[i]);
  }
  text += "\nbias=" + format_double(lin.bias) + "\n";
  return text;
}

inline std::string serialize_model(const ThresholdClassifier& thr) {
  return "threshold=" + format_double(thr.threshold) + "\ndirection=" +
         (thr.direction == Direction::GreaterEqual ? "ge" : "le") + "\n";
}

struct LoadedModel {
  enum class Kind { Linear, Threshold } kind;
  LinearClassifier linear;
  ThresholdClassifier threshold;

  Classifier classifier() const {
    if (kind == Kind::Linear) return Classifier(linear);
    return Classifier(threshold);
  }
};

inline LoadedModel parse_model(const std::vector<std::string>& lines) {
  const auto kv = parse_key_values(lines);
  LoadedModel model{};
  if (kv.count("weights")) {
    if (!kv.count("bias")) throw FileFormatError("linear model file missing 'bias'");
    model.kind = LoadedModel::Kind::Linear;
    for (const std::string& field : split(kv.at("weights"), ',')) {
      model.linear.weights.push_back(parse_double(strip(field)));
    }
    if (model.linear.weights.empty()) throw FileFormatError("empty weight vector");
    model.linear.bias = parse_double(kv.at("bias"));
    return model;
  }
  if (kv.count("threshold")) {
    if (!kv.count("direction")) throw FileFormatError("threshold model file missing 'direction'");
    model.kind = LoadedModel::Kind::Threshold;
    model.threshold.threshold = parse_double(kv.at("threshold"));
    const std::string dir = kv.at("direction");
    if (dir == "ge") {
      model.threshold.direction = Direction::GreaterEqual;
    } else if (dir == "le") {
      model.threshold.direction = Direction::LessEqual;
    } else {
      throw FileFormatError("direction must be 'ge' or 'le', got '" + dir + "'");
    }
    return model;
  }
  throw FileFormatError("model file has neither 'weights' nor 'threshold'");
}

inline LoadedModel load_model(const std::string& path) { return parse_model(read_lines(path)); }

inline void save_model(const std::string& path, const LinearClassifier& lin) {
  write_text(path, serialize_model(lin));
}

inline void save_model(const std::string& path, const ThresholdClassifier& thr) {
  write_text(path, serialize_model(thr));
}

}  // namespace fairbreak
