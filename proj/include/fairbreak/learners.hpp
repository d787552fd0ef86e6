#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "fairbreak/classifier.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/metrics.hpp"

namespace fairbreak {

struct FermConfig {
  double penalty_weight = 0.0;  // weight of the fairness penalty term
  double delta = 1.0;           // gap tolerance (relaxed variant)
  FairnessCriterion criterion = FairnessCriterion::EqualOpportunity;
  double learning_rate = 0.05;
  int max_iters = 4000;
  // Penalty weights tried by the relaxed variant, scanned in order.
  std::vector<double> sweep = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
};

namespace detail {

inline double stable_softplus(double s) {
  if (s > 30.0) return s;
  if (s < -30.0) return std::exp(s);
  return std::log1p(std::exp(s));
}

inline double stable_sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

inline bool in_group(const Sample& smp, FairnessCriterion criterion, int z) {
  if (smp.z != z) return false;
  return criterion == FairnessCriterion::DemographicParity || smp.y == 1;
}

inline void require_groups(const LabeledDataset& d, FairnessCriterion criterion) {
  bool has0 = false, has1 = false;
  for (const Sample& smp : d.samples()) {
    if (in_group(smp, criterion, 0)) has0 = true;
    if (in_group(smp, criterion, 1)) has1 = true;
    if (has0 && has1) return;
  }
  throw UndefinedGap("a protected group is empty under the training criterion");
}

}  // namespace detail

// Penalized training objective: mean logistic loss plus penalty_weight times
// the absolute difference of the groups' mean positive-prediction scores
// (sigmoid relaxation of the fairness gap).
inline double ferm_objective(const LabeledDataset& d, const FermConfig& cfg,
                             const std::vector<double>& weights, double bias) {
  if (weights.size() != static_cast<std::size_t>(d.dim())) {
    throw DimensionError("weight vector does not match the dataset dimension");
  }
  const double m = static_cast<double>(d.size());
  double loss = 0.0;
  double group_sum[2] = {0.0, 0.0};
  long long group_n[2] = {0, 0};
  for (const Sample& smp : d.samples()) {
    double s = bias;
    for (int k = 0; k < d.dim(); ++k) s += weights[static_cast<std::size_t>(k)] * smp.x[static_cast<std::size_t>(k)];
    loss += detail::stable_softplus(s) - static_cast<double>(smp.y) * s;
    if (cfg.penalty_weight != 0.0) {
      for (int z = 0; z < 2; ++z) {
        if (detail::in_group(smp, cfg.criterion, z)) {
          group_sum[z] += detail::stable_sigmoid(s);
          ++group_n[z];
        }
      }
    }
  }
  double objective = loss / m;
  if (cfg.penalty_weight != 0.0) {
    if (group_n[0] == 0 || group_n[1] == 0) {
      throw UndefinedGap("a protected group is empty under the training criterion");
    }
    objective += cfg.penalty_weight * std::abs(group_sum[0] / static_cast<double>(group_n[0]) -
                                               group_sum[1] / static_cast<double>(group_n[1]));
  }
  return objective;
}

// Analytic gradient of ferm_objective; the absolute value uses subgradient 0
// at a tie.
inline void ferm_gradient(const LabeledDataset& d, const FermConfig& cfg,
                          const std::vector<double>& weights, double bias,
                          std::vector<double>& grad_w, double& grad_b) {
  if (weights.size() != static_cast<std::size_t>(d.dim())) {
    throw DimensionError("weight vector does not match the dataset dimension");
  }
  const std::size_t dim = weights.size();
  grad_w.assign(dim, 0.0);
  grad_b = 0.0;
  const double m = static_cast<double>(d.size());

  std::vector<double> scores(d.size());
  double group_sum[2] = {0.0, 0.0};
  long long group_n[2] = {0, 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Sample& smp = d.sample(i);
    double s = bias;
    for (std::size_t k = 0; k < dim; ++k) s += weights[k] * smp.x[k];
    scores[i] = s;
    if (cfg.penalty_weight != 0.0) {
      for (int z = 0; z < 2; ++z) {
        if (detail::in_group(smp, cfg.criterion, z)) {
          group_sum[z] += detail::stable_sigmoid(s);
          ++group_n[z];
        }
      }
    }
  }
  double penalty_sign = 0.0;
  if (cfg.penalty_weight != 0.0) {
    if (group_n[0] == 0 || group_n[1] == 0) {
      throw UndefinedGap("a protected group is empty under the training criterion");
    }
    const double diff =
        group_sum[0] / static_cast<double>(group_n[0]) - group_sum[1] / static_cast<double>(group_n[1]);
    penalty_sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Sample& smp = d.sample(i);
    const double sig = detail::stable_sigmoid(scores[i]);
    double ds = (sig - static_cast<double>(smp.y)) / m;
    if (cfg.penalty_weight != 0.0 && penalty_sign != 0.0) {
      const double dsig = sig * (1.0 - sig);
      if (detail::in_group(smp, cfg.criterion, 0)) {
        ds += cfg.penalty_weight * penalty_sign * dsig / static_cast<double>(group_n[0]);
      } else if (detail::in_group(smp, cfg.criterion, 1)) {
        ds -= cfg.penalty_weight * penalty_sign * dsig / static_cast<double>(group_n[1]);
      }
    }
    for (std::size_t k = 0; k < dim; ++k) grad_w[k] += ds * smp.x[k];
    grad_b += ds;
  }
}

namespace detail {

inline LinearClassifier train_linear(const LabeledDataset& d, const FermConfig& cfg,
                                     double penalty_weight) {
  if (cfg.max_iters <= 0) throw InvalidArgument("max_iters must be positive");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  FermConfig local = cfg;
  local.penalty_weight = penalty_weight;
  std::vector<double> w(static_cast<std::size_t>(d.dim()), 0.0);
  double b = 0.0;
  std::vector<double> gw;
  double gb = 0.0;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    ferm_gradient(d, local, w, b, gw, gb);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * gw[k];
    b -= cfg.learning_rate * gb;
    if (iter % 100 == 99 && !std::isfinite(b)) {
      throw TrainingDiverged("non-finite iterate at iteration " + std::to_string(iter));
    }
  }
  for (double wk : w) {
    if (!std::isfinite(wk)) throw TrainingDiverged("non-finite final weights");
  }
  if (!std::isfinite(b)) throw TrainingDiverged("non-finite final bias");
  return LinearClassifier{std::move(w), b};
}

}  // namespace detail

// Plain logistic-regression risk minimizer (full-batch gradient descent from
// zero initialization); identical to penalized training with weight 0.
inline LinearClassifier train_erm(const LabeledDataset& d, const FermConfig& cfg = {}) {
  return detail::train_linear(d, cfg, 0.0);
}

// In-processing fair learner: logistic loss plus cfg.penalty_weight times the
// sigmoid-relaxed gap.
inline LinearClassifier train_ferm_penalized(const LabeledDataset& d, const FermConfig& cfg) {
  if (cfg.penalty_weight < 0.0) throw InvalidArgument("penalty_weight must be nonnegative");
  detail::require_groups(d, cfg.criterion);
  return detail::train_linear(d, cfg, cfg.penalty_weight);
}

struct RelaxedTrainingResult {
  LinearClassifier model;
  double penalty_weight = 0.0;   // sweep point that produced the model
  bool delta_satisfied = false;  // some sweep point met the gap tolerance
  double train_risk = 0.0;       // of the returned model, on the training set
  double train_gap = 0.0;
};

// Error-tolerant fair learner: sweep the penalty weight, keep models whose
// training gap is at most cfg.delta, and among those return the lowest
// training risk (ties: lower gap, then the earlier sweep point). If no sweep
// point meets the tolerance, fall back to the lowest-gap model and report
// delta_satisfied = false.
inline RelaxedTrainingResult train_ferm_relaxed(const LabeledDataset& d, const FermConfig& cfg) {
  if (cfg.delta < 0.0) throw InvalidArgument("delta must be nonnegative");
  if (cfg.sweep.empty()) throw InvalidArgument("penalty sweep is empty");
  detail::require_groups(d, cfg.criterion);

  bool have_best = false, best_feasible = false;
  RelaxedTrainingResult best{LinearClassifier{std::vector<double>(static_cast<std::size_t>(d.dim()), 0.0), 0.0}};
  for (double weight : cfg.sweep) {
    if (weight < 0.0) throw InvalidArgument("penalty sweep contains a negative weight");
    LinearClassifier model = detail::train_linear(d, cfg, weight);
    const double gap = fairness_gap(model, d, cfg.criterion);
    const double train_risk = risk(model, d);
    const bool feasible = gap <= cfg.delta;
    bool take = false;
    if (!have_best) {
      take = true;
    } else if (feasible != best_feasible) {
      take = feasible;
    } else if (feasible) {
      take = train_risk < best.train_risk ||
             (train_risk == best.train_risk && gap < best.train_gap);
    } else {
      take = gap < best.train_gap;
    }
    if (take) {
      best = RelaxedTrainingResult{std::move(model), weight, feasible, train_risk, gap};
      have_best = true;
      best_feasible = feasible;
    }
  }
  return best;
}

// One candidate decision stump on the first feature, with its exact error
// count and fairness gap as an integer rational (gap == gap_num / gap_den;
// 0/1 when both groups are empty, by convention an empty group deviates by 0).
struct ThresholdCandidate {
  double threshold = 0.0;
  Direction direction = Direction::GreaterEqual;
  long long errors = 0;
  long long gap_num = 0;
  long long gap_den = 1;
};

namespace detail {

inline ThresholdCandidate evaluate_threshold(const LabeledDataset& d, double threshold,
                                             Direction direction, FairnessCriterion criterion) {
  ThresholdCandidate cand{threshold, direction};
  long long k[2] = {0, 0}, n[2] = {0, 0};
  for (const Sample& smp : d.samples()) {
    const bool pred = direction == Direction::GreaterEqual ? smp.x[0] >= threshold
                                                           : smp.x[0] <= threshold;
    if (static_cast<int>(pred) != smp.y) ++cand.errors;
    if (criterion == FairnessCriterion::DemographicParity || smp.y == 1) {
      ++n[smp.z];
      if (pred) ++k[smp.z];
    }
  }
  // Deviation of group z from the pooled rate: |k_z * n - k * n_z| / (n_z * n).
  const long long ktot = k[0] + k[1], ntot = n[0] + n[1];
  cand.gap_num = 0;
  cand.gap_den = 1;
  for (int z = 0; z < 2; ++z) {
    if (n[z] == 0) continue;  // empty group deviates by 0
    const long long num = std::llabs(k[z] * ntot - ktot * n[z]);
    const long long den = n[z] * ntot;
    // num/den > gap_num/gap_den, cross-multiplied in wide integers.
    if (static_cast<__int128>(num) * cand.gap_den > static_cast<__int128>(cand.gap_num) * den) {
      cand.gap_num = num;
      cand.gap_den = den;
    }
  }
  return cand;
}

inline bool gap_leq(long long num, long long den, double delta) {
  // num/den <= delta, with num and den exact in double for the instance
  // sizes this learner is meant for.
  return static_cast<double>(num) <= delta * static_cast<double>(den);
}

}  // namespace detail

// All decision stumps on the first feature that behave distinctly on the
// data: midpoints between consecutive distinct values plus two sentinels
// (one below the minimum, one above the maximum), in both directions.
inline std::vector<ThresholdCandidate> enumerate_threshold_candidates(const LabeledDataset& d,
                                                                      FairnessCriterion criterion) {
  std::vector<double> values;
  values.reserve(d.size());
  for (const Sample& smp : d.samples()) values.push_back(smp.x[0]);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> thresholds;
  thresholds.push_back(values.front() - 1.0);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    thresholds.push_back(0.5 * (values[i] + values[i + 1]));
  }
  thresholds.push_back(values.back() + 1.0);

  std::vector<ThresholdCandidate> out;
  out.reserve(2 * thresholds.size());
  for (const Direction dir : {Direction::GreaterEqual, Direction::LessEqual}) {
    for (double t : thresholds) out.push_back(detail::evaluate_threshold(d, t, dir, criterion));
  }
  return out;
}

// Exact error-tolerant learner over decision stumps on the first feature:
// among candidates with fairness gap at most delta, the fewest errors wins
// (ties: smaller exact gap, then smaller threshold, then >= before <=).
// Integer arithmetic throughout, so ties break identically across platforms.
inline ThresholdClassifier ftrm_threshold_exact(const LabeledDataset& d, double delta,
                                                FairnessCriterion criterion) {
  if (delta < 0.0) throw InvalidArgument("delta must be nonnegative");
  const std::vector<ThresholdCandidate> candidates = enumerate_threshold_candidates(d, criterion);
  const ThresholdCandidate* best = nullptr;
  for (const ThresholdCandidate& cand : candidates) {
    if (!detail::gap_leq(cand.gap_num, cand.gap_den, delta)) continue;
    if (best == nullptr) {
      best = &cand;
      continue;
    }
    bool take = false;
    if (cand.errors != best->errors) {
      take = cand.errors < best->errors;
    } else {
      const __int128 lhs = static_cast<__int128>(cand.gap_num) * best->gap_den;
      const __int128 rhs = static_cast<__int128>(best->gap_num) * cand.gap_den;
      if (lhs != rhs) {
        take = lhs < rhs;
      } else if (cand.threshold != best->threshold) {
        take = cand.threshold < best->threshold;
      } else {
        take = cand.direction == Direction::GreaterEqual && best->direction == Direction::LessEqual;
      }
    }
    if (take) best = &cand;
  }
  if (best == nullptr) {
    // Unreachable for delta >= 0: the sentinel stumps predict a constant
    // label, whose gap is exactly zero.
    throw Infeasible("no stump meets the gap tolerance");
  }
  return ThresholdClassifier{best->threshold, best->direction};
}

}  // namespace fairbreak
