#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fairbreak/classifier.hpp"
#include "fairbreak/distribution.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/metrics.hpp"

namespace fairbreak {

enum class CaseSelector { Case1, Case2, Case3, Case4 };

inline std::string to_string(CaseSelector c) {
  switch (c) {
    case CaseSelector::Case1: return "case1";
    case CaseSelector::Case2: return "case2";
    case CaseSelector::Case3: return "case3";
    case CaseSelector::Case4: return "case4";
  }
  return "?";
}

// Case split on the cells (cross-multiplied so zero denominators are fine;
// ties go to the >= branch):
//   row condition:    p + r >= q + s
//   ratio condition:  q*r >= p*s     (the q/p >= s/r comparison)
inline CaseSelector select_case(const CellStats& st) {
  if (!(st.p > 0.0) && !(st.q > 0.0) && !(st.r > 0.0) && !(st.s > 0.0)) {
    throw UndefinedBound("all four cells are zero");
  }
  const bool row = st.p + st.r >= st.q + st.s;
  const bool ratio = st.q * st.r >= st.p * st.s;
  if (row) return ratio ? CaseSelector::Case1 : CaseSelector::Case2;
  return ratio ? CaseSelector::Case3 : CaseSelector::Case4;
}

// The per-point transport that makes h perfectly fair at minimum TV cost:
// move `fraction` of the (y = conditioning, z = from_z) mass to the opposite
// z at every support point with h(x) == region_label.
struct TransportPlan {
  CaseSelector which_case = CaseSelector::Case1;
  int region_label = 0;
  int from_z = 0;
  double fraction = 0.0;
};

inline TransportPlan fair_transport_plan(const CellStats& st) {
  const CaseSelector which = select_case(st);
  double numerator = 0.0, divisor = 0.0;
  TransportPlan plan;
  plan.which_case = which;
  switch (which) {
    case CaseSelector::Case1:
      numerator = st.q * st.r - st.p * st.s;
      divisor = (st.p + st.r) * st.q;
      plan.region_label = 1;
      plan.from_z = 0;
      break;
    case CaseSelector::Case2:
      numerator = st.p * st.s - st.q * st.r;
      divisor = (st.p + st.r) * st.s;
      plan.region_label = 1;
      plan.from_z = 1;
      break;
    case CaseSelector::Case3:
      numerator = st.q * st.r - st.p * st.s;
      divisor = (st.q + st.s) * st.r;
      plan.region_label = 0;
      plan.from_z = 1;
      break;
    case CaseSelector::Case4:
      numerator = st.p * st.s - st.q * st.r;
      divisor = (st.q + st.s) * st.p;
      plan.region_label = 0;
      plan.from_z = 0;
      break;
  }
  if (numerator <= 0.0) {
    plan.fraction = 0.0;
    return plan;
  }
  if (!(divisor > 0.0)) {
    throw DegenerateCase("transport divisor is zero with nonzero numerator");
  }
  double fraction = numerator / divisor;
  if (fraction > 1.0) {
    if (fraction > 1.0 + 1e-9) {
      throw DegenerateCase("transport fraction " + format_double(fraction) + " exceeds 1");
    }
    fraction = 1.0;
  }
  plan.fraction = fraction;
  return plan;
}

// The case-split mass transport making h perfectly fair under the criterion,
// at TV cost exactly |ps - qr| / max(p+r, q+s). For equal opportunity only
// the Y=1 row moves; for demographic parity both label rows move, which keeps
// the transport a pure Z-flip in both cases.
inline DiscreteJointDistribution fair_construct(const DiscreteJointDistribution& d,
                                                const Classifier& h,
                                                FairnessCriterion criterion) {
  const CellStats st = cell_stats(h, d, criterion);
  const TransportPlan plan = fair_transport_plan(st);
  DiscreteJointDistribution out = d;
  if (plan.fraction == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (h(out.point(i).coords) != plan.region_label) continue;
    double zf0 = out.z1_frac(i, 0);
    double zf1 = out.z1_frac(i, 1);
    const auto moved = [&](double zf) {
      if (plan.from_z == 0) return plan.fraction >= 1.0 ? 1.0 : zf + plan.fraction * (1.0 - zf);
      return plan.fraction >= 1.0 ? 0.0 : zf * (1.0 - plan.fraction);
    };
    zf1 = moved(zf1);
    if (criterion == FairnessCriterion::DemographicParity) zf0 = moved(zf0);
    out.set_label_fractions(i, out.y1_frac(i), zf0, zf1);
  }
  return out;
}

// Pure Y-flip lifting Pr(Y = h(x) | X = x) to at least 1/2 + margin at every
// point, making h the pointwise-strict Bayes classifier (hence the unique
// risk minimizer over deterministic hypotheses). Points already past the
// margin are untouched; the flip moves the same fraction of the opposite
// label's mass within each z column.
inline DiscreteJointDistribution stage1_make_unique_minimizer(const DiscreteJointDistribution& d,
                                                              const Classifier& h, double margin) {
  if (!(margin > 0.0 && margin <= 0.5)) {
    throw InvalidMargin("margin " + format_double(margin) + " outside (0, 1/2]");
  }
  check_dim(h, d.dim());
  const double goal = 0.5 + margin;
  DiscreteJointDistribution out = d;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out.point_total(i) > 0.0)) continue;
    const int target = h(out.point(i).coords);
    const double yf = out.y1_frac(i);
    const double have = target == 1 ? yf : 1.0 - yf;
    if (have >= goal) continue;
    const double flip_prob = (goal - have) / (1.0 - have);
    const double zf0 = out.z1_frac(i, 0);
    const double zf1 = out.z1_frac(i, 1);
    if (target == 1) {
      const double new_yf = yf + flip_prob * (1.0 - yf);
      const double new_zf1 = (yf * zf1 + flip_prob * (1.0 - yf) * zf0) / new_yf;
      out.set_label_fractions(i, new_yf, zf0, new_zf1);
    } else {
      const double new_yf = yf * (1.0 - flip_prob);
      const double new_zf0 = ((1.0 - yf) * zf0 + flip_prob * yf * zf1) / (1.0 - new_yf);
      out.set_label_fractions(i, new_yf, new_zf0, zf1);
    }
  }
  return out;
}

struct TwoStageResult {
  DiscreteJointDistribution stage1;
  DiscreteJointDistribution stage2;
  double tv_stage1 = 0.0;
  double tv_stage2 = 0.0;
  double tv_total = 0.0;
  CellStats stage2_input_cells;  // cells of (h, stage1) that drive the transport
  TransportPlan stage2_plan;
  // Filled only when a finite hypothesis set is supplied.
  bool uniqueness_checked = false;
  bool unique_minimizer = false;
  double risk_margin = 0.0;  // min over competitors of risk(g) - risk(h) on stage2
};

// First make h the unique risk minimizer by pure Y-flipping, then make it
// perfectly fair by the case-split Z transport. If hypothesis_set is given,
// h's strict-minimality on stage2 is certified against it (competitors that
// predict identically to h on the support are skipped).
inline TwoStageResult two_stage_attack(const DiscreteJointDistribution& d, const Classifier& h,
                                       double margin, FairnessCriterion criterion,
                                       const std::vector<Classifier>* hypothesis_set = nullptr) {
  DiscreteJointDistribution stage1 = stage1_make_unique_minimizer(d, h, margin);
  const CellStats cells = cell_stats(h, stage1, criterion);
  const TransportPlan plan = fair_transport_plan(cells);
  DiscreteJointDistribution stage2 = fair_construct(stage1, h, criterion);
  TwoStageResult result{std::move(stage1), std::move(stage2)};
  result.tv_stage1 = tv_distance(d, result.stage1);
  result.tv_stage2 = tv_distance(result.stage1, result.stage2);
  result.tv_total = tv_distance(d, result.stage2);
  result.stage2_input_cells = cells;
  result.stage2_plan = plan;
  if (hypothesis_set != nullptr) {
    result.uniqueness_checked = true;
    const double base_risk = risk(h, result.stage2);
    double min_margin = std::numeric_limits<double>::infinity();
    for (const Classifier& g : *hypothesis_set) {
      bool same_predictions = true;
      for (std::size_t i = 0; i < result.stage2.size(); ++i) {
        if (g(result.stage2.point(i).coords) != h(result.stage2.point(i).coords)) {
          same_predictions = false;
          break;
        }
      }
      if (same_predictions) continue;
      min_margin = std::min(min_margin, risk(g, result.stage2) - base_risk);
    }
    result.risk_margin = min_margin;
    result.unique_minimizer = min_margin > 0.0;
  }
  return result;
}

struct ConditionalTvRecord {
  double z0_tv = 0.0;
  double z0_bound = 0.0;
  double z1_tv = 0.0;
  double z1_bound = 0.0;
};

// For demographic parity in Case 1: total variation between the Z=z slices of
// d and of the fair construction, next to the per-group bound
// |Pr(h=1|Z=z) - Pr(h=1)|. The z=0 distance attains the bound exactly; the
// z=1 distance can only exceed it.
inline ConditionalTvRecord conditional_tv_check(const DiscreteJointDistribution& d,
                                                const Classifier& h) {
  const CellStats st = cell_stats(h, d, FairnessCriterion::DemographicParity);
  if (select_case(st) != CaseSelector::Case1) {
    throw CaseNotApplicable("demographic-parity construction is not in case 1");
  }
  const DiscreteJointDistribution fair = fair_construct(d, h, FairnessCriterion::DemographicParity);

  const auto z_marginal = [](const DiscreteJointDistribution& dist, int z) {
    double total = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      total += dist.mass(i, 0, z) + dist.mass(i, 1, z);
    }
    return total;
  };
  ConditionalTvRecord record;
  const double pos_rate = st.q + st.s;  // Pr(h=1)
  for (int z = 0; z < 2; ++z) {
    const double nz_base = z_marginal(d, z);
    const double nz_fair = z_marginal(fair, z);
    if (!(nz_base > 0.0) || !(nz_fair > 0.0)) {
      throw UndefinedGap("a Z group has zero mass in the base or fair distribution");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (int y = 0; y < 2; ++y) {
        sum += std::abs(d.mass(i, y, z) / nz_base - fair.mass(i, y, z) / nz_fair);
      }
    }
    const double pos_rate_z = (z == 0 ? st.q : st.s) / nz_base;  // Pr(h=1|Z=z)
    if (z == 0) {
      record.z0_tv = 0.5 * sum;
      record.z0_bound = std::abs(pos_rate_z - pos_rate);
    } else {
      record.z1_tv = 0.5 * sum;
      record.z1_bound = std::abs(pos_rate_z - pos_rate);
    }
  }
  return record;
}

}  // namespace fairbreak
