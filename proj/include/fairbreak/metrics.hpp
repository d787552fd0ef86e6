#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "fairbreak/classifier.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/distribution.hpp"
#include "fairbreak/errors.hpp"

namespace fairbreak {

enum class FairnessCriterion { EqualOpportunity, DemographicParity };

// Joint masses over (h(X), Z) restricted to the criterion's conditioning event
// (Y=1 for equal opportunity, everything for demographic parity):
//   p = Pr(h=0, cond, Z=0)   q = Pr(h=1, cond, Z=0)
//   r = Pr(h=0, cond, Z=1)   s = Pr(h=1, cond, Z=1)
struct CellStats {
  double p = 0.0, q = 0.0, r = 0.0, s = 0.0;
};

struct CellCounts {
  long long p = 0, q = 0, r = 0, s = 0;
};

inline void check_dim(const Classifier& h, int dim) {
  if (h.required_dim() >= 0 && h.required_dim() != dim) {
    throw DimensionError("classifier dimension " + std::to_string(h.required_dim()) +
                         " does not match data dimension " + std::to_string(dim));
  }
}

// Expected 0/1 disagreement Pr(h(X) != Y). Depends only on the X-marginal and
// Pr(Y=1|x), so it is bit-exactly invariant under any pure Z transport.
inline double risk(const Classifier& h, const DiscreteJointDistribution& d) {
  check_dim(h, d.dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int pred = h(d.point(i).coords);
    sum += pred == 1 ? d.point_total(i) * (1.0 - d.y1_frac(i)) : d.point_total(i) * d.y1_frac(i);
  }
  return sum;
}

inline double risk(const Classifier& h, const LabeledDataset& d) {
  check_dim(h, d.dim());
  long long errors = 0;
  for (const Sample& s : d.samples()) {
    if (h(s.x) != s.y) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(d.size());
}

inline CellStats cell_stats(const Classifier& h, const DiscreteJointDistribution& d,
                            FairnessCriterion criterion = FairnessCriterion::EqualOpportunity) {
  check_dim(h, d.dim());
  CellStats st;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int pred = h(d.point(i).coords);
    for (int z = 0; z < 2; ++z) {
      double m = d.mass(i, 1, z);
      if (criterion == FairnessCriterion::DemographicParity) m += d.mass(i, 0, z);
      if (pred == 0) {
        (z == 0 ? st.p : st.r) += m;
      } else {
        (z == 0 ? st.q : st.s) += m;
      }
    }
  }
  return st;
}

inline CellCounts cell_counts(const Classifier& h, const LabeledDataset& d,
                              FairnessCriterion criterion = FairnessCriterion::EqualOpportunity) {
  check_dim(h, d.dim());
  CellCounts ct;
  for (const Sample& s : d.samples()) {
    if (criterion == FairnessCriterion::EqualOpportunity && s.y != 1) continue;
    const int pred = h(s.x);
    if (pred == 0) {
      ++(s.z == 0 ? ct.p : ct.r);
    } else {
      ++(s.z == 0 ? ct.q : ct.s);
    }
  }
  return ct;
}

// Max over z of |Pr(h=1 | cond, Z=z) - Pr(h=1 | cond)| given the per-group
// positive-prediction masses k_z and group masses n_z.
inline double gap_from_group_rates(double k0, double n0, double k1, double n1) {
  if (!(n0 > 0.0) || !(n1 > 0.0)) {
    throw UndefinedGap("a conditioning group has zero mass");
  }
  const double n = n0 + n1;
  const double k = k0 + k1;
  const double dev0 = std::abs(k0 * n - k * n0) / (n0 * n);
  const double dev1 = std::abs(k1 * n - k * n1) / (n1 * n);
  return std::max(dev0, dev1);
}

// Integer-count variant. |k0*n1 - k1*n0| equals both per-z deviation
// numerators over the common denominator min(n0,n1)*(n0+n1); exact in int64.
inline double gap_from_group_counts(long long k0, long long n0, long long k1, long long n1) {
  if (n0 <= 0 || n1 <= 0) {
    throw UndefinedGap("a conditioning group has zero samples");
  }
  const long long num = std::llabs(k0 * n1 - k1 * n0);
  const long long den = std::min(n0, n1) * (n0 + n1);
  return static_cast<double>(num) / static_cast<double>(den);
}

inline double gap_from_cells(const CellStats& st) {
  return gap_from_group_rates(st.q, st.p + st.q, st.s, st.r + st.s);
}

inline double gap_from_cells(const CellCounts& ct) {
  return gap_from_group_counts(ct.q, ct.p + ct.q, ct.s, ct.r + ct.s);
}

inline double fairness_gap(const Classifier& h, const DiscreteJointDistribution& d,
                           FairnessCriterion criterion) {
  return gap_from_cells(cell_stats(h, d, criterion));
}

inline double fairness_gap(const Classifier& h, const LabeledDataset& d,
                           FairnessCriterion criterion) {
  return gap_from_cells(cell_counts(h, d, criterion));
}

// C(h,D) = |ps - qr| / max(p+r, q+s).
inline double c_bound(const CellStats& st) {
  const double denom = std::max(st.p + st.r, st.q + st.s);
  if (!(denom > 0.0)) throw UndefinedBound("all four cells are zero");
  return std::abs(st.p * st.s - st.q * st.r) / denom;
}

inline double c_bound(const CellCounts& ct) {
  const long long denom = std::max(ct.p + ct.r, ct.q + ct.s);
  if (denom <= 0) throw UndefinedBound("all four cells are zero");
  return static_cast<double>(std::llabs(ct.p * ct.s - ct.q * ct.r)) /
         static_cast<double>(denom);
}

// Alternative closed form of the same bound:
//   gap * min(Pr(Y=1,Z=0), Pr(Y=1,Z=1)) / max(TPR, FNR)
// computed from first principles as an independent evaluation route.
inline double c_bound_alt(const Classifier& h, const DiscreteJointDistribution& d) {
  check_dim(h, d.dim());
  double pos_z0 = 0.0, pos_z1 = 0.0, true_pos = 0.0, false_neg = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    pos_z0 += d.mass(i, 1, 0);
    pos_z1 += d.mass(i, 1, 1);
    const double positive_mass = d.mass(i, 1, 0) + d.mass(i, 1, 1);
    if (h(d.point(i).coords) == 1) {
      true_pos += positive_mass;
    } else {
      false_neg += positive_mass;
    }
  }
  const double total_pos = pos_z0 + pos_z1;
  if (!(total_pos > 0.0) || !(pos_z0 > 0.0) || !(pos_z1 > 0.0)) {
    throw UndefinedGap("a (Y=1,Z=z) group has zero mass");
  }
  const double gap =
      fairness_gap(h, d, FairnessCriterion::EqualOpportunity);
  const double tpr = true_pos / total_pos;
  const double fnr = false_neg / total_pos;
  return gap * std::min(pos_z0, pos_z1) / std::max(tpr, fnr);
}

}  // namespace fairbreak
