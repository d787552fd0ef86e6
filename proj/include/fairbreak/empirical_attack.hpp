#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "fairbreak/classifier.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/io.hpp"
#include "fairbreak/metrics.hpp"
#include "fairbreak/rng.hpp"

namespace fairbreak {

// Branch of the integer Z-flip attack: which (h(x), Y=1, z) cell the flips
// target, and how many samples to flip. Shared by the attack itself and by
// the closed-form bound so the two agree bit for bit.
struct ZFlipBranch {
  long long alpha = 0;
  int cell_h = 0;  // prediction value of the designated cell
  int cell_z = 0;  // current z value of the designated cell
};

inline ZFlipBranch z_flip_branch(const CellCounts& c) {
  const long long denom = std::max(c.p + c.r, c.q + c.s);
  if (denom <= 0) throw UndefinedBound("no positive-label samples");
  const long long cross = std::llabs(c.p * c.s - c.q * c.r);
  ZFlipBranch branch;
  branch.alpha = cross / denom;  // floor: all quantities nonnegative
  const bool row = c.p + c.r >= c.q + c.s;
  const bool ratio = c.q * c.r >= c.p * c.s;
  if (row && ratio) {
    branch.cell_h = 1;
    branch.cell_z = 0;
  } else if (row) {
    branch.cell_h = 1;
    branch.cell_z = 1;
  } else if (ratio) {
    branch.cell_h = 0;
    branch.cell_z = 1;
  } else {
    branch.cell_h = 0;
    branch.cell_z = 0;
  }
  return branch;
}

// Equal-opportunity gap of the training set after flipping z on `alpha`
// samples of the designated cell, computed in closed form from the four
// pre-attack cell counts. Matches the measured post-attack gap exactly
// because both reduce to the same integer-count expression.
inline double empirical_gap_bound(long long p, long long q, long long r, long long s,
                                  long long alpha) {
  if (p < 0 || q < 0 || r < 0 || s < 0) throw InvalidArgument("negative cell count");
  if (alpha < 0) throw BudgetError("negative flip budget");
  const CellCounts counts{p, q, r, s};
  const ZFlipBranch branch = z_flip_branch(counts);
  long long p2 = p, q2 = q, r2 = r, s2 = s;
  if (branch.cell_h == 1 && branch.cell_z == 0) {
    q2 -= alpha;
    s2 += alpha;
  } else if (branch.cell_h == 1 && branch.cell_z == 1) {
    q2 += alpha;
    s2 -= alpha;
  } else if (branch.cell_h == 0 && branch.cell_z == 1) {
    p2 += alpha;
    r2 -= alpha;
  } else {
    p2 -= alpha;
    r2 += alpha;
  }
  if (p2 < 0 || q2 < 0 || r2 < 0 || s2 < 0) {
    throw BudgetError("flip budget exceeds the designated cell");
  }
  return gap_from_group_counts(q2, p2 + q2, s2, r2 + s2);
}

enum class RandomFlipKind { Y, Z, YZ };

inline std::string to_string(RandomFlipKind k) {
  switch (k) {
    case RandomFlipKind::Y: return "rand-y";
    case RandomFlipKind::Z: return "rand-z";
    case RandomFlipKind::YZ: return "rand-yz";
  }
  return "?";
}

struct AttackReport {
  LabeledDataset poisoned;
  std::vector<std::size_t> flipped_indices;  // ascending positions in the input
  double poisoning_rate = 0.0;
  double pre_gap = 0.0;   // equal-opportunity gap before / after; NaN when a
  double post_gap = 0.0;  // Z group (among Y=1) ends up empty
  double pre_risk = 0.0;
  double post_risk = 0.0;
  long long alpha = 0;              // z-flip budget (z_flip_attack only)
  int cell_h = -1, cell_z = -1;     // designated cell (z_flip_attack only)
};

namespace detail {
inline double gap_or_nan(const Classifier& h, const LabeledDataset& d) {
  try {
    return fairness_gap(h, d, FairnessCriterion::EqualOpportunity);
  } catch (const UndefinedGap&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}
}  // namespace detail

// Integer Z-flip attack against the equal-opportunity gap: flip the sensitive
// attribute of `alpha` uniformly chosen samples in the designated
// (prediction, Y=1, z) cell. The attacked model h is needed only to locate
// the cell; labels and features are untouched.
inline AttackReport z_flip_attack(const LabeledDataset& d, const Classifier& h,
                                  std::uint64_t rng_seed) {
  check_dim(h, d.dim());
  const CellCounts counts = cell_counts(h, d, FairnessCriterion::EqualOpportunity);
  const ZFlipBranch branch = z_flip_branch(counts);

  std::vector<std::size_t> cell_members;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Sample& smp = d.sample(i);
    if (smp.y == 1 && smp.z == branch.cell_z && h(smp.x) == branch.cell_h) {
      cell_members.push_back(i);
    }
  }
  if (branch.alpha > static_cast<long long>(cell_members.size())) {
    throw BudgetError("flip budget exceeds the designated cell");
  }

  Rng rng(rng_seed);
  const std::vector<std::size_t> picks =
      rng.sample_without_replacement(cell_members.size(), static_cast<std::size_t>(branch.alpha));
  std::vector<std::size_t> flipped;
  flipped.reserve(picks.size());
  for (std::size_t k : picks) flipped.push_back(cell_members[k]);
  std::sort(flipped.begin(), flipped.end());

  AttackReport report{d.with_flipped(flipped, /*flip_y=*/false, /*flip_z=*/true)};
  report.flipped_indices = std::move(flipped);
  report.poisoning_rate =
      static_cast<double>(branch.alpha) / static_cast<double>(d.size());
  report.pre_gap = detail::gap_or_nan(h, d);
  report.post_gap = detail::gap_or_nan(h, report.poisoned);
  report.pre_risk = risk(h, d);
  report.post_risk = risk(h, report.poisoned);
  report.alpha = branch.alpha;
  report.cell_h = branch.cell_h;
  report.cell_z = branch.cell_z;
  return report;
}

// Baseline: flip Y, Z, or both on `count` uniformly chosen samples.
inline AttackReport random_flip_attack(const LabeledDataset& d, RandomFlipKind kind,
                                       std::size_t count, std::uint64_t rng_seed,
                                       const Classifier& h) {
  check_dim(h, d.dim());
  if (count > d.size()) throw BudgetError("flip count exceeds the dataset");
  Rng rng(rng_seed);
  std::vector<std::size_t> flipped = rng.sample_without_replacement(d.size(), count);
  std::sort(flipped.begin(), flipped.end());
  const bool flip_y = kind != RandomFlipKind::Z;
  const bool flip_z = kind != RandomFlipKind::Y;

  AttackReport report{d.with_flipped(flipped, flip_y, flip_z)};
  report.flipped_indices = std::move(flipped);
  report.poisoning_rate = static_cast<double>(count) / static_cast<double>(d.size());
  report.pre_gap = detail::gap_or_nan(h, d);
  report.post_gap = detail::gap_or_nan(h, report.poisoned);
  report.pre_risk = risk(h, d);
  report.post_risk = risk(h, report.poisoned);
  return report;
}

inline std::string attack_report_text(const AttackReport& report, const std::string& attack_name) {
  std::string out;
  out += "attack=" + attack_name + "\n";
  out += "samples=" + std::to_string(report.poisoned.size()) + "\n";
  out += "flip_count=" + std::to_string(report.flipped_indices.size()) + "\n";
  out += "poisoning_rate=" + format_double(report.poisoning_rate) + "\n";
  if (report.cell_h >= 0) {
    out += "alpha=" + std::to_string(report.alpha) + "\n";
    out += "designated_cell=h" + std::to_string(report.cell_h) + "z" +
           std::to_string(report.cell_z) + "\n";
  }
  out += "pre_risk=" + format_double(report.pre_risk) + "\n";
  out += "post_risk=" + format_double(report.post_risk) + "\n";
  out += "pre_gap=" + format_double(report.pre_gap) + "\n";
  out += "post_gap=" + format_double(report.post_gap) + "\n";
  std::string ids;
  for (std::size_t i = 0; i < report.flipped_indices.size(); ++i) {
    if (i > 0) ids += ',';
    ids += std::to_string(report.flipped_indices[i]);
  }
  out += "flipped_indices=" + ids + "\n";
  return out;
}

}  // namespace fairbreak
