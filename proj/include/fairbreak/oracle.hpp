#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "fairbreak/classifier.hpp"
#include "fairbreak/dataset.hpp"
#include "fairbreak/distribution.hpp"
#include "fairbreak/errors.hpp"
#include "fairbreak/metrics.hpp"

namespace fairbreak {

// Minimum-TV search over all per-point (y,z) cell reallocations (the
// X-marginal stays fixed) driving the fairness gap below gap_tol.
//
// Any such reallocation only affects the gap through the aggregated
// (prediction region, y, z) cell masses, and the cheapest realization of an
// aggregate move costs exactly half the sum of the absolute aggregate cell
// changes (mass cannot cross prediction regions, and within a region
// proportional per-point transports attain the triangle-inequality floor).
// The search therefore walks a lattice over the aggregate changes -- four
// free dimensions for equal opportunity (two conditioned cells per region,
// with the Y=0 cells absorbing slack), two for demographic parity (region
// totals are conserved) -- plus, off-lattice, the exactly-fair transport
// curve, so the zero-gap optimum itself is always a candidate. The best
// aggregate move is realized as an explicit distribution and re-verified
// with the ordinary gap and TV routines.
struct OracleResult {
  double best_tv = std::numeric_limits<double>::infinity();
  DiscreteJointDistribution best;
  double achieved_gap = 0.0;  // gap of `best`, recomputed from scratch
  bool feasible = false;      // some candidate met gap_tol
  long long candidates_checked = 0;
};

namespace detail {

// Aggregate masses of one prediction region, by (y,z).
struct RegionCells {
  std::array<std::array<double, 2>, 2> m{{{0.0, 0.0}, {0.0, 0.0}}};
  double pool(int y) const { return m[y][0] + m[y][1]; }
};

inline std::array<RegionCells, 2> region_cells(const DiscreteJointDistribution& d,
                                               const Classifier& h) {
  std::array<RegionCells, 2> regions;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int pred = h(d.point(i).coords);
    for (int y = 0; y < 2; ++y) {
      for (int z = 0; z < 2; ++z) regions[pred].m[y][z] += d.mass(i, y, z);
    }
  }
  return regions;
}

// Signed index sequence 0, 1, -1, 2, -2, ... restricted to [lo, hi];
// |value| is nondecreasing, which makes prefix-cost pruning a plain break.
inline std::vector<long long> spiral_indices(long long lo, long long hi) {
  std::vector<long long> seq;
  if (lo <= 0 && 0 <= hi) seq.push_back(0);
  for (long long k = 1; k <= std::max(std::llabs(lo), std::llabs(hi)); ++k) {
    if (k <= hi) seq.push_back(k);
    if (-k >= lo) seq.push_back(-k);
  }
  return seq;
}

struct AggregateMove {
  // Per (region, y, z): net aggregate mass change; sums to zero per region.
  std::array<std::array<std::array<double, 2>, 2>, 2> delta{};
  double cost = 0.0;
};

// Realizes an aggregate move as per-point proportional transports. Mass moved
// out of a point stays at that point: each point routes its (proportional)
// outflow to the sink cells pro rata to the aggregate sink demands, which
// reproduces the aggregate move exactly and costs exactly `cost`.
inline DiscreteJointDistribution realize_move(const DiscreteJointDistribution& d,
                                              const Classifier& h,
                                              const std::array<RegionCells, 2>& regions,
                                              const AggregateMove& move) {
  DiscreteJointDistribution out = d;
  for (int region = 0; region < 2; ++region) {
    double out_frac[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    double sink_total = 0.0;
    for (int y = 0; y < 2; ++y) {
      for (int z = 0; z < 2; ++z) {
        const double delta = move.delta[region][y][z];
        if (delta < 0.0) {
          const double avail = regions[region].m[y][z];
          if (avail < -delta - 1e-9) {
            throw DegenerateCase("aggregate move exceeds the source cell");
          }
          out_frac[y][z] = std::min(1.0, -delta / avail);
        } else {
          sink_total += delta;
        }
      }
    }
    if (sink_total <= 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (h(out.point(i).coords) != region) continue;
      double cell[2][2];
      for (int y = 0; y < 2; ++y) {
        for (int z = 0; z < 2; ++z) cell[y][z] = out.mass(i, y, z);
      }
      double moved = 0.0;
      for (int y = 0; y < 2; ++y) {
        for (int z = 0; z < 2; ++z) {
          const double take = cell[y][z] * out_frac[y][z];
          cell[y][z] -= take;
          moved += take;
        }
      }
      if (moved > 0.0) {
        for (int y = 0; y < 2; ++y) {
          for (int z = 0; z < 2; ++z) {
            const double delta = move.delta[region][y][z];
            if (delta > 0.0) cell[y][z] += moved * (delta / sink_total);
          }
        }
      }
      const double y0 = cell[0][0] + cell[0][1];
      const double y1 = cell[1][0] + cell[1][1];
      const double total = y0 + y1;
      out.set_label_fractions(i, total > 0.0 ? y1 / total : 0.0,
                              y0 > 0.0 ? cell[0][1] / y0 : 0.0,
                              y1 > 0.0 ? cell[1][1] / y1 : 0.0);
    }
  }
  return out;
}

inline double gap_or_infinity(double k0, double n0, double k1, double n1) {
  if (!(n0 > 0.0) || !(n1 > 0.0)) return std::numeric_limits<double>::infinity();
  return gap_from_group_rates(std::max(k0, 0.0), n0, std::max(k1, 0.0), n1);
}

}  // namespace detail

inline OracleResult brute_force_min_tv(const DiscreteJointDistribution& d, const Classifier& h,
                                       double grid_step, double gap_tol = -1.0,
                                       FairnessCriterion criterion =
                                           FairnessCriterion::EqualOpportunity) {
  if (d.size() > 4) {
    throw InstanceTooLarge("brute-force search is capped at 4 support points");
  }
  if (!(grid_step > 0.0 && grid_step <= 0.25)) {
    throw InvalidArgument("grid_step must lie in (0, 0.25]");
  }
  if (gap_tol < 0.0) gap_tol = 0.5 * grid_step;
  check_dim(h, d.dim());

  const std::array<detail::RegionCells, 2> regions = detail::region_cells(d, h);
  const bool dp = criterion == FairnessCriterion::DemographicParity;
  // Conditioned cells: p,r in region 0 and q,s in region 1, by z.
  const auto cond = [&](int region, int z) {
    double m = regions[region].m[1][z];
    if (dp) m += regions[region].m[0][z];
    return m;
  };
  const double p = cond(0, 0), r = cond(0, 1);
  const double q = cond(1, 0), s = cond(1, 1);
  // Slack pools for equal opportunity: the Y=0 masses of each region.
  const double pool0 = dp ? 0.0 : regions[0].pool(0);
  const double pool1 = dp ? 0.0 : regions[1].pool(0);

  OracleResult result{std::numeric_limits<double>::infinity(), d};
  long long checked = 0;

  // Candidate move in conditioned-cell coordinates; slack (equal opportunity
  // only) is exchanged with the region's Y=0 cells, drawn z0-first.
  const auto build_move = [&](double dp0, double dr0, double dq1, double ds1,
                              double cost) {
    detail::AggregateMove move;
    move.cost = cost;
    const int y_cond = 1;
    const auto fill_region = [&](int region, double d_z0, double d_z1) {
      if (dp) {
        // Split each z column's change across the y rows pro rata, so both
        // rows stay nonnegative.
        for (int z = 0; z < 2; ++z) {
          const double dz = z == 0 ? d_z0 : d_z1;
          const double col = regions[region].m[0][z] + regions[region].m[1][z];
          if (dz == 0.0) continue;
          if (col > 0.0) {
            move.delta[region][0][z] = dz * (regions[region].m[0][z] / col);
            move.delta[region][1][z] = dz * (regions[region].m[1][z] / col);
          } else {
            move.delta[region][1][z] = dz;
          }
        }
        return;
      }
      move.delta[region][y_cond][0] = d_z0;
      move.delta[region][y_cond][1] = d_z1;
      const double slack = -(d_z0 + d_z1);
      if (slack == 0.0) return;
      if (slack > 0.0) {
        move.delta[region][0][0] = slack;  // dump into the y0,z0 cell
      } else {
        const double need = -slack;
        const double from_z0 = std::min(need, regions[region].m[0][0]);
        move.delta[region][0][0] = -from_z0;
        move.delta[region][0][1] = -(need - from_z0);
      }
    };
    fill_region(0, dp0, dr0);
    fill_region(1, dq1, ds1);
    return move;
  };

  const auto consider = [&](double dp0, double dq1, double dr0, double ds1, double cost) {
    ++checked;
    if (cost >= result.best_tv) return;
    const double p2 = p + dp0, q2 = q + dq1, r2 = r + dr0, s2 = s + ds1;
    if (p2 < -1e-12 || q2 < -1e-12 || r2 < -1e-12 || s2 < -1e-12) return;
    const double gap = detail::gap_or_infinity(q2, p2 + q2, s2, r2 + s2);
    if (!(gap <= gap_tol)) return;
    const detail::AggregateMove move = build_move(dp0, dr0, dq1, ds1, cost);
    DiscreteJointDistribution realized = detail::realize_move(d, h, regions, move);
    double realized_gap;
    try {
      realized_gap = fairness_gap(h, realized, criterion);
    } catch (const UndefinedGap&) {
      return;
    }
    if (!(realized_gap <= gap_tol + 1e-9)) return;
    const double realized_tv = tv_distance(d, realized);
    if (realized_tv < result.best_tv) {
      result.best_tv = realized_tv;
      result.best = std::move(realized);
      result.achieved_gap = realized_gap;
      result.feasible = true;
    }
  };

  // The no-op candidate: the input may already satisfy the tolerance.
  consider(0.0, 0.0, 0.0, 0.0, 0.0);

  // The exactly-fair transport curve: pure z-swaps of u in region 1 and v in
  // region 0 are fair iff v(u) = (p*s - q*r + u*(p + r)) / (q + s); cost is
  // |u| + |v|. Includes the closed-form optimum (the case-split transport).
  if (q + s > 0.0) {
    std::vector<double> u_values;
    const long long u_lo = static_cast<long long>(std::ceil(-s / grid_step));
    const long long u_hi = static_cast<long long>(std::floor(q / grid_step));
    for (long long k = u_lo; k <= u_hi; ++k) u_values.push_back(k * grid_step);
    u_values.push_back(-s);
    u_values.push_back(q);
    u_values.push_back(0.0);
    if (p + r > 0.0) u_values.push_back((q * r - p * s) / (p + r));
    for (double u : u_values) {
      if (u < -s - 1e-15 || u > q + 1e-15) continue;
      const double v = (p * s - q * r + u * (p + r)) / (q + s);
      if (v < -r - 1e-15 || v > p + 1e-15) continue;
      consider(-v, -u, v, u, std::abs(u) + std::abs(v));
    }
  }

  // Lattice over the aggregate changes, ordered by |change| per dimension so
  // a partial-cost bound can break each loop early.
  const auto index_range = [&](double lo, double hi) {
    return detail::spiral_indices(static_cast<long long>(std::ceil(lo / grid_step)),
                                  static_cast<long long>(std::floor(hi / grid_step)));
  };
  const auto pair_cost = [](double a, double b) {
    return 0.5 * (std::abs(a) + std::abs(b) + std::abs(a + b));
  };
  // Bounds: a conditioned cell can lose at most itself and gain at most the
  // other cell plus (equal opportunity) the region's slack pool.
  const std::vector<long long> qi = index_range(-q, s + pool1);
  const std::vector<long long> si = index_range(-s, q + pool1);
  const std::vector<long long> pi = index_range(-p, r + pool0);
  const std::vector<long long> ri = index_range(-r, p + pool0);
  for (long long iq : qi) {
    const double dq1 = iq * grid_step;
    if (std::abs(dq1) >= result.best_tv) break;
    for (long long is : si) {
      const double ds1 = is * grid_step;
      if (std::abs(ds1) >= result.best_tv) break;
      if (dp && is != -iq) continue;  // region totals are conserved
      const double c1 = pair_cost(dq1, ds1);
      if (c1 >= result.best_tv) continue;
      if (dq1 + ds1 > pool1 + 1e-12) continue;  // slack draw exceeds the pool
      for (long long ip : pi) {
        const double dp0 = ip * grid_step;
        if (c1 + std::abs(dp0) >= result.best_tv) break;
        for (long long ir : ri) {
          const double dr0 = ir * grid_step;
          if (c1 + std::abs(dr0) >= result.best_tv) break;
          if (dp && ir != -ip) continue;
          const double cost = c1 + pair_cost(dp0, dr0);
          if (cost >= result.best_tv) continue;
          if (dp0 + dr0 > pool0 + 1e-12) continue;
          consider(dp0, dq1, dr0, ds1, cost);
        }
      }
    }
  }

  result.candidates_checked = checked;
  return result;
}

// Direct recomputation of both criteria's conditional rates and gaps by raw
// summation, sharing no code with the metrics routines; used to cross-check
// them on randomized inputs.
struct GroupRateRecord {
  bool defined = false;
  double rate_z0 = 0.0, rate_z1 = 0.0, rate_pooled = 0.0, gap = 0.0;
};

struct GapRecheck {
  GroupRateRecord eo;
  GroupRateRecord dp;
};

namespace detail {

template <typename MassFn>
GroupRateRecord recheck_rates(MassFn&& accumulate) {
  // accumulate(pos, tot) adds per-z positive-prediction and total masses.
  double pos[2] = {0.0, 0.0}, tot[2] = {0.0, 0.0};
  accumulate(pos, tot);
  GroupRateRecord rec;
  if (!(tot[0] > 0.0) || !(tot[1] > 0.0)) return rec;
  rec.defined = true;
  rec.rate_z0 = pos[0] / tot[0];
  rec.rate_z1 = pos[1] / tot[1];
  rec.rate_pooled = (pos[0] + pos[1]) / (tot[0] + tot[1]);
  rec.gap = std::max(std::abs(rec.rate_z0 - rec.rate_pooled),
                     std::abs(rec.rate_z1 - rec.rate_pooled));
  return rec;
}

}  // namespace detail

inline GapRecheck exhaustive_gap_recheck(const Classifier& h, const DiscreteJointDistribution& d) {
  check_dim(h, d.dim());
  GapRecheck out;
  out.eo = detail::recheck_rates([&](double* pos, double* tot) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      const int pred = h(d.point(i).coords);
      for (int z = 0; z < 2; ++z) {
        tot[z] += d.mass(i, 1, z);
        if (pred == 1) pos[z] += d.mass(i, 1, z);
      }
    }
  });
  out.dp = detail::recheck_rates([&](double* pos, double* tot) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      const int pred = h(d.point(i).coords);
      for (int y = 0; y < 2; ++y) {
        for (int z = 0; z < 2; ++z) {
          tot[z] += d.mass(i, y, z);
          if (pred == 1) pos[z] += d.mass(i, y, z);
        }
      }
    }
  });
  return out;
}

inline GapRecheck exhaustive_gap_recheck(const Classifier& h, const LabeledDataset& d) {
  check_dim(h, d.dim());
  GapRecheck out;
  out.eo = detail::recheck_rates([&](double* pos, double* tot) {
    for (const Sample& smp : d.samples()) {
      if (smp.y != 1) continue;
      tot[smp.z] += 1.0;
      if (h(smp.x) == 1) pos[smp.z] += 1.0;
    }
  });
  out.dp = detail::recheck_rates([&](double* pos, double* tot) {
    for (const Sample& smp : d.samples()) {
      tot[smp.z] += 1.0;
      if (h(smp.x) == 1) pos[smp.z] += 1.0;
    }
  });
  return out;
}

}  // namespace fairbreak
