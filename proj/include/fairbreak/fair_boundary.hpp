#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fairbreak/errors.hpp"
#include "fairbreak/io.hpp"
#include "fairbreak/rng.hpp"

namespace fairbreak {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean{0.0, 0.0};
  Mat2 cov{{{1.0, 0.0}, {0.0, 1.0}}};
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;
};

namespace detail {

inline void validate_cov(const Mat2& cov) {
  const double a = cov[0][0], b = cov[0][1], c = cov[1][0], d = cov[1][1];
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d), 1.0});
  if (std::abs(b - c) > 1e-12 * scale) {
    throw SingularCovariance("covariance is not symmetric");
  }
  if (!(a > 0.0) || !(d > 0.0) || !(a * d - b * c > 0.0)) {
    throw SingularCovariance("covariance is not positive definite");
  }
}

// Lower-triangular Cholesky factor of a validated 2x2 covariance.
inline Mat2 cholesky2(const Mat2& cov) {
  validate_cov(cov);
  const double l00 = std::sqrt(cov[0][0]);
  const double l10 = cov[1][0] / l00;
  const double l11 = std::sqrt(cov[1][1] - l10 * l10);
  if (!(l11 > 0.0)) throw SingularCovariance("covariance is numerically singular");
  return Mat2{{{l00, 0.0}, {l10, l11}}};
}

}  // namespace detail

inline void validate_mixture(const GaussianMixture& g) {
  if (g.components.empty()) throw InvalidArgument("mixture has no components");
  double total = 0.0;
  for (const GaussianComponent& c : g.components) {
    if (c.weight < 0.0) throw InvalidArgument("negative mixture weight");
    detail::validate_cov(c.cov);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("mixture weights sum to " + format_double(total));
  }
}

// Density of one component at x (the component's mixture weight is ignored).
inline double component_pdf(const GaussianComponent& c, const Vec2& x) {
  detail::validate_cov(c.cov);
  const double a = c.cov[0][0], b = c.cov[0][1], d = c.cov[1][1];
  const double det = a * d - b * b;
  const double dx = x[0] - c.mean[0], dy = x[1] - c.mean[1];
  const double quad = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::exp(-0.5 * quad) / (two_pi * std::sqrt(det));
}

inline double mixture_pdf(const GaussianMixture& g, const Vec2& x) {
  validate_mixture(g);
  double total = 0.0;
  for (const GaussianComponent& c : g.components) total += c.weight * component_pdf(c, x);
  return total;
}

// Draws x = mean + L * n with L the Cholesky factor; consumes two normals.
inline Vec2 sample_gaussian(const GaussianComponent& c, Rng& rng) {
  const Mat2 l = detail::cholesky2(c.cov);
  const double n0 = rng.normal(), n1 = rng.normal();
  return Vec2{c.mean[0] + l[0][0] * n0, c.mean[1] + l[1][0] * n0 + l[1][1] * n1};
}

// Consumes one uniform (component choice) then two normals.
inline Vec2 sample_mixture(const GaussianMixture& g, Rng& rng) {
  validate_mixture(g);
  const double u = rng.uniform();
  double cum = 0.0;
  for (const GaussianComponent& c : g.components) {
    cum += c.weight;
    if (u < cum) return sample_gaussian(c, rng);
  }
  return sample_gaussian(g.components.back(), rng);
}

// Probability that a mixture draw lands in the half-plane
//   { x : (x - anchor) . (cos theta, sin theta) >= 0 },
// in closed form: each component contributes its weight times
// Phi(((mean - anchor) . u) / sqrt(u' cov u)).
inline double halfplane_prob(const GaussianMixture& g, double theta, const Vec2& anchor) {
  validate_mixture(g);
  const double ux = std::cos(theta), uy = std::sin(theta);
  double total = 0.0;
  for (const GaussianComponent& c : g.components) {
    const double var = ux * (c.cov[0][0] * ux + c.cov[0][1] * uy) +
                       uy * (c.cov[1][0] * ux + c.cov[1][1] * uy);
    if (!(var > 0.0)) throw SingularCovariance("zero variance along the boundary normal");
    const double proj = (c.mean[0] - anchor[0]) * ux + (c.mean[1] - anchor[1]) * uy;
    const double t = proj / std::sqrt(var);
    total += c.weight * 0.5 * std::erfc(-t / std::sqrt(2.0));
  }
  return total;
}

struct FairBoundaryResult {
  double theta = 0.0;
  Vec2 anchor{0.0, 0.0};
  double residual = 0.0;  // halfplane_prob(g0) - halfplane_prob(g1) at theta
  int iterations = 0;
};

// Finds a boundary direction through `anchor` giving both groups the same
// half-plane probability. H(theta) = P0 - P1 satisfies H(pi) = -H(0), so a
// root exists in [0, pi]; bisection drives |H| below tol.
inline FairBoundaryResult find_fair_direction(const GaussianMixture& g0, const GaussianMixture& g1,
                                               const Vec2& anchor, double tol = 1e-12,
                                               int max_iters = 200) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const auto imbalance = [&](double theta) {
    return halfplane_prob(g0, theta, anchor) - halfplane_prob(g1, theta, anchor);
  };
  constexpr double pi = 3.14159265358979323846264338328;
  double lo = 0.0, hi = pi;
  double h_lo = imbalance(lo);
  if (std::abs(h_lo) <= tol) return FairBoundaryResult{lo, anchor, h_lo, 0};
  const double h_hi = imbalance(hi);
  if (std::abs(h_hi) <= tol) return FairBoundaryResult{hi, anchor, h_hi, 0};
  if ((h_lo > 0.0) == (h_hi > 0.0)) {
    // Mathematically impossible (antipodal half-planes are complements);
    // can only happen when both values sit at rounding level above tol.
    throw NoConvergence("no sign change over the half circle");
  }
  for (int iter = 1; iter <= max_iters; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double h_mid = imbalance(mid);
    if (std::abs(h_mid) <= tol) return FairBoundaryResult{mid, anchor, h_mid, iter};
    if ((h_mid > 0.0) == (h_lo > 0.0)) {
      lo = mid;
      h_lo = h_mid;
    } else {
      hi = mid;
    }
  }
  throw NoConvergence("residual above tolerance after the iteration limit");
}

}  // namespace fairbreak
