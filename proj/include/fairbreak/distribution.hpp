#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairbreak/errors.hpp"
#include "fairbreak/io.hpp"

namespace fairbreak {

struct SupportPoint {
  int id = 0;
  std::vector<double> coords;
};

enum class FlipKind { General, PureY, PureZ, PureYZ };

// Finite-support joint distribution over (X, Y, Z) with Y,Z binary.
//
// Internally each support point stores its X-marginal mass together with the
// label fractions Pr(Y=1|x) and Pr(Z=1|x,y). Flip transforms only ever touch
// the fractions, so the X-marginal (and hence anything that depends on x and
// y alone, like 0/1 risk) is preserved bit-for-bit, not merely within
// tolerance. The four (y,z) cell masses are derived products.
class DiscreteJointDistribution {
 public:
  static constexpr double kTotalMassTolerance = 1e-12;

  // Cells are given per point in the order (y0z0, y0z1, y1z0, y1z1).
  DiscreteJointDistribution(int dim, std::vector<SupportPoint> points,
                            const std::vector<std::array<double, 4>>& cells,
                            double total_tolerance = kTotalMassTolerance)
      : dim_(dim), points_(std::move(points)) {
    if (dim_ < 1) throw DimensionError("distribution dimension must be >= 1");
    if (points_.size() != cells.size()) {
      throw InvalidArgument("points and mass table differ in length");
    }
    if (points_.empty()) throw InvalidArgument("distribution needs at least one support point");
    node_.reserve(points_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const SupportPoint& pt = points_[i];
      if (static_cast<int>(pt.coords.size()) != dim_) {
        throw DimensionError("support point " + std::to_string(pt.id) +
                             " has wrong coordinate count");
      }
      if (!id_index_.emplace(pt.id, i).second) {
        throw InvalidArgument("duplicate support point id " + std::to_string(pt.id));
      }
      const std::array<double, 4>& c = cells[i];
      for (double m : c) {
        if (!(m >= 0.0)) throw InvalidArgument("negative or NaN mass at point " + std::to_string(pt.id));
      }
      Node node;
      node.total = (c[0] + c[1]) + (c[2] + c[3]);
      const double y0 = c[0] + c[1];
      const double y1 = c[2] + c[3];
      node.y1_frac = node.total > 0.0 ? y1 / node.total : 0.0;
      node.z1_frac_y0 = y0 > 0.0 ? c[1] / y0 : 0.0;
      node.z1_frac_y1 = y1 > 0.0 ? c[3] / y1 : 0.0;
      total += node.total;
      node_.push_back(node);
    }
    if (std::abs(total - 1.0) > total_tolerance) {
      throw InvalidArgument("total mass " + format_double(total) + " is not 1 within tolerance");
    }
  }

  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const SupportPoint& point(std::size_t i) const { return points_[i]; }
  const std::vector<SupportPoint>& points() const { return points_; }

  std::size_t index_of(int point_id) const {
    const auto it = id_index_.find(point_id);
    if (it == id_index_.end()) {
      throw InvalidArgument("unknown support point id " + std::to_string(point_id));
    }
    return it->second;
  }

  // X-marginal mass of point i; bit-stable under all flip transforms.
  double point_total(std::size_t i) const { return node_[i].total; }

  double y1_frac(std::size_t i) const { return node_[i].y1_frac; }
  double z1_frac(std::size_t i, int y) const {
    return y ? node_[i].z1_frac_y1 : node_[i].z1_frac_y0;
  }

  double mass(std::size_t i, int y, int z) const {
    const Node& n = node_[i];
    const double label_mass = y ? n.total * n.y1_frac : n.total * (1.0 - n.y1_frac);
    const double zf = y ? n.z1_frac_y1 : n.z1_frac_y0;
    return z ? label_mass * zf : label_mass * (1.0 - zf);
  }

  double total_mass() const {
    double total = 0.0;
    for (const Node& n : node_) total += n.total;
    return total;
  }

  // Replaces the label fractions of point i. The X-marginal cannot change.
  // Fractions a hair outside [0,1] (transport rounding) are clamped.
  void set_label_fractions(std::size_t i, double y1_frac, double z1_frac_y0, double z1_frac_y1) {
    node_[i].y1_frac = checked_fraction(y1_frac, "Pr(Y=1|x)");
    node_[i].z1_frac_y0 = checked_fraction(z1_frac_y0, "Pr(Z=1|x,y=0)");
    node_[i].z1_frac_y1 = checked_fraction(z1_frac_y1, "Pr(Z=1|x,y=1)");
  }

 private:
  struct Node {
    double total = 0.0;
    double y1_frac = 0.0;
    double z1_frac_y0 = 0.0;
    double z1_frac_y1 = 0.0;
  };

  static double checked_fraction(double f, const char* what) {
    constexpr double kSlack = 1e-9;
    if (!(f >= -kSlack && f <= 1.0 + kSlack)) {
      throw InvalidFraction(std::string(what) + " = " + format_double(f) + " is not in [0,1]");
    }
    return f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
  }

  int dim_;
  std::vector<SupportPoint> points_;
  std::vector<Node> node_;
  std::unordered_map<int, std::size_t> id_index_;
};

inline bool same_support(const DiscreteJointDistribution& a, const DiscreteJointDistribution& b) {
  if (a.dim() != b.dim() || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.point(i).id != b.point(i).id) return false;
    if (a.point(i).coords != b.point(i).coords) return false;
  }
  return true;
}

inline void require_same_support(const DiscreteJointDistribution& a,
                                 const DiscreteJointDistribution& b) {
  if (!same_support(a, b)) throw SupportMismatch("distributions have different supports");
}

// (1/2) sum over points and (y,z) cells of |mass difference|.
inline double tv_distance(const DiscreteJointDistribution& d1,
                          const DiscreteJointDistribution& d2) {
  require_same_support(d1, d2);
  double sum = 0.0;
  for (std::size_t i = 0; i < d1.size(); ++i) {
    for (int y = 0; y < 2; ++y) {
      for (int z = 0; z < 2; ++z) {
        sum += std::abs(d1.mass(i, y, z) - d2.mass(i, y, z));
      }
    }
  }
  return 0.5 * sum;
}

// Every taxonomy label the (base -> other) perturbation satisfies within tol:
//   General : per-point X-marginals agree
//   PureY   : per-point per-z mass (summed over y) agrees
//   PureZ   : per-point per-y mass (summed over z) agrees
//   PureYZ  : per-point diagonal pairings (y0z0+y1z1) and (y0z1+y1z0) agree
inline std::set<FlipKind> classify_flip(const DiscreteJointDistribution& base,
                                        const DiscreteJointDistribution& other,
                                        double tol = 1e-12) {
  require_same_support(base, other);
  if (tol < 0.0) throw InvalidArgument("classification tolerance must be >= 0");
  bool general = true, pure_y = true, pure_z = true, pure_yz = true;
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::array<std::array<double, 2>, 2> a{}, b{};
    for (int y = 0; y < 2; ++y) {
      for (int z = 0; z < 2; ++z) {
        a[y][z] = base.mass(i, y, z);
        b[y][z] = other.mass(i, y, z);
      }
    }
    const double total_a = (a[0][0] + a[0][1]) + (a[1][0] + a[1][1]);
    const double total_b = (b[0][0] + b[0][1]) + (b[1][0] + b[1][1]);
    if (std::abs(total_a - total_b) > tol) general = false;
    for (int z = 0; z < 2; ++z) {
      if (std::abs((a[0][z] + a[1][z]) - (b[0][z] + b[1][z])) > tol) pure_y = false;
    }
    for (int y = 0; y < 2; ++y) {
      if (std::abs((a[y][0] + a[y][1]) - (b[y][0] + b[y][1])) > tol) pure_z = false;
    }
    if (std::abs((a[0][0] + a[1][1]) - (b[0][0] + b[1][1])) > tol ||
        std::abs((a[0][1] + a[1][0]) - (b[0][1] + b[1][0])) > tol) {
      pure_yz = false;
    }
  }
  std::set<FlipKind> kinds;
  if (general) kinds.insert(FlipKind::General);
  if (pure_y) kinds.insert(FlipKind::PureY);
  if (pure_z) kinds.insert(FlipKind::PureZ);
  if (pure_yz) kinds.insert(FlipKind::PureYZ);
  return kinds;
}

// Moves `fraction` of the (point, y, z_from) mass to (point, y, 1-z_from).
inline DiscreteJointDistribution apply_z_flip(const DiscreteJointDistribution& base, int point_id,
                                              int y, int z_from, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidFraction("flip fraction " + format_double(fraction) + " is not in [0,1]");
  }
  if (y != 0 && y != 1) throw InvalidArgument("y must be 0 or 1");
  if (z_from != 0 && z_from != 1) throw InvalidArgument("z must be 0 or 1");
  DiscreteJointDistribution out = base;
  const std::size_t i = out.index_of(point_id);
  const double zf = out.z1_frac(i, y);
  // New Pr(Z=1 | x, y) after moving `fraction` of the z_from side across.
  double new_zf;
  if (z_from == 0) {
    new_zf = fraction >= 1.0 ? 1.0 : zf + fraction * (1.0 - zf);
  } else {
    new_zf = fraction >= 1.0 ? 0.0 : zf * (1.0 - fraction);
  }
  if (y == 0) {
    out.set_label_fractions(i, out.y1_frac(i), new_zf, out.z1_frac(i, 1));
  } else {
    out.set_label_fractions(i, out.y1_frac(i), out.z1_frac(i, 0), new_zf);
  }
  return out;
}

// Four unit squares, one per (y,z) label pair, uniform total mass 1:
//   [0,1]^2 -> (y=1,z=1);   [-1,0]x[0,1] -> (y=1,z=0)
//   [-1,0]^2 -> (y=0,z=0);  [0,1]x[-1,0] -> (y=0,z=1)
// Each square is discretized to grid_resolution^2 cell-center point masses.
inline DiscreteJointDistribution example1_distribution(int grid_resolution) {
  if (grid_resolution < 1) throw InvalidArgument("grid resolution must be >= 1");
  const int res = grid_resolution;
  const double cell_mass = 1.0 / (4.0 * res * res);
  struct Quadrant {
    double x_origin, y_origin;
    int y_label, z_label;
  };
  const std::array<Quadrant, 4> quadrants{{
      {0.0, 0.0, 1, 1},
      {-1.0, 0.0, 1, 0},
      {-1.0, -1.0, 0, 0},
      {0.0, -1.0, 0, 1},
  }};
  std::vector<SupportPoint> points;
  std::vector<std::array<double, 4>> cells;
  int id = 0;
  for (const Quadrant& quad : quadrants) {
    for (int i = 0; i < res; ++i) {
      for (int j = 0; j < res; ++j) {
        SupportPoint pt;
        pt.id = id++;
        pt.coords = {quad.x_origin + (i + 0.5) / res, quad.y_origin + (j + 0.5) / res};
        points.push_back(std::move(pt));
        std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
        c[2 * quad.y_label + quad.z_label] = cell_mass;
        cells.push_back(c);
      }
    }
  }
  return DiscreteJointDistribution(2, std::move(points), cells);
}

// ---- CSV format -------------------------------------------------------------
// header: id,x1,...,xn,m_y0z0,m_y0z1,m_y1z0,m_y1z1

inline std::string serialize_distribution_csv(const DiscreteJointDistribution& d) {
  std::string text = "id";
  for (int k = 1; k <= d.dim(); ++k) text += ",x" + std::to_string(k);
  text += ",m_y0z0,m_y0z1,m_y1z0,m_y1z1\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    text += std::to_string(d.point(i).id);
    for (double c : d.point(i).coords) text += "," + format_double(c);
    text += "," + format_double(d.mass(i, 0, 0));
    text += "," + format_double(d.mass(i, 0, 1));
    text += "," + format_double(d.mass(i, 1, 0));
    text += "," + format_double(d.mass(i, 1, 1));
    text += "\n";
  }
  return text;
}

inline void save_distribution_csv(const std::string& path, const DiscreteJointDistribution& d) {
  write_text(path, serialize_distribution_csv(d));
}

inline DiscreteJointDistribution parse_distribution_csv(const std::vector<std::string>& lines) {
  if (lines.empty()) throw FileFormatError("empty distribution file");
  const std::vector<std::string> header = split(lines[0], ',');
  if (header.size() < 6 || header[0] != "id") {
    throw FileFormatError("distribution header must be id,x1,...,xn,m_y0z0,m_y0z1,m_y1z0,m_y1z1");
  }
  const int dim = static_cast<int>(header.size()) - 5;
  for (int k = 0; k < dim; ++k) {
    if (header[1 + k] != "x" + std::to_string(k + 1)) {
      throw FileFormatError("bad feature column name '" + header[1 + k] + "'");
    }
  }
  const std::array<std::string, 4> mass_names{"m_y0z0", "m_y0z1", "m_y1z0", "m_y1z1"};
  for (int k = 0; k < 4; ++k) {
    if (header[1 + dim + k] != mass_names[k]) {
      throw FileFormatError("bad mass column name '" + header[1 + dim + k] + "'");
    }
  }
  std::vector<SupportPoint> points;
  std::vector<std::array<double, 4>> cells;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;
    const std::vector<std::string> fields = split(lines[row], ',');
    if (fields.size() != header.size()) {
      throw FileFormatError("row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    SupportPoint pt;
    pt.id = static_cast<int>(parse_int(fields[0]));
    for (int k = 0; k < dim; ++k) pt.coords.push_back(parse_double(fields[1 + k]));
    points.push_back(std::move(pt));
    std::array<double, 4> c{};
    for (int k = 0; k < 4; ++k) c[k] = parse_double(fields[1 + dim + k]);
    cells.push_back(c);
  }
  // File-level tolerance is looser than the in-memory invariant; masses are
  // rescaled so the constructed object meets the 1e-12 contract.
  double total = 0.0;
  for (const auto& c : cells) total += (c[0] + c[1]) + (c[2] + c[3]);
  if (std::abs(total - 1.0) > 1e-9) {
    throw FileFormatError("distribution total mass " + format_double(total) +
                          " outside 1 +/- 1e-9");
  }
  if (total != 1.0) {
    for (auto& c : cells) {
      for (double& m : c) m /= total;
    }
  }
  return DiscreteJointDistribution(dim, std::move(points), cells, 1e-10);
}

inline DiscreteJointDistribution load_distribution_csv(const std::string& path) {
  return parse_distribution_csv(read_lines(path));
}

}  // namespace fairbreak
