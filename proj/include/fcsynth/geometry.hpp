#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "fcsynth/affine_flow.hpp"

namespace fcsynth {

/// Cartesian product of closed intervals [lower_i, upper_i].
class Box {
public:
  Box() = default;
  /// Throws InputError on size mismatch, non-finite bounds or lower > upper.
  Box(Vector lower, Vector upper);

  static Box point(const Vector& p) { return Box(p, p); }

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Eigen::Index dim() const { return lower_.size(); }

  double lower(Eigen::Index i) const { return lower_[i]; }
  double upper(Eigen::Index i) const { return upper_[i]; }
  double width(Eigen::Index i) const { return upper_[i] - lower_[i]; }
  Vector center() const { return 0.5 * (lower_ + upper_); }
  double volume() const;

  bool contains(const Vector& p) const;
  /// Every interval of `inner` lies in the matching interval of *this.
  bool contains(const Box& inner) const;
  /// Each interval widened by `amount` on both sides.
  Box inflated(double amount) const;

  friend bool operator==(const Box& a, const Box& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_;
  }

private:
  Vector lower_;
  Vector upper_;
};

/// Ordered set of distinct state-dimension indices.
class DimSet {
public:
  DimSet() = default;
  DimSet(std::initializer_list<std::size_t> indices);
  explicit DimSet(std::vector<std::size_t> indices);

  /// {0, 1, ..., count - 1}
  static DimSet first(std::size_t count);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t operator[](std::size_t k) const { return indices_[k]; }
  bool contains(std::size_t index) const;
  /// Throws InputError if any index is >= n.
  void check_within(Eigen::Index n) const;

  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  friend bool operator==(const DimSet&, const DimSet&) = default;

private:
  std::vector<std::size_t> indices_;
};

/// center + sum_g alpha_g * generator_g, alpha_g in [-1, 1]. Generators are columns.
struct Zonotope {
  Vector center;
  Matrix generators;

  Eigen::Index dim() const { return center.size(); }
  Eigen::Index order() const { return generators.cols(); }
};

Zonotope zonotope_from_box(const Box& b);
Zonotope affine_image(const AffineMap& map, const Zonotope& z);

/// Tightest enclosing box: center_i -/+ sum_g |g_i|.
Box interval_hull(const Zonotope& z);

/// Per-dimension radius of the interval hull.
Vector hull_radius(const Zonotope& z);

/// Smallest slack of the inclusion hull(z)|dims in b inflated by eps. The k-th
/// interval of `b` corresponds to state dimension dims[k]. Non-negative iff contained.
struct ContainmentMargin {
  double margin;
  std::size_t worst_dim; ///< state dimension where `margin` is attained
};
ContainmentMargin containment_margin(const Zonotope& z, const Box& b, const DimSet& dims,
                                     double eps = 0.0);

/// hull(z) restricted to `dims` lies in `b` inflated by `eps`. Dimensions outside dims are ignored.
bool contained_in(const Zonotope& z, const Box& b, const DimSet& dims, double eps = 0.0);

/// Splits every listed dimension at its midpoint. Returns 2^|dims| boxes ordered
/// lexicographically (low half = 0, high half = 1), first listed dimension most significant.
std::vector<Box> bisect(const Box& b, const DimSet& dims);

} // namespace fcsynth
