#include "fcsynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fcsynth/errors.hpp"

namespace fcsynth {

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw InputError("box: bound size mismatch");
  if (!lower_.allFinite() || !upper_.allFinite()) throw InputError("box: non-finite bound");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (lower_[i] > upper_[i]) {
      std::ostringstream os;
      os << "box: lower > upper in dimension " << i << " (" << lower_[i] << " > " << upper_[i]
         << ")";
      throw InputError(os.str());
    }
  }
}

double Box::volume() const { return (upper_ - lower_).prod(); }

bool Box::contains(const Vector& p) const {
  if (p.size() != dim()) throw InputError("box: point dimension mismatch");
  return (p.array() >= lower_.array()).all() && (p.array() <= upper_.array()).all();
}

bool Box::contains(const Box& inner) const {
  if (inner.dim() != dim()) throw InputError("box: dimension mismatch");
  return (inner.lower_.array() >= lower_.array()).all() &&
         (inner.upper_.array() <= upper_.array()).all();
}

Box Box::inflated(double amount) const {
  return Box(lower_.array() - amount, upper_.array() + amount);
}

DimSet::DimSet(std::initializer_list<std::size_t> indices)
    : DimSet(std::vector<std::size_t>(indices)) {}

DimSet::DimSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::set<std::size_t> seen(indices_.begin(), indices_.end());
  if (seen.size() != indices_.size()) throw InputError("dimension set: repeated index");
}

DimSet DimSet::first(std::size_t count) {
  std::vector<std::size_t> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = i;
  return DimSet(std::move(v));
}

bool DimSet::contains(std::size_t index) const {
  return std::find(indices_.begin(), indices_.end(), index) != indices_.end();
}

void DimSet::check_within(Eigen::Index n) const {
  for (auto i : indices_)
    if (static_cast<Eigen::Index>(i) >= n) throw InputError("dimension set: index out of range");
}

Zonotope zonotope_from_box(const Box& b) {
  const Vector half = 0.5 * (b.upper() - b.lower());
  return Zonotope{b.center(), half.asDiagonal().toDenseMatrix()};
}

Zonotope affine_image(const AffineMap& map, const Zonotope& z) {
  if (map.dim() != z.dim() || z.generators.rows() != z.dim())
    throw InputError("affine image: dimension mismatch");
  return Zonotope{map.C * z.center + map.d, map.C * z.generators};
}

Vector hull_radius(const Zonotope& z) { return z.generators.cwiseAbs().rowwise().sum(); }

Box interval_hull(const Zonotope& z) {
  const Vector r = hull_radius(z);
  return Box(z.center - r, z.center + r);
}

ContainmentMargin containment_margin(const Zonotope& z, const Box& b, const DimSet& dims,
                                     double eps) {
  if (b.dim() != static_cast<Eigen::Index>(dims.size()))
    throw InputError("containment: box dimension differs from the dimension set");
  dims.check_within(z.dim());
  ContainmentMargin out{std::numeric_limits<double>::infinity(), dims.empty() ? 0 : dims[0]};
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(dims[k]);
    const double r = z.generators.row(i).cwiseAbs().sum();
    const auto bk = static_cast<Eigen::Index>(k);
    const double m = std::min((z.center[i] - r) - (b.lower(bk) - eps),
                              (b.upper(bk) + eps) - (z.center[i] + r));
    if (m < out.margin) out = {m, dims[k]};
  }
  return out;
}

bool contained_in(const Zonotope& z, const Box& b, const DimSet& dims, double eps) {
  return containment_margin(z, b, dims, eps).margin >= 0.0;
}

std::vector<Box> bisect(const Box& b, const DimSet& dims) {
  if (dims.empty()) throw InputError("bisect: empty dimension set");
  dims.check_within(b.dim());
  const std::size_t parts = std::size_t{1} << dims.size();
  std::vector<Box> out;
  out.reserve(parts);
  for (std::size_t code = 0; code < parts; ++code) {
    Vector lo = b.lower();
    Vector hi = b.upper();
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(dims[k]);
      const double mid = 0.5 * (b.lower(i) + b.upper(i));
      const bool high = (code >> (dims.size() - 1 - k)) & 1U;
      if (high) lo[i] = mid;
      else hi[i] = mid;
    }
    out.emplace_back(std::move(lo), std::move(hi));
  }
  return out;
}

} // namespace fcsynth
