#pragma once

#include <Eigen/Dense>

namespace fcsynth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Continuous-time affine vector field x' = A x + b of one switching mode.
struct ModeDynamics {
  Matrix A;
  Vector b;

  /// Throws InputError unless A is square, b matches and every entry is finite.
  void check() const;
  Eigen::Index dim() const { return b.size(); }
};

/// x -> C x + d. Sampled flow of one mode, or a composition of several.
struct AffineMap {
  Matrix C;
  Vector d;

  static AffineMap identity(Eigen::Index n);
  Eigen::Index dim() const { return d.size(); }
};

/// Exact flow of `dyn` over `tau` seconds, from the exponential of the
/// augmented matrix [[A tau, b tau], [0, 0]]. Works for singular A.
AffineMap discretize(const ModeDynamics& dyn, double tau);

/// `first` followed by `second`: (C2 C1, C2 d1 + d2).
AffineMap compose(const AffineMap& first, const AffineMap& second);

Vector apply_point(const AffineMap& map, const Vector& x);

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
Matrix expm(const Matrix& m);

} // namespace fcsynth
