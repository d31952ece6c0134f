#include "fcsynth/affine_flow.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "fcsynth/errors.hpp"

namespace fcsynth {

namespace {

// Higham (2005) Pade coefficients and 1-norm thresholds.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double norm1(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

template <std::size_t N>
Matrix pade_low(const Matrix& a, const std::array<double, N>& c) {
  const auto n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix odd = c[1] * id;
  Matrix even = c[0] * id;
  Matrix power = id;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even += c[k] * power;
    if (k + 1 < N) odd += c[k + 1] * power;
  }
  const Matrix u = a * odd;
  return (even - u).partialPivLu().solve(even + u);
}

Matrix pade13(const Matrix& a) {
  const auto n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const auto& b = kPade13;
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                         b[3] * a2 + b[1] * id;
  const Matrix u = a * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                   b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

} // namespace

void ModeDynamics::check() const {
  if (A.rows() != A.cols() || A.rows() != b.size() || b.size() < 1) {
    std::ostringstream os;
    os << "mode dynamics: A is " << A.rows() << "x" << A.cols() << ", b has " << b.size()
       << " entries";
    throw InputError(os.str());
  }
  if (!A.allFinite() || !b.allFinite()) throw InputError("mode dynamics: non-finite entry");
}

AffineMap AffineMap::identity(Eigen::Index n) {
  return AffineMap{Matrix::Identity(n, n), Vector::Zero(n)};
}

Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("expm: matrix is not square");
  if (!all_finite(m)) throw InputError("expm: non-finite entry");
  const double nrm = norm1(m);
  Matrix result;
  if (nrm <= kTheta3) {
    result = pade_low(m, kPade3);
  } else if (nrm <= kTheta5) {
    result = pade_low(m, kPade5);
  } else if (nrm <= kTheta7) {
    result = pade_low(m, kPade7);
  } else if (nrm <= kTheta9) {
    result = pade_low(m, kPade9);
  } else {
    const int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / kTheta13))));
    result = pade13(m / std::ldexp(1.0, squarings));
    for (int s = 0; s < squarings; ++s) result = result * result;
  }
  if (!all_finite(result)) {
    std::ostringstream os;
    os << "expm: overflow (input 1-norm " << nrm << ")";
    throw NumericError(os.str());
  }
  return result;
}

AffineMap discretize(const ModeDynamics& dyn, double tau) {
  dyn.check();
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("discretize: tau must be positive");
  const auto n = dyn.dim();
  Matrix aug = Matrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = dyn.A * tau;
  aug.topRightCorner(n, 1) = dyn.b * tau;
  const Matrix e = expm(aug);
  return AffineMap{e.topLeftCorner(n, n), e.topRightCorner(n, 1)};
}

AffineMap compose(const AffineMap& first, const AffineMap& second) {
  if (first.dim() != second.dim() || first.C.rows() != first.dim() ||
      second.C.rows() != second.dim())
    throw InputError("compose: dimension mismatch");
  return AffineMap{second.C * first.C, second.C * first.d + second.d};
}

Vector apply_point(const AffineMap& map, const Vector& x) {
  if (x.size() != map.dim() || map.C.cols() != x.size())
    throw InputError("apply_point: dimension mismatch");
  return map.C * x + map.d;
}

} // namespace fcsynth
