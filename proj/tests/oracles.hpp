#pragma once

// Test-only reference computations. Nothing here touches the matrix exponential
// or the pattern stream used by the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "fcsynth/affine_flow.hpp"
#include "fcsynth/switched_core.hpp"

namespace oracle {

using fcsynth::Matrix;
using fcsynth::ModeDynamics;
using fcsynth::Vector;

/// Adaptive Dormand-Prince integration of x' = A x + b over [0, t].
inline Vector integrate_adaptive(const ModeDynamics& dyn, const Vector& x0, double t,
                                 double tol = 1e-13) {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  const auto n = dyn.dim();
  State x(x0.data(), x0.data() + n);
  auto rhs = [&](const State& s, State& ds, double) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = dyn.b[i];
      for (Eigen::Index j = 0; j < n; ++j) acc += dyn.A(i, j) * s[static_cast<std::size_t>(j)];
      ds[static_cast<std::size_t>(i)] = acc;
    }
  };
  ode::integrate_adaptive(ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>()), rhs,
                          x, 0.0, t, t / 1000.0);
  return Eigen::Map<Vector>(x.data(), n);
}

/// Classic fixed-step RK4 over [0, t].
inline Vector integrate_rk4(const ModeDynamics& dyn, const Vector& x0, double t, int steps) {
  const double h = t / steps;
  Vector x = x0;
  auto f = [&](const Vector& s) -> Vector { return dyn.A * s + dyn.b; };
  for (int k = 0; k < steps; ++k) {
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

/// [C | d] reconstructed from the flow of 0 and of each unit vector.
inline Matrix flow_matrix(const ModeDynamics& dyn,
                          const std::function<Vector(const Vector&)>& flow) {
  const auto n = dyn.dim();
  Matrix out(n, n + 1);
  const Vector d = flow(Vector::Zero(n));
  for (Eigen::Index j = 0; j < n; ++j) out.col(j) = flow(Vector::Unit(n, j)) - d;
  out.col(n) = d;
  return out;
}

inline double rel_error(const Matrix& got, const Matrix& ref) {
  const double scale = std::max(ref.cwiseAbs().maxCoeff(), 1e-300);
  return (got - ref).cwiseAbs().maxCoeff() / scale;
}

inline Matrix as_block(const fcsynth::AffineMap& m) {
  Matrix out(m.dim(), m.dim() + 1);
  out << m.C, m.d;
  return out;
}

inline ModeDynamics random_dynamics(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ModeDynamics dyn{Matrix(n, n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    dyn.b[i] = u(rng);
    for (Eigen::Index j = 0; j < n; ++j) dyn.A(i, j) = u(rng);
  }
  return dyn;
}

/// All cycle paths by depth-first search over the full 2^w mode graph: each step flips
/// exactly one bit, weights go 0,1,...,w,w-1,...,1 and the path closes back to 0.
inline std::set<std::string> brute_force_cycle_paths(std::size_t width) {
  std::set<std::string> out;
  const std::size_t length = 2 * width;
  std::vector<std::uint32_t> path{0};
  std::function<void()> dfs = [&] {
    if (path.size() == length) {
      if (__builtin_popcount(path.back()) == 1) {
        std::string s;
        for (std::size_t i = 0; i < path.size(); ++i) {
          if (i) s += "->";
          s += fcsynth::Mode(width, path[i]).to_string();
        }
        out.insert(s);
      }
      return;
    }
    const std::size_t step = path.size();
    const int want = step <= width ? static_cast<int>(step) : static_cast<int>(2 * width - step);
    for (std::uint32_t next = 0; next < (1U << width); ++next) {
      const std::uint32_t diff = next ^ path.back();
      if (__builtin_popcount(diff) != 1 || __builtin_popcount(next) != want) continue;
      path.push_back(next);
      dfs();
      path.pop_back();
    }
  };
  dfs();
  return out;
}

} // namespace oracle
