#include "fcsynth/converter_model.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "fcsynth/errors.hpp"

namespace fcsynth::converter {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "converter: " << name << " must be positive (got " << v << ")";
    throw InputError(os.str());
  }
}

} // namespace

void ConverterParams::check() const {
  if (levels < 3 || levels % 2 == 0) throw InputError("converter: levels must be odd and >= 3");
  if (levels > 21) throw InputError("converter: too many levels");
  require_positive(v_input, "v_input");
  require_positive(high(), "v_high");
  require_positive(low(), "v_low");
  require_positive(r_load, "r_load");
  require_positive(l_load, "l_load");
  require_positive(tau, "tau");
  if (cap.size() != 1 && cap.size() != capacitors())
    throw InputError("converter: cap needs 1 or levels-2 values");
  if (r_par.size() != 1 && r_par.size() != capacitors())
    throw InputError("converter: r_par needs 1 or levels-2 values");
  for (double c : cap) require_positive(c, "capacitance");
  for (double r : r_par) require_positive(r, "parallel resistance");
  if (!(tol >= 0.0) || !(epsilon >= 0.0))
    throw InputError("converter: tol and epsilon must be non-negative");
}

ConverterParams paper_5level() { return ConverterParams{}; }

ConverterParams paper_7level() {
  ConverterParams p;
  p.levels = 7;
  p.v_input = 300.0;
  p.r_load = 50.0;
  p.l_load = 0.137;
  p.cap = {0.1};
  p.r_par = {20000.0};
  p.tau = 0.02 / 12.0;
  return p;
}

ConverterParams defaults_for_levels(int levels) {
  ConverterParams p;
  p.levels = levels;
  p.tau = 0.02 / (2.0 * (levels - 1));
  return p;
}

ModeDynamics mode_dynamics(const ConverterParams& p, const Mode& s) {
  const auto ncap = p.capacitors();
  const auto n = static_cast<Eigen::Index>(ncap + 1);
  if (s.width() != ncap + 1) throw InputError("converter: mode width must be levels-1");
  const Eigen::Index cur = n - 1;
  ModeDynamics dyn{Matrix::Zero(n, n), Vector::Zero(n)};
  for (std::size_t j = 0; j < ncap; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    const double c = p.capacitance(j);
    const int diff = s.bit(j) - s.bit(j + 1);
    dyn.A(row, row) = -1.0 / (p.bleed(j) * c);
    dyn.A(row, cur) = diff / c;
    dyn.A(cur, row) = -diff / p.l_load;
  }
  dyn.A(cur, cur) = -p.r_load / p.l_load;
  dyn.b[cur] = (s.bit(0) * p.high() - (1 - s.bit(0)) * p.low()) / p.l_load;
  return dyn;
}

SwitchedSystem build_system(const ConverterParams& p) {
  p.check();
  const auto width = static_cast<std::size_t>(p.levels - 1);
  std::vector<std::pair<Mode, ModeDynamics>> modes;
  for (std::uint32_t bits = 0; bits < (1U << width); ++bits) {
    Mode m(width, bits);
    modes.emplace_back(m, mode_dynamics(p, m));
  }
  return SwitchedSystem(width, std::move(modes), p.tau);
}

double output_voltage(const ConverterParams& p, const Mode& s, const Vector& v) {
  const auto ncap = p.capacitors();
  if (static_cast<std::size_t>(v.size()) != ncap || s.width() != ncap + 1)
    throw InputError("output voltage: dimension mismatch");
  double vo = s.bit(0) * p.high() - (1 - s.bit(0)) * p.low();
  for (std::size_t j = 0; j < ncap; ++j)
    vo += (s.bit(j + 1) - s.bit(j)) * v[static_cast<Eigen::Index>(j)];
  return vo;
}

Vector ideal_setpoints(const ConverterParams& p) {
  const auto ncap = p.capacitors();
  const double step = (p.high() + p.low()) / (p.levels - 1);
  Vector v(static_cast<Eigen::Index>(ncap));
  for (std::size_t j = 1; j <= ncap; ++j)
    v[static_cast<Eigen::Index>(j - 1)] = static_cast<double>(p.levels - 1 - static_cast<int>(j)) * step;
  return v;
}

std::vector<double> ideal_levels(const ConverterParams& p) {
  const double step = (p.high() + p.low()) / (p.levels - 1);
  std::vector<double> out;
  for (int k = 0; k < p.levels; ++k) out.push_back(-p.low() + k * step);
  return out;
}

SynthesisProblem default_problem(const ConverterParams& p, const ProblemOptions& opts) {
  p.check();
  if (!(p.tol > 0.0)) throw InputError("converter: tolerance must be > 0");
  const Vector ideal = ideal_setpoints(p);
  SynthesisProblem prob;
  prob.system = std::make_shared<const SwitchedSystem>(build_system(p));
  prob.control = Box(ideal.array() - p.tol, ideal.array() + p.tol);
  prob.safe = prob.control.inflated(p.epsilon);
  prob.controlled = DimSet::first(p.capacitors());
  prob.initial_slice = {opts.current_slice};
  if (opts.current_return_bound) prob.return_bound = {*opts.current_return_bound};
  prob.depth = opts.depth;
  prob.max_length =
      opts.max_length ? opts.max_length : static_cast<std::size_t>(2 * (p.levels - 1));
  prob.eps = opts.contain_eps;
  prob.subsample = opts.subsample;
  prob.check();
  return prob;
}

std::function<double(const Mode&, const Vector&)> output_function(const ConverterParams& p) {
  return [p](const Mode& s, const Vector& x) {
    return output_voltage(p, s, x.head(static_cast<Eigen::Index>(p.capacitors())));
  };
}

} // namespace fcsynth::converter
