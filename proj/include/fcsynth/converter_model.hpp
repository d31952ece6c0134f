#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fcsynth/switched_core.hpp"
#include "fcsynth/synthesis.hpp"

namespace fcsynth::converter {

/// Electrical parameters of an l-level flying-capacitor converter driving an RL load.
/// State is (v_1, ..., v_{l-2}, i).
struct ConverterParams {
  int levels = 5;
  double v_input = 100.0;             ///< V
  std::optional<double> v_high;       ///< V, defaults to v_input
  std::optional<double> v_low;        ///< V, defaults to v_input
  double r_load = 50.0;               ///< ohm
  double l_load = 0.2;                ///< H
  std::vector<double> cap{0.0012};    ///< F per capacitor; one value is broadcast
  std::vector<double> r_par{20000.0}; ///< ohm, bleed resistor across each capacitor
  double tau = 0.0025;                ///< s; one cycle lasts 2 (l-1) tau
  double tol = 5.0;                   ///< V, half-width of R
  double epsilon = 1.0;               ///< V, inflation of R into S

  double high() const { return v_high.value_or(v_input); }
  double low() const { return v_low.value_or(v_input); }
  std::size_t capacitors() const { return static_cast<std::size_t>(levels - 2); }
  double capacitance(std::size_t j) const { return cap.size() == 1 ? cap[0] : cap.at(j); }
  double bleed(std::size_t j) const { return r_par.size() == 1 ? r_par[0] : r_par.at(j); }
  double cycle_time() const { return 2.0 * (levels - 1) * tau; }

  /// Throws InputError on a non-positive or inconsistent parameter.
  void check() const;
};

/// 5-level reference set: 100 V input, 50 ohm / 0.2 H load, 1.2 mF, 20 kohm, T = 20 ms.
ConverterParams paper_5level();
/// 7-level reference set: 300 V input, 50 ohm / 0.137 H load, 0.1 F, 20 kohm, T = 20 ms.
ConverterParams paper_7level();
/// paper_5level() values with `levels` changed and tau set for a 50 Hz cycle.
ConverterParams defaults_for_levels(int levels);

ModeDynamics mode_dynamics(const ConverterParams& p, const Mode& s);

/// All 2^(l-1) modes, discretized at p.tau.
SwitchedSystem build_system(const ConverterParams& p);

/// sum_j (S_{j+1} - S_j) v_j + S_1 v_high - (1 - S_1) v_low, with v the capacitor voltages.
double output_voltage(const ConverterParams& p, const Mode& s, const Vector& v);

/// v_j* = (l - 1 - j) (v_high + v_low) / (l - 1), j = 1..l-2.
Vector ideal_setpoints(const ConverterParams& p);

/// The l output levels, evenly spaced from -v_low to +v_high.
std::vector<double> ideal_levels(const ConverterParams& p);

struct ProblemOptions {
  int depth = 1;
  std::size_t max_length = 0; ///< 0 selects 2 (l-1)
  double contain_eps = 0.0;
  int subsample = 1;
  Interval current_slice = Interval::point(0.0);
  std::optional<Interval> current_return_bound;
};

/// R = prod [v_j* - tol, v_j* + tol], S = R inflated by epsilon, controlled = voltages.
SynthesisProblem default_problem(const ConverterParams& p, const ProblemOptions& opts = {});

/// v_o(mode, state) for a full state vector (capacitor voltages then current).
std::function<double(const Mode&, const Vector&)> output_function(const ConverterParams& p);

} // namespace fcsynth::converter
