#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fcsynth/switched_core.hpp"
#include "fcsynth/synthesis.hpp"

namespace fcsynth {

using OutputFn = std::function<double(const Mode&, const Vector&)>;

/// Sampled closed-loop trajectory. modes[k] and outputs[k] are active on [times[k], times[k+1]).
struct Trace {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Mode> modes;
  std::vector<double> outputs;
};

struct SimulationResult {
  Trace trace;
  int cycles_completed = 0;
  bool halted = false;
  double halt_time = 0.0;
  std::string halt_reason;
};

/// Either a decomposition (pattern chosen from the state at each cycle start) or a
/// fixed pattern replayed every cycle.
using Controller = std::variant<const Decomposition*, Pattern>;

/// Exact affine stepping, q sub-samples per mode. Halts (without throwing) when the
/// controller is undefined at a cycle start.
SimulationResult simulate(const SwitchedSystem& sys, const Controller& controller,
                          const Vector& x0, int cycles, int q = 1, const OutputFn& output = {});

/// Independent runs from each start, in parallel; results are in start order.
std::vector<SimulationResult> simulate_many(const SwitchedSystem& sys,
                                            const Controller& controller,
                                            const std::vector<Vector>& starts, int cycles,
                                            int q, const OutputFn& output, int workers);

struct TraceReport {
  std::vector<bool> inside;             ///< per sample
  std::optional<std::size_t> first_violation;
  std::vector<double> worst_margin;     ///< per checked dimension, in dims order
  std::vector<double> observed_levels;  ///< distinct outputs snapped to the nearest ideal level
  double max_level_deviation = 0.0;     ///< largest |output - snapped level|
  double output_min = 0.0;
  double output_max = 0.0;
  bool passed() const { return !first_violation.has_value(); }
};

/// Sample-wise containment of trace states in S (k-th interval <-> dims[k]) inflated by eps.
/// Output levels are snapped only when `levels` is non-empty.
TraceReport check_trace(const Trace& trace, const Box& safe, const DimSet& dims, double eps = 0.0,
                        const std::vector<double>& levels = {});

/// `t,v1,...,v{n-1},i,mode,vo`; 9 significant digits; the final row has empty mode and vo.
void write_trace_csv(std::ostream& os, const Trace& trace);

} // namespace fcsynth
