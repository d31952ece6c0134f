#include "fcsynth/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "fcsynth/errors.hpp"
#include "fcsynth/parallel.hpp"

namespace fcsynth {

SimulationResult simulate(const SwitchedSystem& sys, const Controller& controller,
                          const Vector& x0, int cycles, int q, const OutputFn& output) {
  if (x0.size() != sys.dim()) throw InputError("simulate: start state dimension mismatch");
  if (cycles < 0) throw InputError("simulate: negative cycle count");
  const auto steps = sys.substep_maps(q);
  const double dt = sys.tau() / q;

  SimulationResult res;
  auto& tr = res.trace;
  Vector x = x0;
  std::size_t k = 0;
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  for (int c = 0; c < cycles; ++c) {
    const Pattern* pattern = nullptr;
    if (const auto* dec = std::get_if<const Decomposition*>(&controller)) {
      try {
        pattern = &controller_lookup(**dec, x);
      } catch (const OutOfDomainError& e) {
        res.halted = true;
        res.halt_time = tr.times.back();
        res.halt_reason = e.what();
        return res;
      }
    } else {
      pattern = &std::get<Pattern>(controller);
    }
    for (const auto& u : *pattern) {
      const auto& m = steps[sys.slot(u)];
      for (int s = 0; s < q; ++s) {
        tr.modes.push_back(u);
        if (output) tr.outputs.push_back(output(u, x));
        x = m.C * x + m.d;
        ++k;
        // Multiply rather than accumulate so sample times stay on the uniform grid.
        tr.times.push_back(static_cast<double>(k) * dt);
        tr.states.push_back(x);
      }
    }
    ++res.cycles_completed;
  }
  return res;
}

std::vector<SimulationResult> simulate_many(const SwitchedSystem& sys,
                                            const Controller& controller,
                                            const std::vector<Vector>& starts, int cycles,
                                            int q, const OutputFn& output, int workers) {
  std::vector<SimulationResult> out(starts.size());
  parallel_for(starts.size(), workers, [&](std::size_t i) {
    out[i] = simulate(sys, controller, starts[i], cycles, q, output);
  });
  return out;
}

TraceReport check_trace(const Trace& trace, const Box& safe, const DimSet& dims, double eps,
                        const std::vector<double>& levels) {
  if (safe.dim() != static_cast<Eigen::Index>(dims.size()))
    throw InputError("check_trace: box dimension differs from the dimension set");
  TraceReport rep;
  rep.worst_margin.assign(dims.size(), std::numeric_limits<double>::infinity());
  rep.inside.reserve(trace.states.size());
  for (std::size_t s = 0; s < trace.states.size(); ++s) {
    const auto& x = trace.states[s];
    bool ok = true;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const auto bk = static_cast<Eigen::Index>(k);
      const double v = x[static_cast<Eigen::Index>(dims[k])];
      const double m = std::min(v - (safe.lower(bk) - eps), (safe.upper(bk) + eps) - v);
      rep.worst_margin[k] = std::min(rep.worst_margin[k], m);
      if (m < 0.0) ok = false;
    }
    rep.inside.push_back(ok);
    if (!ok && !rep.first_violation) rep.first_violation = s;
  }
  if (!trace.outputs.empty()) {
    const auto [lo, hi] = std::minmax_element(trace.outputs.begin(), trace.outputs.end());
    rep.output_min = *lo;
    rep.output_max = *hi;
  }
  if (!levels.empty()) {
    for (double vo : trace.outputs) {
      const auto nearest = *std::min_element(levels.begin(), levels.end(), [&](double a, double b) {
        return std::abs(a - vo) < std::abs(b - vo);
      });
      rep.max_level_deviation = std::max(rep.max_level_deviation, std::abs(nearest - vo));
      if (std::find(rep.observed_levels.begin(), rep.observed_levels.end(), nearest) ==
          rep.observed_levels.end())
        rep.observed_levels.push_back(nearest);
    }
    std::sort(rep.observed_levels.begin(), rep.observed_levels.end());
  }
  return rep;
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  const auto n = trace.states.empty() ? 0 : trace.states.front().size();
  os << "t";
  for (Eigen::Index j = 1; j < n; ++j) os << ",v" << j;
  os << ",i,mode,vo\n";
  const auto old_precision = os.precision(9);
  for (std::size_t s = 0; s < trace.states.size(); ++s) {
    os << trace.times[s];
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << trace.states[s][j];
    os << ',';
    if (s < trace.modes.size()) os << trace.modes[s].to_string();
    os << ',';
    if (s < trace.outputs.size()) os << trace.outputs[s];
    os << '\n';
  }
  os.precision(old_precision);
}

} // namespace fcsynth
