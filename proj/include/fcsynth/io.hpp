#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcsynth/converter_model.hpp"
#include "fcsynth/simulator.hpp"
#include "fcsynth/synthesis.hpp"

namespace fcsynth::io {

using Json = nlohmann::ordered_json;

// Parameter file: levels, v_input, r_load, l_load, cap[], r_par[], tau, tol, epsilon
// (optional v_high, v_low).
Json params_to_json(const converter::ConverterParams& p);
/// Fields missing from `j` keep their value in `base`. Throws FormatError.
converter::ConverterParams params_from_json(const Json& j,
                                            converter::ConverterParams base = {});

/// On-disk decomposition: the contract between synth, validate and simulate.
struct DecompositionFile {
  int levels = 0;
  double tau = 0.0;
  double eps = 0.0;
  Box control;
  Box safe;
  DimSet controlled;
  int depth = 1;
  std::size_t max_length = 0;
  int subsample = 1;
  std::vector<Interval> initial_slice;
  std::string fingerprint;
  std::optional<converter::ConverterParams> params;
  std::vector<DecompositionCell> cells;

  Decomposition decomposition() const;
};

DecompositionFile make_file(const Decomposition& dec, const SynthesisProblem& problem,
                            const converter::ConverterParams& params);

Json to_json(const DecompositionFile& f);
DecompositionFile decomposition_from_json(const Json& j);

void write_decomposition(std::ostream& os, const DecompositionFile& f);
/// Throws FormatError on unparsable or structurally malformed content.
DecompositionFile read_decomposition(std::istream& is);

Json to_json(const ValidationReport& r);
Json to_json(const TraceReport& r, const SimulationResult& sim, const DimSet& dims);

} // namespace fcsynth::io
