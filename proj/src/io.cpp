#include "fcsynth/io.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "fcsynth/errors.hpp"

namespace fcsynth::io {

namespace {

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector json_vec(const Json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(std::string(what) + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json box_json(const Box& b) { return Json{{"lower", vec_json(b.lower())}, {"upper", vec_json(b.upper())}}; }

Box json_box(const Json& j, const char* what) {
  if (!j.is_object() || !j.contains("lower") || !j.contains("upper"))
    throw FormatError(std::string(what) + ": expected {lower, upper}");
  try {
    return Box(json_vec(j["lower"], what), json_vec(j["upper"], what));
  } catch (const InputError& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("bad type for field \"") + key + "\"");
  }
}

} // namespace

Json params_to_json(const converter::ConverterParams& p) {
  Json j{{"levels", p.levels},   {"v_input", p.v_input}, {"r_load", p.r_load},
         {"l_load", p.l_load},   {"cap", p.cap},         {"r_par", p.r_par},
         {"tau", p.tau},         {"tol", p.tol},         {"epsilon", p.epsilon}};
  if (p.v_high) j["v_high"] = *p.v_high;
  if (p.v_low) j["v_low"] = *p.v_low;
  return j;
}

converter::ConverterParams params_from_json(const Json& j, converter::ConverterParams p) {
  if (!j.is_object()) throw FormatError("parameters: expected an object");
  try {
    if (j.contains("levels")) p.levels = j["levels"].get<int>();
    if (j.contains("v_input")) p.v_input = j["v_input"].get<double>();
    if (j.contains("v_high")) p.v_high = j["v_high"].get<double>();
    if (j.contains("v_low")) p.v_low = j["v_low"].get<double>();
    if (j.contains("r_load")) p.r_load = j["r_load"].get<double>();
    if (j.contains("l_load")) p.l_load = j["l_load"].get<double>();
    if (j.contains("cap")) p.cap = j["cap"].get<std::vector<double>>();
    if (j.contains("r_par")) p.r_par = j["r_par"].get<std::vector<double>>();
    if (j.contains("tau")) p.tau = j["tau"].get<double>();
    if (j.contains("tol")) p.tol = j["tol"].get<double>();
    if (j.contains("epsilon")) p.epsilon = j["epsilon"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("parameters: ") + e.what());
  }
  return p;
}

Decomposition DecompositionFile::decomposition() const {
  return Decomposition{control, controlled, cells, fingerprint};
}

DecompositionFile make_file(const Decomposition& dec, const SynthesisProblem& problem,
                            const converter::ConverterParams& params) {
  DecompositionFile f;
  f.levels = params.levels;
  f.tau = problem.system->tau();
  f.eps = problem.eps;
  f.control = problem.control;
  f.safe = problem.safe;
  f.controlled = problem.controlled;
  f.depth = problem.depth;
  f.max_length = problem.max_length;
  f.subsample = problem.subsample;
  f.initial_slice = problem.initial_slice;
  f.fingerprint = dec.fingerprint;
  f.params = params;
  f.cells = dec.cells;
  return f;
}

Json to_json(const DecompositionFile& f) {
  Json j;
  j["levels"] = f.levels;
  j["tau"] = f.tau;
  j["eps"] = f.eps;
  j["R"] = box_json(f.control);
  j["S"] = box_json(f.safe);
  j["controlled_dims"] = f.controlled.indices();
  j["depth"] = f.depth;
  j["k"] = f.max_length;
  j["subsample"] = f.subsample;
  Json slice = Json::array();
  for (const auto& iv : f.initial_slice) slice.push_back({iv.lo, iv.hi});
  j["initial_slice"] = slice;
  if (!f.fingerprint.empty()) j["fingerprint"] = f.fingerprint;
  if (f.params) j["params"] = params_to_json(*f.params);
  Json cells = Json::array();
  for (const auto& c : f.cells)
    cells.push_back({{"box", box_json(c.cell)}, {"pattern", c.pattern.mode_strings()}});
  j["cells"] = cells;
  return j;
}

DecompositionFile decomposition_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("decomposition: expected a JSON object");
  DecompositionFile f;
  f.levels = field<int>(j, "levels");
  f.tau = field<double>(j, "tau");
  f.eps = j.contains("eps") ? field<double>(j, "eps") : 0.0;
  f.control = json_box(j.contains("R") ? j["R"] : Json(), "R");
  f.safe = json_box(j.contains("S") ? j["S"] : Json(), "S");
  try {
    f.controlled = DimSet(field<std::vector<std::size_t>>(j, "controlled_dims"));
  } catch (const InputError& e) {
    throw FormatError(std::string("controlled_dims: ") + e.what());
  }
  if (f.control.dim() != static_cast<Eigen::Index>(f.controlled.size()) ||
      f.safe.dim() != f.control.dim())
    throw FormatError("decomposition: R/S size differs from controlled_dims");
  f.depth = j.contains("depth") ? field<int>(j, "depth") : 1;
  f.max_length = j.contains("k") ? field<std::size_t>(j, "k") : 0;
  f.subsample = j.contains("subsample") ? field<int>(j, "subsample") : 1;
  if (j.contains("initial_slice")) {
    for (const auto& iv : j["initial_slice"]) {
      if (iv.is_number()) f.initial_slice.push_back(Interval::point(iv.get<double>()));
      else if (iv.is_array() && iv.size() == 2 && iv[0].is_number() && iv[1].is_number())
        f.initial_slice.push_back({iv[0].get<double>(), iv[1].get<double>()});
      else throw FormatError("initial_slice: expected numbers or [lo, hi] pairs");
    }
  }
  if (j.contains("fingerprint")) f.fingerprint = field<std::string>(j, "fingerprint");
  if (j.contains("params")) f.params = params_from_json(j["params"]);
  if (!j.contains("cells") || !j["cells"].is_array())
    throw FormatError("decomposition: missing cells array");
  for (const auto& c : j["cells"]) {
    if (!c.is_object() || !c.contains("box") || !c.contains("pattern"))
      throw FormatError("decomposition: each cell needs box and pattern");
    Box b = json_box(c["box"], "cell box");
    if (b.dim() != f.control.dim()) throw FormatError("decomposition: cell box size differs from R");
    std::vector<Mode> modes;
    try {
      if (c["pattern"].is_string()) {
        modes = Pattern::parse(c["pattern"].get<std::string>()).modes();
      } else {
        for (const auto& m : c["pattern"]) modes.push_back(Mode::parse(m.get<std::string>()));
      }
      for (const auto& m : modes)
        if (static_cast<int>(m.width()) != f.levels - 1)
          throw FormatError("cell pattern: mode " + m.to_string() + " does not have " +
                            std::to_string(f.levels - 1) + " switch pairs");
      f.cells.push_back({std::move(b), Pattern(std::move(modes))});
    } catch (const InputError& e) {
      throw FormatError(std::string("cell pattern: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("cell pattern: ") + e.what());
    }
  }
  return f;
}

void write_decomposition(std::ostream& os, const DecompositionFile& f) {
  os << to_json(f).dump(2) << '\n';
}

DecompositionFile read_decomposition(std::istream& is) {
  Json j;
  try {
    j = Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("decomposition: ") + e.what());
  }
  try {
    return decomposition_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("decomposition: ") + e.what());
  }
}

Json to_json(const ValidationReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json jc{{"index", c.index},
            {"passed", c.passed()},
            {"inside_R", c.inside_control},
            {"length_ok", c.length_ok},
            {"modes_known", c.modes_known},
            {"post_margin", finite_or_null(c.verdict.post_margin)},
            {"post_dim", c.verdict.post_dim},
            {"unfold_margin", finite_or_null(c.verdict.unfold_margin)},
            {"unfold_dim", c.verdict.unfold_dim},
            {"unfold_step", c.verdict.unfold_step}};
    Json free_dims = Json::array();
    for (const auto& iv : c.post_uncontrolled) free_dims.push_back({iv.lo, iv.hi});
    jc["post_uncontrolled"] = free_dims;
    cells.push_back(jc);
  }
  const auto& cv = r.coverage;
  return Json{{"passed", r.passed()},
              {"failures", r.failures()},
              {"min_margin", finite_or_null(r.min_margin())},
              {"coverage",
               {{"passed", cv.passed()},
                {"cells_inside_R", cv.cells_inside},
                {"interiors_disjoint", cv.interiors_disjoint},
                {"volume_ratio", cv.volume_ratio},
                {"grid_points", cv.grid_points},
                {"grid_misses", cv.grid_misses}}},
              {"cells", cells}};
}

Json to_json(const TraceReport& r, const SimulationResult& sim, const DimSet& dims) {
  Json margins = Json::object();
  for (std::size_t k = 0; k < dims.size(); ++k)
    margins["x" + std::to_string(dims[k])] = finite_or_null(r.worst_margin[k]);
  Json j{{"passed", r.passed() && !sim.halted},
         {"samples", r.inside.size()},
         {"cycles_completed", sim.cycles_completed},
         {"halted", sim.halted},
         {"worst_margin", margins},
         {"observed_levels", r.observed_levels},
         {"max_level_deviation", r.max_level_deviation},
         {"output_min", r.output_min},
         {"output_max", r.output_max}};
  if (r.first_violation) {
    j["first_violation"] = *r.first_violation;
    j["first_violation_time"] = sim.trace.times.at(*r.first_violation);
  }
  if (sim.halted) {
    j["halt_time"] = sim.halt_time;
    j["halt_reason"] = sim.halt_reason;
  }
  return j;
}

} // namespace fcsynth::io
