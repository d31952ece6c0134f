#include "fcsynth/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fcsynth/converter_model.hpp"
#include "fcsynth/errors.hpp"
#include "fcsynth/io.hpp"
#include "fcsynth/simulator.hpp"
#include "fcsynth/switched_core.hpp"
#include "fcsynth/synthesis.hpp"

namespace fcsynth::cli {

namespace {

using converter::ConverterParams;

class CommandError : public std::runtime_error {
public:
  CommandError(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const { return code_; }

private:
  int code_;
};

/// Everything a command line can set. Optional fields override the preset/parameter file.
struct RunConfig {
  std::string preset;
  std::string params_file;
  std::optional<int> levels;
  std::optional<double> tau, vinput, rload, lload, tol, epsilon;
  std::vector<double> cap, rpar;
  std::optional<int> depth;
  std::optional<std::size_t> k;
  std::optional<int> subsample;
  std::optional<double> contain_eps;
  std::optional<double> current;
  int workers = 1;
  std::uint64_t seed = 1;
  std::string out;
  std::string report;

  // command specific
  std::string input;
  std::string pattern;
  std::string source = "cycle";
  std::string mode;
  std::vector<double> start;
  int cycles = 50;
  int random_starts = 0;
  bool verbose = false;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

ConverterParams resolve_params(const RunConfig& cfg) {
  ConverterParams p;
  if (cfg.preset == "paper-7level") p = converter::paper_7level();
  else if (cfg.preset == "paper-5level") p = converter::paper_5level();
  else if (!cfg.preset.empty()) throw CommandError(kUsage, "unknown preset: " + cfg.preset);
  else if (cfg.levels) p = converter::defaults_for_levels(*cfg.levels);

  if (!cfg.params_file.empty()) {
    std::ifstream in(cfg.params_file);
    if (!in) throw CommandError(kIo, "cannot open parameter file " + cfg.params_file);
    io::Json j;
    try {
      j = io::Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("parameter file: ") + e.what());
    }
    p = io::params_from_json(j, p);
  }
  if (cfg.levels) p.levels = *cfg.levels;
  if (cfg.tau) p.tau = *cfg.tau;
  if (cfg.vinput) p.v_input = *cfg.vinput;
  if (cfg.rload) p.r_load = *cfg.rload;
  if (cfg.lload) p.l_load = *cfg.lload;
  if (cfg.tol) p.tol = *cfg.tol;
  if (cfg.epsilon) p.epsilon = *cfg.epsilon;
  if (!cfg.cap.empty()) p.cap = cfg.cap;
  if (!cfg.rpar.empty()) p.r_par = cfg.rpar;
  p.check();
  return p;
}

converter::ProblemOptions resolve_options(const RunConfig& cfg) {
  converter::ProblemOptions o;
  if (cfg.depth) o.depth = *cfg.depth;
  if (cfg.k) o.max_length = *cfg.k;
  if (cfg.subsample) o.subsample = *cfg.subsample;
  if (cfg.contain_eps) o.contain_eps = *cfg.contain_eps;
  if (cfg.current) o.current_slice = Interval::point(*cfg.current);
  return o;
}

std::unique_ptr<PatternSource> make_source(const RunConfig& cfg, const ConverterParams& p,
                                           const SynthesisProblem& prob) {
  if (cfg.source == "cycle") return std::make_unique<CyclePatternStream>(p.levels);
  if (cfg.source == "all")
    return std::make_unique<BoundedLengthPatterns>(prob.system->modes(), prob.max_length);
  throw CommandError(kUsage, "unknown pattern source: " + cfg.source);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw CommandError(kIo, "cannot write " + path);
  return f;
}

io::DecompositionFile load_decomposition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CommandError(kIo, "cannot open decomposition file " + path);
  return io::read_decomposition(in);
}

/// Problem matching a loaded file: parameters from the file when present, else from flags.
std::pair<ConverterParams, SynthesisProblem> problem_for_file(const io::DecompositionFile& f,
                                                              const RunConfig& cfg) {
  ConverterParams p = f.params ? *f.params : resolve_params(cfg);
  if (!f.params && !cfg.levels && cfg.preset.empty()) p = converter::defaults_for_levels(f.levels);
  if (!f.params) p.tau = f.tau;
  if (p.levels != f.levels) throw FormatError("decomposition: levels disagree with parameters");
  converter::ProblemOptions o;
  o.depth = f.depth;
  o.max_length = f.max_length;
  o.subsample = f.subsample;
  o.contain_eps = f.eps;
  if (f.initial_slice.size() == 1) o.current_slice = f.initial_slice[0];
  auto prob = converter::default_problem(p, o);
  prob.control = f.control;
  prob.safe = f.safe;
  prob.controlled = f.controlled;
  if (!f.initial_slice.empty()) prob.initial_slice = f.initial_slice;
  prob.check();
  return {p, prob};
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const auto p = resolve_params(cfg);
  const auto prob = converter::default_problem(p, resolve_options(cfg));
  auto source = make_source(cfg, p, prob);

  const auto t0 = std::chrono::steady_clock::now();
  const auto res = decompose(prob, *source, cfg.workers);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out << "levels " << p.levels << ", depth " << prob.depth << ", k " << prob.max_length
      << ", workers " << cfg.workers << "\n";
  out << "patterns evaluated: " << res.evaluated << "\n";
  out << "wall time: " << fmt(wall, 4) << " s\n";
  if (!res.success) {
    out << "synthesis FAILED: " << res.exhausted.size() << " box(es) exhausted depth\n";
    for (const auto& e : res.exhausted) {
      out << "  box lower=(" << e.box.lower().transpose() << ") upper=(" << e.box.upper().transpose()
          << ") best margin " << fmt(e.best_margin);
      if (e.best_candidate) out << " with " << e.best_candidate->to_string();
      out << "\n";
    }
    return kSynthesisFailed;
  }
  out << "cells: " << res.cells.size() << "\n";
  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    const auto& c = res.cells[i];
    out << "  V" << (i + 1) << " = ";
    for (Eigen::Index d = 0; d < c.cell.dim(); ++d)
      out << (d ? " x " : "") << "[" << c.cell.lower(d) << "," << c.cell.upper(d) << "]";
    out << "  pi = " << c.pattern.to_string() << "\n";
  }
  const auto file = io::make_file(res.decomposition(prob), prob, p);
  const std::string path = cfg.out.empty() ? "decomposition.json" : cfg.out;
  auto f = open_out(path);
  io::write_decomposition(f, file);
  out << "wrote " << path << "\n";
  return kOk;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw CommandError(kUsage, "validate needs a decomposition file");
  const auto file = load_decomposition(cfg.input);
  const auto [p, prob] = problem_for_file(file, cfg);
  const auto report = validate(file.decomposition(), prob, cfg.workers);

  for (const auto& c : report.cells) {
    out << "cell " << (c.index + 1) << ": " << (c.passed() ? "PASS" : "FAIL")
        << "  post margin " << fmt(c.verdict.post_margin) << " (x" << c.verdict.post_dim << ")"
        << "  unfold margin " << fmt(c.verdict.unfold_margin) << " (x" << c.verdict.unfold_dim
        << ", step " << c.verdict.unfold_step << ")";
    for (const auto& iv : c.post_uncontrolled)
      out << "  end current [" << fmt(iv.lo) << ", " << fmt(iv.hi) << "]";
    if (!c.inside_control) out << "  [cell outside R]";
    if (!c.length_ok) out << "  [pattern too long]";
    if (!c.modes_known) out << "  [unknown mode]";
    out << "\n";
  }
  const auto& cv = report.coverage;
  out << "coverage: " << (cv.passed() ? "PASS" : "FAIL") << "  volume ratio "
      << fmt(cv.volume_ratio, 12) << ", disjoint " << (cv.interiors_disjoint ? "yes" : "no")
      << ", grid misses " << cv.grid_misses << "/" << cv.grid_points << "\n";
  out << (report.passed() ? "decomposition is safe" : "decomposition FAILED validation") << "\n";
  if (!cfg.report.empty()) {
    auto f = open_out(cfg.report);
    f << io::to_json(report).dump(2) << '\n';
  }
  return report.passed() ? kOk : kValidationFailed;
}

Vector default_start(const RunConfig& cfg, const ConverterParams& p) {
  const auto n = static_cast<Eigen::Index>(p.levels - 1);
  Vector x(n);
  if (!cfg.start.empty()) {
    if (static_cast<Eigen::Index>(cfg.start.size()) != n)
      throw CommandError(kUsage, "--start needs " + std::to_string(n) + " values");
    for (Eigen::Index i = 0; i < n; ++i) x[i] = cfg.start[static_cast<std::size_t>(i)];
    return x;
  }
  x.head(n - 1) = converter::ideal_setpoints(p);
  const auto same = [&](const ConverterParams& preset) {
    return io::params_to_json(p) == io::params_to_json(preset);
  };
  x[n - 1] = same(converter::paper_5level()) ? -3.0 : same(converter::paper_7level()) ? -2.5 : 0.0;
  if (cfg.current) x[n - 1] = *cfg.current;
  return x;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  std::optional<io::DecompositionFile> file;
  ConverterParams p;
  SynthesisProblem prob;
  if (!cfg.input.empty()) {
    file = load_decomposition(cfg.input);
    std::tie(p, prob) = problem_for_file(*file, cfg);
  } else if (!cfg.pattern.empty()) {
    p = resolve_params(cfg);
    prob = converter::default_problem(p, resolve_options(cfg));
  } else {
    throw CommandError(kUsage, "simulate needs a decomposition file or --pattern");
  }
  const int q = cfg.subsample.value_or(1);
  Decomposition dec;
  Controller controller = Pattern::parse(cfg.pattern.empty() ? "0" : cfg.pattern);
  if (cfg.pattern.empty()) {
    dec = file->decomposition();
    controller = &dec;
  }
  const auto output = converter::output_function(p);
  const auto levels = converter::ideal_levels(p);

  if (cfg.random_starts > 0) {
    std::mt19937_64 rng(cfg.seed);
    std::vector<Vector> starts;
    for (int s = 0; s < cfg.random_starts; ++s) {
      Vector x = Vector::Zero(prob.system->dim());
      for (std::size_t k = 0; k < prob.controlled.size(); ++k) {
        const auto bk = static_cast<Eigen::Index>(k);
        std::uniform_real_distribution<double> u(prob.control.lower(bk), prob.control.upper(bk));
        x[static_cast<Eigen::Index>(prob.controlled[k])] = u(rng);
      }
      starts.push_back(x);
    }
    const auto runs = simulate_many(*prob.system, controller, starts, cfg.cycles, q, output,
                                    cfg.workers);
    int failures = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : runs) {
      const auto rep = check_trace(r.trace, prob.safe, prob.controlled, prob.eps);
      if (!rep.passed() || r.halted) ++failures;
      for (double m : rep.worst_margin) worst = std::min(worst, m);
    }
    out << "random starts: " << runs.size() << ", cycles " << cfg.cycles << ", seed " << cfg.seed
        << "\nfailures: " << failures << "\nworst margin: " << fmt(worst, 9) << "\n";
    return failures == 0 ? kOk : kValidationFailed;
  }

  const Vector x0 = default_start(cfg, p);
  const auto sim = simulate(*prob.system, controller, x0, cfg.cycles, q, output);
  const auto rep = check_trace(sim.trace, prob.safe, prob.controlled, prob.eps, levels);
  out << "start (" << x0.transpose() << "), cycles completed " << sim.cycles_completed << "/"
      << cfg.cycles << "\n";
  if (sim.halted) out << "halted at t=" << sim.halt_time << ": " << sim.halt_reason << "\n";
  out << "safety: " << (rep.passed() ? "inside S" : "LEFT S");
  if (rep.first_violation)
    out << " at sample " << *rep.first_violation << " (t=" << sim.trace.times[*rep.first_violation]
        << ")";
  out << "\nworst margins:";
  for (double m : rep.worst_margin) out << " " << fmt(m);
  out << "\noutput levels:";
  for (double l : rep.observed_levels) out << " " << l;
  out << "  (max ripple " << fmt(rep.max_level_deviation, 4) << " V)\n";

  if (!cfg.out.empty()) {
    auto f = open_out(cfg.out);
    write_trace_csv(f, sim.trace);
    out << "wrote " << cfg.out << "\n";
  }
  if (!cfg.report.empty()) {
    auto f = open_out(cfg.report);
    f << io::to_json(rep, sim, prob.controlled).dump(2) << '\n';
  }
  return rep.passed() && !sim.halted ? kOk : kValidationFailed;
}

int cmd_enumerate(const RunConfig& cfg, std::ostream& out) {
  CyclePatternStream stream(cfg.levels.value_or(5));
  std::uint64_t count = 0;
  while (auto p = stream.next()) {
    ++count;
    if (cfg.verbose) out << p->to_string() << "\n";
  }
  out << count << "\n";
  return kOk;
}

int cmd_model(const RunConfig& cfg, std::ostream& out) {
  const auto p = resolve_params(cfg);
  const auto width = static_cast<std::size_t>(p.levels - 1);
  const Mode m = cfg.mode.empty() ? Mode::zeros(width) : Mode::parse(cfg.mode);
  if (m.width() != width) throw CommandError(kUsage, "--mode must have levels-1 bits");
  const auto dyn = converter::mode_dynamics(p, m);
  const Eigen::IOFormat f(Eigen::StreamPrecision, 0, ", ", "\n", "  [", "]");
  out << "mode " << m.to_string() << "\nA =\n" << dyn.A.format(f) << "\nb =\n"
      << dyn.b.transpose().format(f) << "\n";
  const auto ideal = converter::ideal_setpoints(p);
  out << "ideal setpoints: " << ideal.transpose() << "\n";
  out << "output voltage at setpoints: " << converter::output_voltage(p, m, ideal) << "\n";
  const auto map = discretize(dyn, p.tau);
  out << "C =\n" << map.C.format(f) << "\nd =\n" << map.d.transpose().format(f) << "\n";
  return kOk;
}

void add_model_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--preset", cfg.preset, "paper-5level or paper-7level");
  sub->add_option("--params", cfg.params_file, "parameter JSON file");
  sub->add_option("--levels", cfg.levels, "number of output levels (odd, >= 3)");
  sub->add_option("--tau", cfg.tau, "sampling period [s]");
  sub->add_option("--vinput", cfg.vinput, "input voltage [V]");
  sub->add_option("--rload", cfg.rload, "load resistance [ohm]");
  sub->add_option("--lload", cfg.lload, "load inductance [H]");
  sub->add_option("--cap", cfg.cap, "capacitances [F], comma separated or one value")
      ->delimiter(',');
  sub->add_option("--rpar", cfg.rpar, "parallel resistances [ohm], comma separated or one value")
      ->delimiter(',');
  sub->add_option("--tol", cfg.tol, "half-width of R [V]");
  sub->add_option("--epsilon", cfg.epsilon, "inflation of R into S [V]");
  sub->add_option("--depth", cfg.depth, "maximal bisection depth");
  sub->add_option("--k", cfg.k, "maximal pattern length");
  sub->add_option("--subsample", cfg.subsample, "sub-steps per sampling period");
  sub->add_option("--contain-eps", cfg.contain_eps, "containment tolerance [state units]");
  sub->add_option("--current", cfg.current, "load current at cycle start [A]");
  sub->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", cfg.seed, "random seed");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correct-by-design switching controllers for flying-capacitor converters",
               "fcsynth"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* synth = app.add_subcommand("synth", "decompose R and write a decomposition file");
  add_model_flags(synth, cfg);
  synth->add_option("--out", cfg.out, "decomposition file (default decomposition.json)");
  synth->add_option("--source", cfg.source, "pattern source: cycle or all");

  auto* val = app.add_subcommand("validate", "re-check a decomposition file");
  add_model_flags(val, cfg);
  val->add_option("file", cfg.input, "decomposition file")->required();
  val->add_option("--report", cfg.report, "write a JSON report");

  auto* sim = app.add_subcommand("simulate", "closed-loop simulation");
  add_model_flags(sim, cfg);
  sim->add_option("file", cfg.input, "decomposition file");
  sim->add_option("--pattern", cfg.pattern, "fixed pattern, e.g. 0000->0001->...");
  sim->add_option("--cycles", cfg.cycles, "number of cycles")->check(CLI::NonNegativeNumber);
  sim->add_option("--start", cfg.start, "start state v1,...,i")->delimiter(',');
  sim->add_option("--random-starts", cfg.random_starts, "run N random starts in R instead");
  sim->add_option("--out", cfg.out, "trace CSV");
  sim->add_option("--report", cfg.report, "safety report JSON");

  auto* en = app.add_subcommand("enumerate", "count cycle patterns");
  en->add_option("--levels", cfg.levels, "number of output levels");
  en->add_flag("--verbose", cfg.verbose, "print every pattern");

  auto* model = app.add_subcommand("model", "print A_S, b_S and the sampled map of one mode");
  add_model_flags(model, cfg);
  model->add_option("--mode", cfg.mode, "mode bitstring, S_1 first");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (*synth) return cmd_synth(cfg, out);
    if (*val) return cmd_validate(cfg, out);
    if (*sim) return cmd_simulate(cfg, out);
    if (*en) return cmd_enumerate(cfg, out);
    if (*model) return cmd_model(cfg, out);
  } catch (const CommandError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}

} // namespace fcsynth::cli
