#include "fcsynth/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

#include "fcsynth/errors.hpp"
#include "fcsynth/parallel.hpp"

namespace fcsynth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBatch = 4096;

// Slack of [c - r, c + r] inside [lo - eps, hi + eps].
inline double interval_slack(double c, double r, double lo, double hi, double eps) {
  return std::min((c - r) - (lo - eps), (hi + eps) - (c + r));
}

double hull_radius_row(const Matrix& gens, Eigen::Index i) {
  return gens.row(i).cwiseAbs().sum();
}

} // namespace

void SynthesisProblem::check() const {
  if (!system) throw InputError("problem: no system");
  const auto n = system->dim();
  controlled.check_within(n);
  if (controlled.empty()) throw InputError("problem: no controlled dimensions");
  if (control.dim() != static_cast<Eigen::Index>(controlled.size()) ||
      safe.dim() != control.dim())
    throw InputError("problem: R and S must have one interval per controlled dimension");
  if (!safe.contains(control)) throw InputError("problem: R is not contained in S");
  const auto free_dims = static_cast<std::size_t>(n) - controlled.size();
  if (initial_slice.size() != free_dims)
    throw InputError("problem: initial slice needs one interval per uncontrolled dimension");
  for (const auto& iv : initial_slice)
    if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw InputError("problem: malformed initial slice interval");
  if (!return_bound.empty() && return_bound.size() != free_dims)
    throw InputError("problem: return bound needs one interval per uncontrolled dimension");
  if (depth < 0) throw InputError("problem: depth must be >= 0");
  if (max_length < 1) throw InputError("problem: pattern length bound must be >= 1");
  if (!(eps >= 0.0)) throw InputError("problem: eps must be >= 0");
  if (subsample < 1) throw InputError("problem: subsample must be >= 1");
}

DimSet SynthesisProblem::uncontrolled() const {
  std::vector<std::size_t> free_dims;
  for (std::size_t i = 0; i < static_cast<std::size_t>(system->dim()); ++i)
    if (!controlled.contains(i)) free_dims.push_back(i);
  return DimSet(std::move(free_dims));
}

std::string SynthesisProblem::fingerprint() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "n=" << system->dim() << ";tau=" << system->tau() << ";";
  for (const auto& m : system->modes()) {
    const auto& dyn = system->dynamics(m);
    os << m.to_string() << ":";
    for (Eigen::Index i = 0; i < dyn.A.size(); ++i) os << dyn.A.data()[i] << ",";
    for (Eigen::Index i = 0; i < dyn.b.size(); ++i) os << dyn.b[i] << ",";
  }
  auto box = [&](const Box& b) {
    for (Eigen::Index i = 0; i < b.dim(); ++i) os << b.lower(i) << ":" << b.upper(i) << ",";
  };
  os << ";R=";
  box(control);
  os << ";S=";
  box(safe);
  os << ";dims=";
  for (auto d : controlled) os << d << ",";
  os << ";slice=";
  for (const auto& iv : initial_slice) os << iv.lo << ":" << iv.hi << ",";
  os << ";ret=";
  for (const auto& iv : return_bound) os << iv.lo << ":" << iv.hi << ",";
  os << ";d=" << depth << ";k=" << max_length << ";eps=" << eps << ";q=" << subsample;

  // FNV-1a, 64 bit
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Zonotope lift(const SynthesisProblem& problem, const Box& cell) {
  const auto n = problem.system->dim();
  if (cell.dim() != static_cast<Eigen::Index>(problem.controlled.size()))
    throw InputError("lift: cell dimension differs from the controlled dimension count");
  Box full;
  Vector lo(n), hi(n);
  for (std::size_t k = 0; k < problem.controlled.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(problem.controlled[k]);
    lo[i] = cell.lower(static_cast<Eigen::Index>(k));
    hi[i] = cell.upper(static_cast<Eigen::Index>(k));
  }
  const auto free_dims = problem.uncontrolled();
  for (std::size_t k = 0; k < free_dims.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(free_dims[k]);
    lo[i] = problem.initial_slice[k].lo;
    hi[i] = problem.initial_slice[k].hi;
  }
  return zonotope_from_box(Box(std::move(lo), std::move(hi)));
}

double PatternVerdict::worst() const {
  return std::min({post_margin, unfold_margin, return_margin});
}

PatternEvaluator::PatternEvaluator(const SynthesisProblem& problem)
    : problem_(problem),
      steps_(problem.system->substep_maps(problem.subsample)),
      uncontrolled_(problem.uncontrolled()) {}

PatternVerdict PatternEvaluator::evaluate(const Zonotope& start, const Pattern& pi) {
  const auto& sys = *problem_.system;
  const auto& dims = problem_.controlled;
  const double eps = problem_.eps;
  center_ = start.center;
  gens_ = start.generators;

  PatternVerdict v;
  v.unfold_margin = kInf;
  v.return_margin = kInf;
  auto check_safe = [&](std::size_t step) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(dims[k]);
      const auto bk = static_cast<Eigen::Index>(k);
      const double m = interval_slack(center_[i], hull_radius_row(gens_, i),
                                      problem_.safe.lower(bk), problem_.safe.upper(bk), eps);
      if (m < v.unfold_margin) {
        v.unfold_margin = m;
        v.unfold_dim = dims[k];
        v.unfold_step = step;
      }
    }
  };

  std::size_t step = 0;
  check_safe(step);
  for (const auto& u : pi) {
    const auto& m = steps_[sys.slot(u)];
    for (int s = 0; s < problem_.subsample; ++s) {
      center_next_.noalias() = m.C * center_;
      center_next_ += m.d;
      gens_next_.noalias() = m.C * gens_;
      center_.swap(center_next_);
      gens_.swap(gens_next_);
      check_safe(++step);
    }
  }

  v.post_margin = kInf;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(dims[k]);
    const auto bk = static_cast<Eigen::Index>(k);
    const double m = interval_slack(center_[i], hull_radius_row(gens_, i),
                                    problem_.control.lower(bk), problem_.control.upper(bk), eps);
    if (m < v.post_margin) {
      v.post_margin = m;
      v.post_dim = dims[k];
    }
  }
  for (std::size_t k = 0; k < problem_.return_bound.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(uncontrolled_[k]);
    const auto& iv = problem_.return_bound[k];
    v.return_margin = std::min(
        v.return_margin, interval_slack(center_[i], hull_radius_row(gens_, i), iv.lo, iv.hi, eps));
  }
  return v;
}

PatternSearch search_pattern(const SynthesisProblem& problem, const Box& w,
                             PatternSource& source, int workers) {
  problem.check();
  const Zonotope start = lift(problem, w);
  PatternSearch result;

  auto consider = [&](const Pattern& p, const PatternVerdict& v) {
    if (v.worst() > result.best_margin) {
      result.best_margin = v.worst();
      result.best_candidate = p;
    }
  };

  if (workers <= 1) {
    PatternEvaluator evaluator(problem);
    std::uint64_t index = 0;
    while (auto p = source.next()) {
      ++index;
      if (p->size() > problem.max_length) continue;
      const auto v = evaluator.evaluate(start, *p);
      if (v.ok()) {
        result.pattern = std::move(*p);
        result.evaluated = index;
        result.best_candidate.reset();
        return result;
      }
      consider(*p, v);
    }
    result.evaluated = index;
    return result;
  }

  const auto nworkers = static_cast<std::size_t>(workers);
  std::vector<PatternEvaluator> evaluators;
  evaluators.reserve(nworkers);
  for (std::size_t t = 0; t < nworkers; ++t) evaluators.emplace_back(problem);

  std::uint64_t base = 0;
  std::vector<Pattern> batch;
  std::vector<PatternVerdict> verdicts;
  std::vector<char> evaluated;
  for (;;) {
    batch.clear();
    while (batch.size() < kBatch) {
      auto p = source.next();
      if (!p) break;
      batch.push_back(std::move(*p));
    }
    if (batch.empty()) break;
    verdicts.assign(batch.size(), PatternVerdict{});
    evaluated.assign(batch.size(), 0);
    std::atomic<std::size_t> found{batch.size()};

    // Interleaved static partition; indices beyond the best match so far are skipped,
    // so every index below the final match has been evaluated.
    parallel_for(nworkers, workers, [&](std::size_t t) {
      for (std::size_t i = t; i < batch.size(); i += nworkers) {
        if (i > found.load(std::memory_order_relaxed)) break;
        if (batch[i].size() > problem.max_length) continue;
        verdicts[i] = evaluators[t].evaluate(start, batch[i]);
        evaluated[i] = 1;
        if (verdicts[i].ok()) {
          std::size_t cur = found.load();
          while (i < cur && !found.compare_exchange_weak(cur, i)) {
          }
          break;
        }
      }
    });

    const std::size_t hit = found.load();
    if (hit < batch.size()) {
      result.pattern = std::move(batch[hit]);
      result.evaluated = base + hit + 1;
      result.best_candidate.reset();
      return result;
    }
    for (std::size_t i = 0; i < batch.size(); ++i)
      if (evaluated[i]) consider(batch[i], verdicts[i]);
    base += batch.size();
  }
  result.evaluated = base;
  return result;
}

std::optional<Pattern> find_pattern(const SynthesisProblem& problem, const Box& w,
                                    PatternSource& source, int workers) {
  return search_pattern(problem, w, source, workers).pattern;
}

DecomposeResult decompose(const SynthesisProblem& problem, const Box& w, int depth,
                          PatternSource& source, int workers) {
  DecomposeResult res;
  source.reset();
  auto search = search_pattern(problem, w, source, workers);
  res.evaluated = search.evaluated;
  if (search.pattern) {
    res.success = true;
    res.cells.push_back({w, std::move(*search.pattern)});
    return res;
  }
  if (depth <= 0) {
    res.exhausted.push_back({w, search.best_margin, std::move(search.best_candidate)});
    return res;
  }
  res.success = true;
  for (const auto& part : bisect(w, DimSet::first(static_cast<std::size_t>(w.dim())))) {
    auto sub = decompose(problem, part, depth - 1, source, workers);
    res.success = res.success && sub.success;
    res.evaluated += sub.evaluated;
    for (auto& c : sub.cells) res.cells.push_back(std::move(c));
    for (auto& e : sub.exhausted) res.exhausted.push_back(std::move(e));
  }
  return res;
}

DecomposeResult decompose(const SynthesisProblem& problem, PatternSource& source, int workers) {
  problem.check();
  return decompose(problem, problem.control, problem.depth, source, workers);
}

Decomposition DecomposeResult::decomposition(const SynthesisProblem& problem) const {
  if (!success) throw InputError("decompose: no decomposition (synthesis failed)");
  return Decomposition{problem.control, problem.controlled, cells, problem.fingerprint()};
}

// ---------------------------------------------------------------------------
// Validation

bool CoverageReport::passed() const {
  return cells_inside && interiors_disjoint && std::abs(volume_ratio - 1.0) <= 1e-9 &&
         grid_misses == 0;
}

bool ValidationReport::passed() const { return coverage.passed() && failures() == 0; }

std::size_t ValidationReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const CellReport& c) { return !c.passed(); }));
}

double ValidationReport::min_margin() const {
  double m = kInf;
  for (const auto& c : cells) m = std::min({m, c.verdict.post_margin, c.verdict.unfold_margin});
  return m;
}

namespace {

CellReport check_cell(const DecompositionCell& cell, std::size_t index,
                      const SynthesisProblem& problem) {
  const auto& sys = *problem.system;
  CellReport rep;
  rep.index = index;
  rep.inside_control = problem.control.contains(cell.cell);
  rep.length_ok = cell.pattern.size() <= problem.max_length;
  rep.modes_known = std::all_of(cell.pattern.begin(), cell.pattern.end(),
                                [&](const Mode& u) { return sys.has_mode(u); });
  if (!rep.modes_known) {
    rep.verdict.post_margin = rep.verdict.unfold_margin = -kInf;
    return rep;
  }
  const Zonotope start = lift(problem, cell.cell);
  const auto samples = unfold(sys, cell.pattern, start, problem.subsample);
  rep.verdict.unfold_margin = kInf;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto cm = containment_margin(samples[s], problem.safe, problem.controlled, problem.eps);
    if (cm.margin < rep.verdict.unfold_margin) {
      rep.verdict.unfold_margin = cm.margin;
      rep.verdict.unfold_dim = cm.worst_dim;
      rep.verdict.unfold_step = s;
    }
  }
  const Zonotope post = post_pattern(sys, cell.pattern, start);
  const auto pm = containment_margin(post, problem.control, problem.controlled, problem.eps);
  rep.verdict.post_margin = pm.margin;
  rep.verdict.post_dim = pm.worst_dim;

  const auto free_dims = problem.uncontrolled();
  const Box hull = interval_hull(post);
  for (auto i : free_dims) {
    const auto ii = static_cast<Eigen::Index>(i);
    rep.post_uncontrolled.push_back({hull.lower(ii), hull.upper(ii)});
  }
  rep.verdict.return_margin = kInf;
  if (!problem.return_bound.empty()) {
    Vector lo(static_cast<Eigen::Index>(free_dims.size()));
    Vector hi(lo.size());
    for (std::size_t k = 0; k < free_dims.size(); ++k) {
      lo[static_cast<Eigen::Index>(k)] = problem.return_bound[k].lo;
      hi[static_cast<Eigen::Index>(k)] = problem.return_bound[k].hi;
    }
    rep.verdict.return_margin =
        containment_margin(post, Box(lo, hi), free_dims, problem.eps).margin;
  }
  return rep;
}

double overlap_volume(const Box& a, const Box& b) {
  double v = 1.0;
  for (Eigen::Index i = 0; i < a.dim(); ++i) {
    const double w = std::min(a.upper(i), b.upper(i)) - std::max(a.lower(i), b.lower(i));
    if (w <= 0.0) return 0.0;
    v *= w;
  }
  return v;
}

std::vector<std::vector<double>> grid_axes(const Decomposition& dec, const Box& r,
                                           int per_interval) {
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(r.dim()));
  for (Eigen::Index i = 0; i < r.dim(); ++i) {
    std::vector<double> breaks{r.lower(i), r.upper(i)};
    for (const auto& c : dec.cells) {
      if (c.cell.dim() != r.dim()) continue;
      for (double x : {c.cell.lower(i), c.cell.upper(i)})
        if (x > r.lower(i) && x < r.upper(i)) breaks.push_back(x);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    auto& axis = axes[static_cast<std::size_t>(i)];
    axis.push_back(breaks.front());
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
      for (int t = 1; t < per_interval; ++t)
        axis.push_back(breaks[k] + (breaks[k + 1] - breaks[k]) * t / (per_interval - 1));
  }
  return axes;
}

} // namespace

ValidationReport validate(const Decomposition& decomposition, const SynthesisProblem& problem,
                          int workers) {
  problem.check();
  const Box& r = problem.control;
  for (const auto& c : decomposition.cells)
    if (c.cell.dim() != r.dim())
      throw FormatError("validate: cell box dimension differs from R");

  ValidationReport report;
  report.cells.resize(decomposition.cells.size());
  parallel_for(decomposition.cells.size(), workers, [&](std::size_t i) {
    report.cells[i] = check_cell(decomposition.cells[i], i, problem);
  });

  auto& cov = report.coverage;
  cov.cells_inside = std::all_of(report.cells.begin(), report.cells.end(),
                                 [](const CellReport& c) { return c.inside_control; });
  const double vol = r.volume();
  double sum = 0.0;
  cov.interiors_disjoint = true;
  for (std::size_t i = 0; i < decomposition.cells.size(); ++i) {
    sum += decomposition.cells[i].cell.volume();
    for (std::size_t j = i + 1; j < decomposition.cells.size(); ++j)
      if (overlap_volume(decomposition.cells[i].cell, decomposition.cells[j].cell) > 1e-12 * vol)
        cov.interiors_disjoint = false;
  }
  cov.volume_ratio = vol > 0.0 ? sum / vol : 0.0;

  // Grid membership over R: 11 points per elementary interval, fewer if the grid explodes.
  constexpr double kMaxGrid = 5e6;
  std::vector<std::vector<double>> axes;
  for (int per : {11, 3, 2}) {
    axes = grid_axes(decomposition, r, per);
    double total = 1.0;
    for (const auto& a : axes) total *= static_cast<double>(a.size());
    if (total <= kMaxGrid) break;
  }
  std::vector<std::size_t> idx(axes.size(), 0);
  Vector p(r.dim());
  const Vector slack = 1e-9 * (r.upper() - r.lower()).cwiseMax(1.0);
  for (bool more = !axes.empty(); more;) {
    for (std::size_t k = 0; k < axes.size(); ++k) p[static_cast<Eigen::Index>(k)] = axes[k][idx[k]];
    ++cov.grid_points;
    const bool covered =
        std::any_of(decomposition.cells.begin(), decomposition.cells.end(), [&](const auto& c) {
          return ((p - c.cell.lower()).array() >= -slack.array()).all() &&
                 ((c.cell.upper() - p).array() >= -slack.array()).all();
        });
    if (!covered) ++cov.grid_misses;
    more = false;
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++idx[k] < axes[k].size()) {
        more = true;
        break;
      }
      idx[k] = 0;
    }
  }
  return report;
}

const Pattern& controller_lookup(const Decomposition& decomposition, const Vector& x) {
  const auto& dims = decomposition.controlled;
  Vector proj(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (static_cast<Eigen::Index>(dims[k]) >= x.size())
      throw InputError("controller: state has too few components");
    proj[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(dims[k])];
  }
  if (proj.size() != decomposition.control.dim() || !decomposition.control.contains(proj)) {
    std::ostringstream os;
    os << "controller: state (" << proj.transpose() << ") is outside the control box";
    throw OutOfDomainError(os.str());
  }
  for (const auto& c : decomposition.cells)
    if (c.cell.contains(proj)) return c.pattern;
  throw OutOfDomainError("controller: state is not covered by any cell");
}

} // namespace fcsynth
