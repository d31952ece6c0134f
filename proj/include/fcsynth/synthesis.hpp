#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcsynth/geometry.hpp"
#include "fcsynth/switched_core.hpp"

namespace fcsynth {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  static Interval point(double v) { return {v, v}; }
  double mid() const { return 0.5 * (lo + hi); }
  double radius() const { return 0.5 * (hi - lo); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Decomposition problem. `control` (R) and `safe` (S) live in the controlled
/// subspace: their k-th interval belongs to state dimension controlled[k].
struct SynthesisProblem {
  std::shared_ptr<const SwitchedSystem> system;
  Box control;
  Box safe;
  DimSet controlled;
  /// Values of the uncontrolled dimensions at cycle start, in increasing state order.
  std::vector<Interval> initial_slice;
  int depth = 1;
  std::size_t max_length = 8;
  /// Containment tolerance in state units.
  double eps = 0.0;
  /// Sub-steps per sampling period in unfolding checks.
  int subsample = 1;
  /// Strict mode: bounds on the uncontrolled dimensions after a full pattern. Empty = off.
  std::vector<Interval> return_bound;

  /// Throws InputError when the fields are inconsistent.
  void check() const;
  DimSet uncontrolled() const;
  /// Stable hash of everything that affects synthesis, as 16 hex digits.
  std::string fingerprint() const;
};

/// Embeds a controlled-subspace box into the full state space using the initial slice.
Zonotope lift(const SynthesisProblem& problem, const Box& cell);

struct DecompositionCell {
  Box cell;
  Pattern pattern;
};

struct Decomposition {
  Box control;
  DimSet controlled;
  std::vector<DecompositionCell> cells;
  std::string fingerprint;
};

/// Outcome of one candidate pattern on one lifted box.
struct PatternVerdict {
  double post_margin = 0.0;   ///< slack of Post in R (eps-inflated)
  std::size_t post_dim = 0;
  double unfold_margin = 0.0; ///< slack of the unfolding in S (eps-inflated)
  std::size_t unfold_dim = 0;
  std::size_t unfold_step = 0; ///< sample index of the worst unfolding slack
  double return_margin = 0.0;  ///< strict mode only; +inf otherwise
  bool ok() const { return post_margin >= 0.0 && unfold_margin >= 0.0 && return_margin >= 0.0; }
  double worst() const;
};

/// Step-by-step evaluator with cached maps and reusable buffers. One per thread.
class PatternEvaluator {
public:
  explicit PatternEvaluator(const SynthesisProblem& problem);
  PatternVerdict evaluate(const Zonotope& start, const Pattern& pi);

private:
  const SynthesisProblem& problem_;
  std::vector<AffineMap> steps_;
  DimSet uncontrolled_;
  Vector center_, center_next_;
  Matrix gens_, gens_next_;
};

struct PatternSearch {
  std::optional<Pattern> pattern;
  /// Candidates up to and including the match (or all of them), as a sequential scan would.
  std::uint64_t evaluated = 0;
  /// Candidate with the largest worst-case margin; filled when nothing validates.
  std::optional<Pattern> best_candidate;
  double best_margin = -std::numeric_limits<double>::infinity();
};

/// First pattern of `source` (in stream order) whose Post lands in R and whose
/// unfolding stays in S on the controlled dimensions. Result is independent of `workers`.
PatternSearch search_pattern(const SynthesisProblem& problem, const Box& w,
                             PatternSource& source, int workers = 1);

std::optional<Pattern> find_pattern(const SynthesisProblem& problem, const Box& w,
                                    PatternSource& source, int workers = 1);

struct ExhaustedBox {
  Box box;
  double best_margin;
  std::optional<Pattern> best_candidate;
};

struct DecomposeResult {
  bool success = false;
  std::vector<DecompositionCell> cells;
  std::vector<ExhaustedBox> exhausted;
  std::uint64_t evaluated = 0;

  /// Throws if !success.
  Decomposition decomposition(const SynthesisProblem& problem) const;
};

/// Find a pattern for w; otherwise bisect over the controlled dimensions and recurse
/// until `depth` runs out. All parts are explored so every exhausted box is reported.
DecomposeResult decompose(const SynthesisProblem& problem, const Box& w, int depth,
                          PatternSource& source, int workers = 1);

/// decompose(problem, R, problem.depth).
DecomposeResult decompose(const SynthesisProblem& problem, PatternSource& source,
                          int workers = 1);

struct CellReport {
  std::size_t index = 0;
  bool inside_control = false;
  bool length_ok = false;
  bool modes_known = false;
  PatternVerdict verdict;
  /// Interval hull of Post on the uncontrolled dimensions (e.g. the load current).
  std::vector<Interval> post_uncontrolled;
  bool passed() const { return inside_control && length_ok && modes_known && verdict.ok(); }
};

struct CoverageReport {
  bool cells_inside = false;
  bool interiors_disjoint = false;
  double volume_ratio = 0.0; ///< sum of cell volumes / vol(R)
  std::size_t grid_points = 0;
  std::size_t grid_misses = 0;
  bool passed() const;
};

struct ValidationReport {
  std::vector<CellReport> cells;
  CoverageReport coverage;
  bool passed() const;
  std::size_t failures() const;
  /// Smallest Post/unfolding margin over all cells.
  double min_margin() const;
};

/// Re-checks a decomposition against the problem through the generic unfold and
/// containment routines, independently of the search path.
ValidationReport validate(const Decomposition& decomposition, const SynthesisProblem& problem,
                          int workers = 1);

/// Pattern of the first stored cell whose box holds the controlled projection of x.
/// Throws OutOfDomainError when the projection is outside R or uncovered.
const Pattern& controller_lookup(const Decomposition& decomposition, const Vector& x);

} // namespace fcsynth
