#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fcsynth/affine_flow.hpp"
#include "fcsynth/geometry.hpp"

namespace fcsynth {

/// Switch configuration. Bit j is switch pair S_{j+1}; the text form lists S_1 first.
class Mode {
public:
  static constexpr std::size_t kMaxWidth = 24;

  Mode() = default;
  Mode(std::size_t width, std::uint32_t bits);

  /// Parses "0101" (leftmost character = S_1). Throws InputError.
  static Mode parse(std::string_view text);
  static Mode zeros(std::size_t width) { return Mode(width, 0); }
  static Mode ones(std::size_t width);

  std::size_t width() const { return width_; }
  std::uint32_t bits() const { return bits_; }
  /// Value of switch pair S_{j+1}.
  int bit(std::size_t j) const { return static_cast<int>((bits_ >> j) & 1U); }
  int weight() const;
  Mode with_bit(std::size_t j, bool value) const;
  Mode complement() const;
  std::string to_string() const;

  friend bool operator==(const Mode&, const Mode&) = default;
  friend auto operator<=>(const Mode&, const Mode&) = default;

private:
  std::size_t width_ = 0;
  std::uint32_t bits_ = 0;
};

/// Finite sequence of modes, each held for one sampling period.
class Pattern {
public:
  Pattern() = default;
  explicit Pattern(std::vector<Mode> modes);

  /// Accepts "0000->0001->..." (whitespace and unicode arrows tolerated).
  static Pattern parse(std::string_view text);

  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }
  std::string to_string() const;
  std::vector<std::string> mode_strings() const;

  friend bool operator==(const Pattern&, const Pattern&) = default;

private:
  std::vector<Mode> modes_;
};

/// Affine sampled switched system: one affine vector field per mode, sampled every tau.
class SwitchedSystem {
public:
  /// Discretizes every mode eagerly. All modes must share `width`.
  SwitchedSystem(std::size_t width, std::vector<std::pair<Mode, ModeDynamics>> modes, double tau);

  Eigen::Index dim() const { return dim_; }
  std::size_t mode_width() const { return width_; }
  double tau() const { return tau_; }
  bool has_mode(const Mode& u) const;
  std::vector<Mode> modes() const;

  const ModeDynamics& dynamics(const Mode& u) const;
  /// Cached discretize(dynamics(u), tau). Throws InputError for an unknown mode.
  const AffineMap& map(const Mode& u) const;
  /// Maps over tau / q for every mode, indexed like map(); recomputed per call.
  std::vector<AffineMap> substep_maps(int q) const;
  std::size_t slot(const Mode& u) const;

private:
  std::size_t width_;
  Eigen::Index dim_ = 0;
  double tau_;
  std::vector<std::optional<ModeDynamics>> dynamics_;
  std::vector<AffineMap> maps_;
};

Zonotope post_mode(const SwitchedSystem& sys, const Mode& u, const Zonotope& z);

/// Composition of the per-mode maps of `pi`, left to right.
AffineMap pattern_map(const SwitchedSystem& sys, const Pattern& pi);

/// Image of z under the composed pattern map.
Zonotope post_pattern(const SwitchedSystem& sys, const Pattern& pi, const Zonotope& z);

/// X_0 = z, X_{i+1} = Post_{u_{i+1}}(X_i). With q > 1 every mode is split into q
/// equal sub-steps and all intermediate sets are returned (length m*q + 1).
std::vector<Zonotope> unfold(const SwitchedSystem& sys, const Pattern& pi, const Zonotope& z,
                             int q = 1);

enum class Phase { ascending, descending };

/// Exactly one bit differs, flipped 0->1 when ascending and 1->0 when descending.
bool admissible_step(const Mode& u, const Mode& v, Phase phase);

/// Lazy, restartable stream of candidate patterns.
class PatternSource {
public:
  virtual ~PatternSource() = default;
  virtual std::optional<Pattern> next() = 0;
  virtual void reset() = 0;
  virtual std::unique_ptr<PatternSource> clone() const = 0;
};

/// One output cycle of an l-level converter: 0 ... all-ones ... weight 1, one bit per
/// step. Patterns are (set order, clear order) pairs of switch indices, enumerated
/// lexicographically with S_1 < S_2 < ...; ((l-1)!)^2 in total.
class CyclePatternStream final : public PatternSource {
public:
  explicit CyclePatternStream(int levels);

  std::optional<Pattern> next() override;
  void reset() override;
  std::unique_ptr<PatternSource> clone() const override;

  int levels() const { return levels_; }
  std::uint64_t count() const;
  /// Pattern at position `index` of the stream (permutation unranking).
  Pattern at(std::uint64_t index) const;

private:
  Pattern build(const std::vector<std::size_t>& set_order,
                const std::vector<std::size_t>& clear_order) const;

  int levels_;
  std::size_t width_;
  std::vector<std::size_t> set_order_;
  std::vector<std::size_t> clear_order_;
  bool done_ = false;
};

/// Every sequence over `alphabet` of length 1, then 2, ... up to `max_length`;
/// lexicographic within a length, following the order of `alphabet`.
class BoundedLengthPatterns final : public PatternSource {
public:
  BoundedLengthPatterns(std::vector<Mode> alphabet, std::size_t max_length);

  std::optional<Pattern> next() override;
  void reset() override;
  std::unique_ptr<PatternSource> clone() const override;

private:
  std::vector<Mode> alphabet_;
  std::size_t max_length_;
  std::vector<std::size_t> digits_;
};

/// Throws InputError unless levels is odd and >= 3.
CyclePatternStream enumerate_cycle_patterns(int levels);

} // namespace fcsynth
