#include "fcsynth/switched_core.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>

#include "fcsynth/errors.hpp"

namespace fcsynth {

Mode::Mode(std::size_t width, std::uint32_t bits) : width_(width), bits_(bits) {
  if (width == 0 || width > kMaxWidth) throw InputError("mode: unsupported width");
  if ((bits >> width) != 0) throw InputError("mode: bits beyond width");
}

Mode Mode::parse(std::string_view text) {
  if (text.empty() || text.size() > kMaxWidth) throw InputError("mode: bad length");
  std::uint32_t bits = 0;
  for (std::size_t j = 0; j < text.size(); ++j) {
    if (text[j] == '1') bits |= (1U << j);
    else if (text[j] != '0') throw InputError("mode: expected '0' or '1' in \"" + std::string(text) + "\"");
  }
  return Mode(text.size(), bits);
}

Mode Mode::ones(std::size_t width) { return Mode(width, (1U << width) - 1U); }

int Mode::weight() const { return std::popcount(bits_); }

Mode Mode::with_bit(std::size_t j, bool value) const {
  if (j >= width_) throw InputError("mode: bit index out of range");
  return Mode(width_, value ? (bits_ | (1U << j)) : (bits_ & ~(1U << j)));
}

Mode Mode::complement() const { return Mode(width_, ~bits_ & ((1U << width_) - 1U)); }

std::string Mode::to_string() const {
  std::string s(width_, '0');
  for (std::size_t j = 0; j < width_; ++j)
    if (bit(j)) s[j] = '1';
  return s;
}

Pattern::Pattern(std::vector<Mode> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) throw InputError("pattern: empty");
  for (const auto& m : modes_)
    if (m.width() != modes_.front().width()) throw InputError("pattern: mixed mode widths");
}

Pattern Pattern::parse(std::string_view text) {
  std::vector<Mode> modes;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) modes.push_back(Mode::parse(token));
    token.clear();
  };
  for (char c : text) {
    if (c == '0' || c == '1') token.push_back(c);
    else flush();
  }
  flush();
  return Pattern(std::move(modes));
}

std::string Pattern::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (i) out += "->";
    out += modes_[i].to_string();
  }
  return out;
}

std::vector<std::string> Pattern::mode_strings() const {
  std::vector<std::string> out;
  out.reserve(modes_.size());
  for (const auto& m : modes_) out.push_back(m.to_string());
  return out;
}

SwitchedSystem::SwitchedSystem(std::size_t width,
                               std::vector<std::pair<Mode, ModeDynamics>> modes, double tau)
    : width_(width), tau_(tau) {
  if (width == 0 || width > 20) throw InputError("switched system: unsupported mode width");
  if (modes.empty()) throw InputError("switched system: no modes");
  dynamics_.resize(std::size_t{1} << width);
  maps_.resize(dynamics_.size());
  dim_ = modes.front().second.dim();
  for (auto& [mode, dyn] : modes) {
    if (mode.width() != width) throw InputError("switched system: mode width mismatch");
    if (dyn.dim() != dim_) throw InputError("switched system: dimension mismatch between modes");
    if (dynamics_[mode.bits()]) throw InputError("switched system: duplicate mode " + mode.to_string());
    maps_[mode.bits()] = discretize(dyn, tau);
    dynamics_[mode.bits()] = std::move(dyn);
  }
}

bool SwitchedSystem::has_mode(const Mode& u) const {
  return u.width() == width_ && dynamics_[u.bits()].has_value();
}

std::vector<Mode> SwitchedSystem::modes() const {
  std::vector<Mode> out;
  for (std::uint32_t b = 0; b < dynamics_.size(); ++b)
    if (dynamics_[b]) out.emplace_back(width_, b);
  return out;
}

std::size_t SwitchedSystem::slot(const Mode& u) const {
  if (!has_mode(u)) throw InputError("switched system: unknown mode " + u.to_string());
  return u.bits();
}

const ModeDynamics& SwitchedSystem::dynamics(const Mode& u) const { return *dynamics_[slot(u)]; }

const AffineMap& SwitchedSystem::map(const Mode& u) const { return maps_[slot(u)]; }

std::vector<AffineMap> SwitchedSystem::substep_maps(int q) const {
  if (q < 1) throw InputError("subsample factor must be >= 1");
  if (q == 1) return maps_;
  std::vector<AffineMap> out(maps_.size());
  for (std::size_t s = 0; s < dynamics_.size(); ++s)
    if (dynamics_[s]) out[s] = discretize(*dynamics_[s], tau_ / q);
  return out;
}

Zonotope post_mode(const SwitchedSystem& sys, const Mode& u, const Zonotope& z) {
  return affine_image(sys.map(u), z);
}

AffineMap pattern_map(const SwitchedSystem& sys, const Pattern& pi) {
  AffineMap acc = AffineMap::identity(sys.dim());
  for (const auto& u : pi) acc = compose(acc, sys.map(u));
  return acc;
}

Zonotope post_pattern(const SwitchedSystem& sys, const Pattern& pi, const Zonotope& z) {
  return affine_image(pattern_map(sys, pi), z);
}

std::vector<Zonotope> unfold(const SwitchedSystem& sys, const Pattern& pi, const Zonotope& z,
                             int q) {
  const auto maps = sys.substep_maps(q);
  std::vector<Zonotope> out;
  out.reserve(pi.size() * static_cast<std::size_t>(q) + 1);
  out.push_back(z);
  for (const auto& u : pi) {
    const auto& m = maps[sys.slot(u)];
    for (int s = 0; s < q; ++s) out.push_back(affine_image(m, out.back()));
  }
  return out;
}

bool admissible_step(const Mode& u, const Mode& v, Phase phase) {
  if (u.width() != v.width()) return false;
  const std::uint32_t diff = u.bits() ^ v.bits();
  if (std::popcount(diff) != 1) return false;
  const bool rising = (v.bits() & diff) != 0;
  return phase == Phase::ascending ? rising : !rising;
}

// ---------------------------------------------------------------------------

CyclePatternStream::CyclePatternStream(int levels) : levels_(levels) {
  if (levels < 3 || levels % 2 == 0 || levels - 1 > static_cast<int>(Mode::kMaxWidth))
    throw InputError("cycle patterns: levels must be odd and >= 3");
  width_ = static_cast<std::size_t>(levels - 1);
  reset();
}

void CyclePatternStream::reset() {
  set_order_.resize(width_);
  std::iota(set_order_.begin(), set_order_.end(), std::size_t{0});
  clear_order_ = set_order_;
  done_ = false;
}

std::unique_ptr<PatternSource> CyclePatternStream::clone() const {
  return std::make_unique<CyclePatternStream>(*this);
}

Pattern CyclePatternStream::build(const std::vector<std::size_t>& set_order,
                                  const std::vector<std::size_t>& clear_order) const {
  std::vector<Mode> modes;
  modes.reserve(2 * width_);
  Mode m = Mode::zeros(width_);
  modes.push_back(m);
  for (std::size_t k = 0; k < width_; ++k) {
    m = m.with_bit(set_order[k], true);
    modes.push_back(m);
  }
  // The last clear returns to all-zeros, which is the head of the next cycle.
  for (std::size_t k = 0; k + 1 < width_; ++k) {
    m = m.with_bit(clear_order[k], false);
    modes.push_back(m);
  }
  return Pattern(std::move(modes));
}

std::optional<Pattern> CyclePatternStream::next() {
  if (done_) return std::nullopt;
  Pattern p = build(set_order_, clear_order_);
  if (!std::next_permutation(clear_order_.begin(), clear_order_.end())) {
    if (!std::next_permutation(set_order_.begin(), set_order_.end())) done_ = true;
  }
  return p;
}

std::uint64_t CyclePatternStream::count() const {
  std::uint64_t f = 1;
  for (std::size_t k = 2; k <= width_; ++k) f *= k;
  return f * f;
}

namespace {

std::vector<std::size_t> unrank_permutation(std::uint64_t rank, std::size_t n) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::uint64_t> fact(n + 1, 1);
  for (std::size_t k = 1; k <= n; ++k) fact[k] = fact[k - 1] * k;
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t k = n; k > 0; --k) {
    const auto idx = static_cast<std::size_t>(rank / fact[k - 1]);
    rank %= fact[k - 1];
    out.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return out;
}

} // namespace

Pattern CyclePatternStream::at(std::uint64_t index) const {
  if (index >= count()) throw InputError("cycle patterns: index out of range");
  std::uint64_t per = 1;
  for (std::size_t k = 2; k <= width_; ++k) per *= k;
  return build(unrank_permutation(index / per, width_), unrank_permutation(index % per, width_));
}

CyclePatternStream enumerate_cycle_patterns(int levels) { return CyclePatternStream(levels); }

BoundedLengthPatterns::BoundedLengthPatterns(std::vector<Mode> alphabet, std::size_t max_length)
    : alphabet_(std::move(alphabet)), max_length_(max_length) {
  if (alphabet_.empty()) throw InputError("pattern source: empty alphabet");
  reset();
}

void BoundedLengthPatterns::reset() { digits_.assign(1, 0); }

std::unique_ptr<PatternSource> BoundedLengthPatterns::clone() const {
  return std::make_unique<BoundedLengthPatterns>(*this);
}

std::optional<Pattern> BoundedLengthPatterns::next() {
  if (digits_.empty() || digits_.size() > max_length_) return std::nullopt;
  std::vector<Mode> modes;
  modes.reserve(digits_.size());
  for (auto d : digits_) modes.push_back(alphabet_[d]);
  // Odometer increment, last position fastest; overflow grows the length.
  std::size_t pos = digits_.size();
  while (pos > 0) {
    --pos;
    if (++digits_[pos] < alphabet_.size()) break;
    digits_[pos] = 0;
    if (pos == 0) digits_.assign(digits_.size() + 1, 0);
  }
  return Pattern(std::move(modes));
}

} // namespace fcsynth
