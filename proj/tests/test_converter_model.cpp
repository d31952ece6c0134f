#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fcsynth/converter_model.hpp"
#include "fcsynth/errors.hpp"

using namespace fcsynth;
using namespace fcsynth::converter;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<double> distinct_outputs(const ConverterParams& p) {
  const Vector v = ideal_setpoints(p);
  std::vector<double> out;
  for (std::uint32_t b = 0; b < (1U << (p.levels - 1)); ++b) {
    const double vo = output_voltage(p, Mode(static_cast<std::size_t>(p.levels - 1), b), v);
    if (std::none_of(out.begin(), out.end(), [&](double x) { return std::abs(x - vo) < 1e-9; }))
      out.push_back(vo);
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

TEST_CASE("5-level system") {
  const auto p = paper_5level();
  CHECK(p.cycle_time() == doctest::Approx(0.02));
  const auto sys = build_system(p);
  CHECK(sys.modes().size() == 16);
  CHECK(sys.dim() == 4);

  const auto d = mode_dynamics(p, Mode::parse("0000"));
  for (int j = 0; j < 3; ++j) CHECK(d.A(j, j) == doctest::Approx(-1.0 / 24.0));
  CHECK(d.A.row(3) == vec({0, 0, 0, -250}).transpose());
  CHECK(d.b == vec({0, 0, 0, -500}));

  // 1000: S_1 on; v_1 couples into the current row with -1/L, current charges C_1.
  const auto e = mode_dynamics(p, Mode::parse("1000"));
  CHECK(e.A(3, 0) == doctest::Approx(-5.0));
  CHECK(e.A(0, 3) == doctest::Approx(1.0 / 0.0012));
  CHECK(e.b[3] == doctest::Approx(500.0));
}

TEST_CASE("7-level system") {
  const auto p = paper_7level();
  const auto sys = build_system(p);
  CHECK(sys.modes().size() == 64);
  CHECK(sys.dim() == 6);
  CHECK(p.cycle_time() == doctest::Approx(0.02));
  CHECK(ideal_setpoints(p) == vec({500, 400, 300, 200, 100}));
}

TEST_CASE("output voltage") {
  const auto p = paper_5level();
  const Vector v = ideal_setpoints(p);
  CHECK(v == vec({150, 100, 50}));
  CHECK(output_voltage(p, Mode::parse("0000"), v) == doctest::Approx(-100));
  CHECK(output_voltage(p, Mode::parse("1111"), v) == doctest::Approx(100));
  CHECK(output_voltage(p, Mode::parse("1000"), v) == doctest::Approx(-50));
  CHECK_THROWS_AS(output_voltage(p, Mode::parse("100"), v), InputError);

  auto skew = p;
  skew.v_high = 120.0;
  skew.v_low = 80.0;
  CHECK(output_voltage(skew, Mode::parse("1111"), v) == doctest::Approx(120));
  CHECK(output_voltage(skew, Mode::parse("0000"), v) == doctest::Approx(-80));
  CHECK(mode_dynamics(skew, Mode::parse("0000")).b[3] == doctest::Approx(-400));
}

TEST_CASE("setpoints") {
  CHECK(ideal_setpoints(defaults_for_levels(3)) == vec({100}));
  const auto levels = ideal_levels(paper_5level());
  CHECK(levels == std::vector<double>{-100, -50, 0, 50, 100});
}

TEST_CASE("default problem") {
  const auto p = paper_5level();
  const auto prob = default_problem(p);
  CHECK(prob.control == Box(vec({145, 95, 45}), vec({155, 105, 55})));
  CHECK(prob.safe == Box(vec({144, 94, 44}), vec({156, 106, 56})));
  CHECK(prob.controlled == DimSet{0, 1, 2});
  CHECK(prob.max_length == 8);
  CHECK(prob.depth == 1);
  REQUIRE(prob.initial_slice.size() == 1);
  CHECK(prob.initial_slice[0] == Interval::point(0.0));

  const auto p7 = default_problem(paper_7level());
  CHECK(p7.control == Box(vec({495, 395, 295, 195, 95}), vec({505, 405, 305, 205, 105})));
  CHECK(p7.max_length == 12);

  auto zero = p;
  zero.tol = 0;
  CHECK_THROWS_AS(default_problem(zero), InputError);
}

TEST_CASE("parameter validation") {
  auto p = paper_5level();
  p.levels = 4;
  CHECK_THROWS_AS(p.check(), InputError);
  p = paper_5level();
  p.l_load = 0;
  CHECK_THROWS_AS(build_system(p), InputError);
  p = paper_5level();
  p.cap = {0.001, 0.002};
  CHECK_THROWS_AS(p.check(), InputError);
  p.cap = {0.001, 0.002, 0.003};
  CHECK_NOTHROW(p.check());
  CHECK(mode_dynamics(p, Mode::parse("0000")).A(2, 2) == doctest::Approx(-1.0 / 60.0));
}

TEST_CASE("property: skew pairing of capacitor and current couplings") {
  for (int levels : {3, 5, 7}) {
    auto p = defaults_for_levels(levels);
    p.cap = {};
    for (int j = 0; j < levels - 2; ++j) p.cap.push_back(0.001 * (j + 1));
    const auto n = static_cast<Eigen::Index>(levels - 1);
    for (std::uint32_t b = 0; b < (1U << (levels - 1)); ++b) {
      const auto d = mode_dynamics(p, Mode(static_cast<std::size_t>(levels - 1), b));
      for (Eigen::Index j = 0; j + 1 < n; ++j)
        CHECK(d.A(j, n - 1) * p.capacitance(static_cast<std::size_t>(j)) ==
              doctest::Approx(-d.A(n - 1, j) * p.l_load));
      for (Eigen::Index j = 0; j + 1 < n; ++j) CHECK(d.b[j] == 0.0);
    }
  }
}

TEST_CASE("property: evenly spaced output levels") {
  for (int levels : {3, 5, 7, 9}) {
    const auto p = defaults_for_levels(levels);
    const auto out = distinct_outputs(p);
    REQUIRE(out.size() == static_cast<std::size_t>(levels));
    const double step = 2 * p.v_input / (levels - 1);
    for (std::size_t k = 0; k < out.size(); ++k)
      CHECK(out[k] == doctest::Approx(-p.v_input + step * static_cast<double>(k)));
    const Vector v = ideal_setpoints(p);
    const auto w = static_cast<std::size_t>(levels - 1);
    CHECK(output_voltage(p, Mode::zeros(w), v) ==
          doctest::Approx(-output_voltage(p, Mode::ones(w), v)));
  }
}

TEST_CASE("output function matches the formula") {
  const auto p = paper_5level();
  const auto f = output_function(p);
  const Vector x = vec({150, 100, 50, 2.0});
  CHECK(f(Mode::parse("0110"), x) == doctest::Approx(output_voltage(p, Mode::parse("0110"), x.head(3))));
}
