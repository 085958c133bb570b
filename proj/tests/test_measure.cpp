#include <doctest.h>

#include <cmath>
#include <random>

#include "fbf/error.hpp"
#include "fbf/measure.hpp"

using namespace fbf;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("discrete spaces validate their weights") {
  const std::vector<double> atoms{0.25, 0.75};
  const std::vector<double> w{0.5, 0.5};
  const auto space = make_discrete_space(atoms, w);
  CHECK(space->size() == 2);
  CHECK(space->dim() == 1);
  CHECK(space->total_mass() == doctest::Approx(1.0));

  const std::vector<double> neg{-1.0, 2.0};
  CHECK(code_of([&] { make_discrete_space(atoms, neg); }) == ErrorCode::NegativeWeight);
  const std::vector<double> zero{0.0, 0.0};
  CHECK(code_of([&] { make_discrete_space(atoms, zero); }) == ErrorCode::ZeroMeasure);
  const std::vector<double> short_w{1.0};
  CHECK(code_of([&] { make_discrete_space(atoms, short_w); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("grid spaces carry product Lebesgue cell masses") {
  for (std::size_t d : {1u, 2u, 3u}) {
    const auto space = make_grid_space(ProductMeasure::lebesgue(d), 8);
    double total = 0.0;
    for (double w : space->weights()) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(space->size() == static_cast<std::size_t>(std::pow(8, d)));
  }
}

TEST_CASE("norms and distances of indicators") {
  const auto space = make_grid_space(ProductMeasure::lebesgue(2), 64);
  CHECK(norm_sq(IndexFunction::zero(space)) == 0.0);
  CHECK(norm_sq(IndexFunction::constant(space, 1.0)) == doctest::Approx(1.0));

  const auto q = indicator_of_rect(space, RectPoint{0.5, 0.5});
  CHECK(norm_sq(q) == doctest::Approx(0.25).epsilon(1e-12));
  const auto full = indicator_of_rect(space, RectPoint{1.0, 1.0});
  CHECK(dist_sq(full, q) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(dist_sq(q, q) == 0.0);

  // Disjoint sets: |1_A - 1_B|^2 = 1_{A u B}.
  const auto left = indicator_of_set(space, [](std::span<const double> x) { return x[0] < 0.25; });
  const auto right = indicator_of_set(space, [](std::span<const double> x) { return x[0] > 0.5; });
  CHECK(dist_sq(left, right) == doctest::Approx(norm_sq(left) + norm_sq(right)));
  CHECK(inner(left, right) == 0.0);
}

TEST_CASE("indicator corners follow the cell-centre convention") {
  const auto space = make_grid_space(ProductMeasure::lebesgue(2), 16);
  const auto all = indicator_of_rect(space, RectPoint{1.0, 1.0});
  for (double v : all.values()) CHECK(v == 1.0);
  const auto none = indicator_of_rect(space, RectPoint{0.0, 0.0});
  for (double v : none.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(indicator_of_rect(space, RectPoint{0.5}), Error);
}

TEST_CASE("rectangle measures and symmetric differences") {
  const auto leb2 = ProductMeasure::lebesgue(2);
  CHECK(rect_measure(leb2, RectPoint{0.5, 0.5}) == doctest::Approx(0.25));
  CHECK(rect_measure(leb2, RectPoint{0.0, 0.7}) == 0.0);
  CHECK(rect_symdiff(leb2, RectPoint{0.5, 0.5}, RectPoint{1.0, 1.0}) == doctest::Approx(0.75));
  CHECK(rect_symdiff(leb2, RectPoint{0.3, 0.6}, RectPoint{0.3, 0.6}) == 0.0);
  CHECK(rect_symdiff(ProductMeasure::lebesgue(1), RectPoint{0.3}, RectPoint{0.7}) == doctest::Approx(0.4));

  // Any probability density gives total mass 1 at the far corner.
  ProductMeasure dens;
  dens.dim = 2;
  AxisDensity axis({0.0, 0.5, 1.0}, {0.5, 1.5, 0.5});
  const double mass = axis.cumulative(1.0);
  AxisDensity normalized({0.0, 0.5, 1.0}, {0.5 / mass, 1.5 / mass, 0.5 / mass});
  dens.axes = {normalized, normalized};
  CHECK(rect_measure(dens, RectPoint{1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("closed forms agree with grid evaluation") {
  const auto leb = ProductMeasure::lebesgue(2);
  const std::size_t n = 128;
  const auto space = make_grid_space(leb, n);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cell = 1.0 / static_cast<double>(n);
  for (int trial = 0; trial < 25; ++trial) {
    const RectPoint s{u(gen), u(gen)};
    const RectPoint t{u(gen), u(gen)};
    CHECK(std::abs(norm_sq(indicator_of_rect(space, t)) - rect_measure(leb, t)) <= 2.0 * cell);
    // Grid error bounded by the cells crossed by the two boundaries.
    const double grid = dist_sq(indicator_of_rect(space, s), indicator_of_rect(space, t));
    CHECK(std::abs(grid - rect_symdiff(leb, s, t)) <= 4.0 * cell);
  }
}

TEST_CASE("dist_sq is a squared metric and symdiff is monotone under nesting") {
  const auto space = make_grid_space(ProductMeasure::lebesgue(1), 200);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> z;
  auto random_fn = [&] {
    std::vector<double> v(space->size());
    for (auto& x : v) x = z(gen);
    return IndexFunction(space, v);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_fn();
    const auto g = random_fn();
    const auto h = random_fn();
    CHECK(dist_sq(f, g) == doctest::Approx(dist_sq(g, f)));
    CHECK(std::sqrt(dist_sq(f, h)) <= std::sqrt(dist_sq(f, g)) + std::sqrt(dist_sq(g, h)) + 1e-12);
  }
  const auto leb = ProductMeasure::lebesgue(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(2), m(2), t(2);
    for (int a = 0; a < 2; ++a) {
      std::array<double, 3> x{u(gen), u(gen), u(gen)};
      std::sort(x.begin(), x.end());
      s[a] = x[0];
      m[a] = x[1];
      t[a] = x[2];
    }
    CHECK(rect_symdiff(leb, RectPoint(s), RectPoint(m)) <= rect_symdiff(leb, RectPoint(s), RectPoint(t)) + 1e-15);
  }
}

TEST_CASE("zero-weight atoms are ignored by the norm") {
  const std::vector<double> atoms{0.1, 0.5, 0.9};
  const std::vector<double> w{0.5, 0.0, 0.5};
  const auto space = make_discrete_space(atoms, w);
  const IndexFunction f(space, {0.0, 7.0, 0.0});
  CHECK(norm_sq(f) == 0.0);
  CHECK_THROWS_AS(IndexFunction(space, {1.0, 2.0}), Error);
}
