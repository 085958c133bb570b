#include <doctest.h>

#include <cmath>

#include "fbf/error.hpp"
#include "fbf/regularity.hpp"

using namespace fbf;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

std::vector<RectPoint> line(std::size_t n) {
  std::vector<RectPoint> g;
  for (std::size_t i = 0; i <= n; ++i) g.push_back(RectPoint{double(i) / double(n)});
  return g;
}

}  // namespace

TEST_CASE("power-law fit") {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.7));
  const auto fit = fit_power_law(x, y);
  CHECK(fit.slope == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.slope_se < 1e-10);

  const std::vector<double> one{1.0};
  CHECK(code_of([&] { fit_power_law(one, one); }) == ErrorCode::TooFewScales);
  const std::vector<double> same{0.5, 0.5};
  CHECK(code_of([&] { fit_power_law(same, same); }) == ErrorCode::TooFewScales);
  const std::vector<double> pos{1.0, 2.0};
  const std::vector<double> neg{1.0, -1.0};
  CHECK(code_of([&] { fit_power_law(pos, neg); }) == ErrorCode::OutOfRange);
}

TEST_CASE("geometric radii") {
  CHECK(geometric_radii(0.5, 3) == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
  CHECK(geometric_radii(1.0, 0).size() == 1);
  CHECK_THROWS_AS(geometric_radii(0.0, 3), Error);
}

TEST_CASE("pointwise exponent of deterministic paths") {
  const auto grid = line(1024);
  const auto lebesgue = ProductMeasure::lebesgue(1);
  const RectPoint t0{0.5};
  const auto radii = geometric_radii(0.25, 5);

  std::vector<double> linear, flat, cusp;
  for (const auto& p : grid) {
    linear.push_back(p.coords[0]);
    flat.push_back(2.0);
    cusp.push_back(std::pow(std::abs(p.coords[0] - 0.5), 0.4));
  }
  for (auto mode : {BallSampling::EqualResolution, BallSampling::AllPoints}) {
    CHECK(estimate_pointwise_exponent(grid, linear, t0, radii, lebesgue, mode).alpha_hat >= 0.9);
    CHECK(estimate_pointwise_exponent(grid, flat, t0, radii, lebesgue, mode).alpha_hat == 1.0);
    CHECK(estimate_pointwise_exponent(grid, cusp, t0, radii, lebesgue, mode).alpha_hat ==
          doctest::Approx(0.4).epsilon(1e-9));
  }

  const std::vector<double> single{0.25};
  CHECK(code_of([&] { estimate_pointwise_exponent(grid, linear, t0, single, lebesgue); }) == ErrorCode::TooFewScales);
  const std::vector<double> tiny{1e-5, 1e-6};
  CHECK(code_of([&] { estimate_pointwise_exponent(grid, linear, t0, tiny, lebesgue); }) == ErrorCode::EmptyBall);
  const std::vector<double> short_path{1.0, 2.0};
  CHECK(code_of([&] { estimate_pointwise_exponent(grid, short_path, t0, radii, lebesgue); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("local exponent from pair increments") {
  const auto grid = line(512);
  const auto lebesgue = ProductMeasure::lebesgue(1);
  std::vector<double> linear;
  for (const auto& p : grid) linear.push_back(3.0 * p.coords[0]);
  const auto radii = geometric_radii(0.25, 4);
  const auto e = estimate_local_exponent(grid, linear, RectPoint{0.5}, radii, lebesgue);
  CHECK(e.alpha_hat == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("empirical increment variance") {
  FieldSample s;
  s.points.resize(2);
  s.values.resize(4, 2);
  s.values << 1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0;
  const auto v = empirical_increment_variance(s, 0, 1);
  CHECK(v.estimate == doctest::Approx(5.0 / 3.0));
  CHECK(v.std_error > 0.0);
  CHECK_THROWS_AS(empirical_increment_variance(s, 0, 2), Error);
}

TEST_CASE("h-increments of the unit interval indicator") {
  const auto space = make_grid_space(ProductMeasure::lebesgue(1), 64);
  const FieldModel model(space, 8);
  const auto one = indicator_of_rect(space, RectPoint{1.0});
  const std::vector<double> deltas{0.125, 0.0078125};
  const auto fit = verify_h_increment_scaling(model, one, HurstParam(0.15), deltas);
  REQUIRE(fit.estimates.size() == 2);
  CHECK(fit.estimates[0] == doctest::Approx(0.0805866513846548878).epsilon(1e-7));
  CHECK(fit.estimates[1] == doctest::Approx(0.000616709880688158446).epsilon(1e-6));

  const auto mc = verify_h_increment_scaling(model, one, HurstParam(0.15), deltas, ScalingMode::MonteCarlo, 20000,
                                             SeededStream(2));
  REQUIRE(mc.std_errors.size() == 2);
  CHECK(std::abs(mc.estimates[0] - fit.estimates[0]) < 4.0 * mc.std_errors[0]);

  const std::vector<double> bad{0.5, 0.1};
  CHECK_THROWS_AS(verify_h_increment_scaling(model, one, HurstParam(0.15), bad), Error);
}

TEST_CASE("conditional variance") {
  const auto space = make_grid_space(ProductMeasure::lebesgue(1), 64);
  const FieldModel model(space, 16);
  const HurstParam h(0.3);
  const auto& basis = model.index_basis();
  const auto f = basis[5];
  CHECK(conditional_variance(model, h, f, {}) == doctest::Approx(cov_l2(h, f, f)).epsilon(1e-8));
  const std::vector<IndexFunction> self{f};
  CHECK(conditional_variance(model, h, f, self) < 1e-10);

  std::vector<IndexFunction> cond;
  double last = conditional_variance(model, h, f, cond);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (j == 5) continue;
    cond.push_back(basis[j]);
    const double v = conditional_variance(model, h, f, cond);
    CHECK(v <= last + 1e-12);
    last = v;
  }
  CHECK(last > 0.0);
}

TEST_CASE("local nondeterminism probe") {
  const auto space = make_grid_space(ProductMeasure::lebesgue(1), 128);
  const FieldModel model(space, 32);
  const auto f = indicator_of_rect(space, RectPoint{0.5});
  const auto radii = std::vector<double>{0.2, 0.1, 0.05, 0.025};
  const auto fit = lnd_scaling_probe(model, HurstParam(0.3), f, radii);
  for (std::size_t i = 1; i < fit.estimates.size(); ++i) CHECK(fit.estimates[i] <= fit.estimates[i - 1] + 1e-12);
  CHECK(fit.slope > 0.0);
}
