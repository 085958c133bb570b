#include <doctest.h>

#include <cmath>

#include "fbf/entropy.hpp"
#include "fbf/error.hpp"

using namespace fbf;

namespace {

MetricSample unit_line(std::size_t n) {
  MetricSample s;
  s.size = n + 1;
  s.dist = [n](std::size_t i, std::size_t j) { return std::abs(double(i) - double(j)) / double(n); };
  s.description = "line";
  s.resolution = 1.0 / double(n);
  return s;
}

}  // namespace

TEST_CASE("insertion radii") {
  const auto r = insertion_radii(unit_line(4));
  REQUIRE(r.size() == 5);
  CHECK(std::isinf(r[0]));
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 0.5);
  CHECK(r[3] == 0.25);
  CHECK(r[4] == 0.25);
}

TEST_CASE("covering bounds bracket the interval covering number") {
  const auto line = unit_line(1024);
  for (double eps : {0.3, 0.1, 0.05, 0.01}) {
    const auto b = covering_number(line, eps);
    // A ball holds 2 floor(1024 eps) + 1 consecutive points; tiling them is optimal.
    const double exact = std::ceil(1025.0 / (2.0 * std::floor(1024.0 * eps) + 1.0));
    CHECK(b.lower <= exact);
    CHECK(b.upper >= exact);
    CHECK(b.upper <= 2.0 * exact + 1.0);
  }
  CHECK(covering_number(line, 1.0).upper == 1);
  CHECK(covering_number(line, 5.0).lower == 1);
  CHECK_THROWS_AS(covering_number(line, 0.0), Error);
}

TEST_CASE("covering of a square grid") {
  MetricSample sq;
  sq.size = 32 * 32;
  sq.dist = [](std::size_t p, std::size_t q) {
    const double dx = std::abs(double(p / 32) - double(q / 32)) / 31.0;
    const double dy = std::abs(double(p % 32) - double(q % 32)) / 31.0;
    return std::max(dx, dy);
  };
  const auto b = covering_number(sq, 0.25);
  // Three sup-norm balls of radius 0.25 per axis suffice on 32 points, two do not quite.
  CHECK(b.lower <= 9);
  CHECK(b.upper >= 4);
}

TEST_CASE("entropy profiles") {
  const auto line = unit_line(256);
  const std::vector<double> eps{0.5, 0.1, 0.01, 0.001};
  const auto p = entropy_profile(line, eps);
  CHECK(p.epsilons == eps);
  for (std::size_t k = 0; k < eps.size(); ++k) CHECK(p.lower[k] <= p.upper[k]);
  for (std::size_t k = 1; k < eps.size(); ++k) CHECK(p.upper[k] >= p.upper[k - 1]);
  CHECK(p.trusted == std::vector<bool>{true, true, true, false});
  const std::vector<double> increasing{0.1, 0.5};
  CHECK_THROWS_AS(entropy_profile(line, increasing), Error);
}

TEST_CASE("Dudley integral verdicts") {
  std::vector<double> eps;
  for (int k = 0; k < 12; ++k) eps.push_back(std::pow(2.0, -k));
  auto power = [&](double gamma) {
    std::vector<double> h;
    for (double e : eps) h.push_back(std::pow(e, -gamma));
    return dudley_integral(eps, h);
  };
  const auto one = power(1.0);
  CHECK(one.verdict == DudleyVerdict::Converges);
  CHECK(one.exponent == doctest::Approx(1.0));
  // int_0^1 eps^{-1/2} = 2, split between the trapezoid and the tail.
  CHECK(one.value + one.tail == doctest::Approx(2.0).epsilon(0.05));
  CHECK(power(2.0).verdict == DudleyVerdict::Diverges);
  CHECK(power(2.5).verdict == DudleyVerdict::Diverges);
  CHECK(std::isinf(power(2.0).tail));

  std::vector<double> logs;
  for (double e : eps) logs.push_back(std::log(1.0 / e) + 1.0);
  CHECK(dudley_integral(eps, logs).verdict == DudleyVerdict::Converges);

  const std::vector<double> few{1.0, 0.5, 0.25};
  CHECK_THROWS_AS(dudley_integral(few, few), Error);

  const auto line = unit_line(1024);
  const std::vector<double> le{0.5, 0.25, 0.1, 0.05, 0.02, 0.01};
  CHECK(dudley_integral(entropy_profile(line, le)).verdict == DudleyVerdict::Converges);
}

TEST_CASE("product entropy") {
  const auto a = unit_line(20);
  const auto b = unit_line(30);
  const auto ab = product_metric(a, b);
  CHECK(ab.size == 21 * 31);
  CHECK(ab.dist(0, 21 * 31 - 1) == 1.0);
  CHECK(ab.dist(1, 31) == doctest::Approx(1.0 / 20.0));
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  const auto report = product_entropy_check(entropy_profile(a, eps), entropy_profile(b, eps), entropy_profile(ab, eps));
  CHECK(report.holds);
  const std::vector<double> other{0.4, 0.2, 0.1, 0.04};
  CHECK_THROWS_AS(product_entropy_check(entropy_profile(a, eps), entropy_profile(b, eps), entropy_profile(ab, other)),
                  Error);
}

TEST_CASE("small-ball probabilities") {
  Eigen::VectorXd sups(4);
  sups << 0.1, 0.2, 0.3, 0.4;
  const std::vector<double> eps{0.05, 0.2, 0.35, 1.0};
  const auto pts = small_ball_from_sups(sups, eps);
  CHECK(pts[0].hits == 0);
  CHECK(pts[1].hits == 2);
  CHECK(pts[2].hits == 3);
  CHECK(pts[3].p_hat == 1.0);
  for (const auto& p : pts) {
    CHECK(p.lo <= p.p_hat);
    CHECK(p.hi >= p.p_hat);
  }
  const std::vector<double> tiny{0.01};
  CHECK(([&] {
    try {
      small_ball_from_sups(sups, tiny);
    } catch (const Error& e) {
      return e.code() == ErrorCode::AllZeroHits;
    }
    return false;
  })());
}

TEST_CASE("small-ball slope recovers a Frechet tail") {
  // P(S <= e) = exp(-e^{-3}) exactly, so -log P = e^{-3}.
  const double gamma = 3.0;
  SupSource frechet = [gamma](std::size_t n, const SeededStream& stream) {
    SeededStream s = stream;
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = std::pow(-std::log(s.uniform()), -1.0 / gamma);
    return v;
  };
  const std::vector<double> eps{1.5, 1.2, 1.0, 0.8, 0.7, 0.6, 0.5};
  const auto pts = small_ball_mc(frechet, eps, 100000, SeededStream(21));
  const auto fit = small_ball_slope(pts);
  CHECK(fit.levels == 7);
  CHECK(fit.slope == doctest::Approx(gamma).epsilon(0.05));
}
