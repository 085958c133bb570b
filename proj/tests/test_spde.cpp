#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fbf/error.hpp"
#include "fbf/spde.hpp"

using namespace fbf;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd psi11(int n) { return green_convolve(SpectralGreen(16), TestFunction::eigenmode(1, 1), n); }

}  // namespace

TEST_CASE("spectral Green function") {
  const SpectralGreen g(24);
  CHECK(SpectralGreen::eigenvalue(1, 2) == doctest::Approx(5.0 * kPi * kPi));
  CHECK(g(0.3, 0.4, 0.6, 0.2) == doctest::Approx(g(0.6, 0.2, 0.3, 0.4)));
  CHECK(g(0.3, 0.4, 0.6, 0.2) > 0.0);
  CHECK(g(0.0, 0.4, 0.6, 0.2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(SpectralGreen(0), Error);
}

TEST_CASE("Green convolution of an eigenmode") {
  const int n = 64;
  const Eigen::MatrixXd psi = psi11(n);
  const Eigen::MatrixXd phi = TestFunction::eigenmode(1, 1).tabulate(n);
  CHECK((psi - phi / (2.0 * kPi * kPi)).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd lap = neg_laplacian(psi);
  const Eigen::MatrixXd inner = phi.block(1, 1, n - 1, n - 1);
  CHECK((lap - inner).cwiseAbs().maxCoeff() < 1e-3 * phi.cwiseAbs().maxCoeff());

  CHECK_THROWS_AS(green_convolve(SpectralGreen(40), TestFunction::eigenmode(1, 1), 64), Error);
}

TEST_CASE("Green convolution of a bump solves the Poisson problem") {
  const int n = 128;
  const auto bump = TestFunction::bump(0.5, 0.5, 0.3);
  const Eigen::MatrixXd psi = green_convolve(SpectralGreen(48), bump, n);
  const Eigen::MatrixXd phi = bump.tabulate(n);
  const Eigen::MatrixXd lap = neg_laplacian(psi);
  CHECK((lap - phi.block(1, 1, n - 1, n - 1)).cwiseAbs().maxCoeff() < 0.02 * phi.maxCoeff());
  CHECK(psi.minCoeff() >= -1e-12);
  CHECK_THROWS_AS(TestFunction::bump(0.5, 0.5, 0.6), Error);
}

TEST_CASE("mixed differences telescope") {
  const Eigen::MatrixXd psi = psi11(32);
  const Eigen::MatrixXd d = mixed_differences(psi);
  CHECK(d.rows() == 32);
  // Summing D over the upper-right block gives psi back at its lower corner.
  CHECK(d.bottomRightCorner(20, 20).sum() == doctest::Approx(psi(12, 12)).epsilon(1e-12));
}

TEST_CASE("Brownian sheet case") {
  const int n = 64;
  const Eigen::MatrixXd psi = psi11(n);
  const HurstPair half{0.5, 0.5};
  CHECK(mild_solution_var(half, psi) == doctest::Approx(1.0 / (4.0 * std::pow(kPi, 4))).epsilon(1e-10));
  const Eigen::MatrixXd phi = noise_integrand(half, psi);
  CHECK((phi - psi.topLeftCorner(n, n)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mild solution variance and samples") {
  const int n = 32;
  const Eigen::MatrixXd psi = psi11(n);
  const HurstPair a{0.3, 0.3};
  const HurstPair b{0.35, 0.25};
  const double va = mild_solution_var(a, psi);
  CHECK(va > 0.0);
  CHECK(mild_solution_var(a, TestFunction::eigenmode(1, 1), SpectralGreen(16), n) == doctest::Approx(va));
  // The cell-averaged integrand carries at most the exact variance.
  const Eigen::MatrixXd phi = noise_integrand(a, psi);
  CHECK(phi.squaredNorm() / double(n * n) <= va * (1.0 + 1e-9));
  CHECK(phi.squaredNorm() / double(n * n) >= 0.9 * va);

  CHECK(mild_solution_increment(a, a, psi) == doctest::Approx(0.0).epsilon(1e-12));
  const double inc = mild_solution_increment(a, b, psi);
  CHECK(inc > 0.0);

  const std::vector<HurstPair> pairs{a, b};
  const std::size_t paths = 20000;
  const Eigen::MatrixXd x = sample_mild_solution(pairs, psi, paths, SeededStream(31));
  const double var_a = x.col(0).squaredNorm() / double(paths);
  const Eigen::VectorXd diff = x.col(0) - x.col(1);
  const double var_d = diff.squaredNorm() / double(paths);
  // Paths use the cell-averaged integrands, so compare with their norms.
  const double pa = phi.squaredNorm() / double(n * n);
  const double pd = (phi - noise_integrand(b, psi)).squaredNorm() / double(n * n);
  CHECK(std::abs(var_a - pa) < 4.0 * pa * std::sqrt(2.0 / double(paths)));
  CHECK(std::abs(var_d - pd) < 4.0 * pd * std::sqrt(2.0 / double(paths)));
}

TEST_CASE("h-continuity fit of the mild solution") {
  const Eigen::MatrixXd psi = psi11(32);
  const std::vector<double> deltas{0.25, 0.125, 0.0625};
  const auto fit = verify_spde_h_continuity(psi, HurstPair{0.25, 0.25}, deltas);
  REQUIRE(fit.estimates.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) CHECK(fit.estimates[i] < fit.estimates[i - 1]);
  CHECK(fit.slope > 1.0);
  CHECK(verify_spde_h_continuity(psi, HurstPair{0.25, 0.25}, deltas, SpdeDirection::First).slope > 1.0);
  const std::vector<double> bad{0.3, 0.1};
  CHECK_THROWS_AS(verify_spde_h_continuity(psi, HurstPair{0.25, 0.25}, bad), Error);
}
