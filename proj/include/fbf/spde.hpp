#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbf/kernels.hpp"
#include "fbf/regularity.hpp"
#include "fbf/rng.hpp"

namespace fbf {

// Dirichlet Laplacian on the unit square: eigenvalues pi^2 (m^2 + n^2) and
// eigenfunctions 2 sin(m pi x) sin(n pi y), m, n <= modes. The Green function
// is positive, so psi = G * phi solves -Laplace(psi) = phi.
class SpectralGreen {
 public:
  explicit SpectralGreen(int modes = 32);

  int modes() const { return modes_; }
  static double eigenvalue(int m, int n);
  static double eigenfunction(int m, int n, double x, double y);
  double operator()(double x, double y, double s, double t) const;

 private:
  int modes_;
};

struct TestFunction {
  std::function<double(double, double)> eval;
  double lo = 0.0;  // support inside [lo, hi]^2
  double hi = 1.0;
  std::string name;

  double operator()(double x, double y) const;
  // Values at the nodes i/n, (n + 1) x (n + 1).
  Eigen::MatrixXd tabulate(int n) const;

  static TestFunction eigenmode(int m, int n);
  // exp(-1 / (1 - |z - c|^2 / r^2)) inside the disc of radius r around (cx, cy).
  static TestFunction bump(double cx, double cy, double r);
};

// psi = G * phi at the nodes i/n; needs n >= 2 * modes.
Eigen::MatrixXd green_convolve(const SpectralGreen& g, const TestFunction& phi, int n);

// Negative five-point Laplacian of a node table at the interior nodes.
Eigen::MatrixXd neg_laplacian(const Eigen::MatrixXd& psi);

// Mixed second differences D(i, j) of psi over cell (i, j), attached to the
// upper corner (x_{i+1}, y_{j+1}).
Eigen::MatrixXd mixed_differences(const Eigen::MatrixXd& psi);

struct HurstPair {
  double h1 = 0.5;
  double h2 = 0.5;
};

// Phi(u, v) = sum_ij K_h1(x_{i+1}, u) K_h2(y_{j+1}, v) D(i, j), averaged over
// each grid cell: n x n table of cell averages.
Eigen::MatrixXd noise_integrand(const HurstPair& h, const Eigen::MatrixXd& psi, const QuadratureSpec& q = {});

// ||Phi||^2 = tr(D R_h2 D^T R_h1) with R on the upper corners.
double mild_solution_var(const HurstPair& h, const Eigen::MatrixXd& psi);
double mild_solution_var(const HurstPair& h, const TestFunction& phi, const SpectralGreen& g, int n);

// ||Phi_a - Phi_b||^2 through the cross Gram matrices of the two kernels.
double mild_solution_increment(const HurstPair& a, const HurstPair& b, const Eigen::MatrixXd& psi,
                               const QuadratureSpec& q = {});

// n x pairs: <u, phi> = sum Phi(a, b) dW(a, b) with one shared white noise per path.
Eigen::MatrixXd sample_mild_solution(std::span<const HurstPair> pairs, const Eigen::MatrixXd& psi, std::size_t n,
                                     const SeededStream& stream, const QuadratureSpec& q = {});

enum class SpdeDirection { Both, First, Second };

// Slope of log(||Phi_h - Phi_{h + delta}||^2 / L(delta)^2) against log delta.
ScalingFit verify_spde_h_continuity(const Eigen::MatrixXd& psi, const HurstPair& base, std::span<const double> deltas,
                                    SpdeDirection direction = SpdeDirection::Both, const QuadratureSpec& q = {});

}  // namespace fbf
