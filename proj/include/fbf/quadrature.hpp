#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

namespace fbf {

// Nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss-Jacobi rule for the weight (1 - x)^alpha (1 + x)^beta, alpha, beta > -1,
// computed with the Golub-Welsch eigenvalue method. Rules are cached per
// (n, alpha, beta) and shared between threads.
std::shared_ptr<const GaussRule> gauss_jacobi(int n, double alpha, double beta);
std::shared_ptr<const GaussRule> gauss_legendre(int n);

// Barycentric Lagrange interpolation matrix: row i holds the weights that map
// values at `from` to the interpolant evaluated at to[i].
Eigen::MatrixXd lagrange_matrix(std::span<const double> from, std::span<const double> to);

// Moments of products of Lagrange cardinal functions over the Gauss-Legendre
// nodes of order n against the weight (1 - x)^gamma on [-1, 1]:
//   G(k, l) = int (1 - x)^gamma l_k(x) l_l(x) dx.
// Used to integrate (b - r)^gamma f(r) g(r) when f and g are known at the
// Legendre nodes of the panel. Cached per (n, gamma).
std::shared_ptr<const Eigen::MatrixXd> singular_product_moments(int n, double gamma);

// int (1 - x)^gamma l_k(x) dx for the Legendre cardinal functions.
std::shared_ptr<const Eigen::VectorXd> singular_moments(int n, double gamma);

// Discretization settings for the Volterra-kernel integrals.
struct QuadratureSpec {
  int nodes = 64;          // Gauss nodes per panel
  int kernel_nodes = 32;   // Gauss-Jacobi nodes for the inner kernel integral
  double tolerance = 1e-8; // target relative accuracy, checked by calibration
  int zero_levels = 40;    // geometric refinement levels toward r = 0

  void validate() const;
};

}  // namespace fbf
