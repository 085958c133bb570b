#include "fbf/quadrature.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "fbf/error.hpp"

namespace fbf {

namespace {

GaussRule golub_welsch(int n, double alpha, double beta) {
  if (n < 1) fail(ErrorCode::OutOfRange, "quadrature order must be positive");
  if (!(alpha > -1.0) || !(beta > -1.0)) {
    fail(ErrorCode::OutOfRange, "Jacobi exponents must exceed -1");
  }
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  diag(0) = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    diag(k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    const double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
    const double den = s * s * (s + 1.0) * (s - 1.0);
    sub(k - 1) = std::sqrt(num / den);
  }

  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::QuadratureFailure, "Golub-Welsch eigen solve failed");
  }
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = solver.eigenvalues()(k);
    const double v = solver.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v * v;
  }
  return rule;
}

using RuleKey = std::tuple<int, std::uint64_t, std::uint64_t>;

std::mutex g_rule_mutex;
std::map<RuleKey, std::shared_ptr<const GaussRule>> g_rules;
std::map<std::pair<int, std::uint64_t>, std::shared_ptr<const Eigen::MatrixXd>> g_product_moments;
std::map<std::pair<int, std::uint64_t>, std::shared_ptr<const Eigen::VectorXd>> g_moments;

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

}  // namespace

std::shared_ptr<const GaussRule> gauss_jacobi(int n, double alpha, double beta) {
  const RuleKey key{n, bits(alpha), bits(beta)};
  {
    std::lock_guard lock(g_rule_mutex);
    if (auto it = g_rules.find(key); it != g_rules.end()) return it->second;
  }
  auto rule = std::make_shared<const GaussRule>(golub_welsch(n, alpha, beta));
  std::lock_guard lock(g_rule_mutex);
  return g_rules.emplace(key, rule).first->second;
}

std::shared_ptr<const GaussRule> gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

Eigen::MatrixXd lagrange_matrix(std::span<const double> from, std::span<const double> to) {
  const std::size_t n = from.size();
  std::vector<double> bary(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != k) bary[k] *= 2.0 * (from[k] - from[j]);
    }
    bary[k] = 1.0 / bary[k];
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(to.size()),
                                              static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < to.size(); ++i) {
    const double x = to[i];
    bool exact = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (x == from[k]) {
        out(i, k) = 1.0;
        exact = true;
        break;
      }
    }
    if (exact) continue;
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double term = bary[k] / (x - from[k]);
      out(i, k) = term;
      denom += term;
    }
    out.row(i) /= denom;
  }
  return out;
}

std::shared_ptr<const Eigen::MatrixXd> singular_product_moments(int n, double gamma) {
  const auto key = std::make_pair(n, bits(gamma));
  {
    std::lock_guard lock(g_rule_mutex);
    if (auto it = g_product_moments.find(key); it != g_product_moments.end()) return it->second;
  }
  const auto legendre = gauss_legendre(n);
  const auto jacobi = gauss_jacobi(n, gamma, 0.0);
  const Eigen::MatrixXd interp = lagrange_matrix(legendre->nodes, jacobi->nodes);
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(jacobi->weights.data(), n);
  auto moments =
      std::make_shared<const Eigen::MatrixXd>(interp.transpose() * w.asDiagonal() * interp);
  std::lock_guard lock(g_rule_mutex);
  return g_product_moments.emplace(key, moments).first->second;
}

std::shared_ptr<const Eigen::VectorXd> singular_moments(int n, double gamma) {
  const auto key = std::make_pair(n, bits(gamma));
  {
    std::lock_guard lock(g_rule_mutex);
    if (auto it = g_moments.find(key); it != g_moments.end()) return it->second;
  }
  const auto legendre = gauss_legendre(n);
  const auto jacobi = gauss_jacobi(n, gamma, 0.0);
  const Eigen::MatrixXd interp = lagrange_matrix(legendre->nodes, jacobi->nodes);
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(jacobi->weights.data(), n);
  auto moments = std::make_shared<const Eigen::VectorXd>(interp.transpose() * w);
  std::lock_guard lock(g_rule_mutex);
  return g_moments.emplace(key, moments).first->second;
}

void QuadratureSpec::validate() const {
  if (nodes < 2) fail(ErrorCode::InvalidConfig, "quadrature needs at least 2 nodes per panel");
  if (kernel_nodes < 2) fail(ErrorCode::InvalidConfig, "kernel quadrature needs at least 2 nodes");
  if (!(tolerance > 0.0)) fail(ErrorCode::InvalidConfig, "quadrature tolerance must be positive");
  if (zero_levels < 1) fail(ErrorCode::InvalidConfig, "zero_levels must be positive");
}

}  // namespace fbf
