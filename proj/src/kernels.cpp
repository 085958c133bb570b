#include "fbf/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include "fbf/error.hpp"
#include "fbf/kernel_quadrature.hpp"

namespace fbf {

HurstParam::HurstParam(double h) : h_(h) {
  if (!(h > 0.0 && h <= 0.5)) fail(ErrorCode::OutOfRange, "Hurst index must lie in (0, 1/2]");
}

HurstParam::HurstParam(double h, double eta) : HurstParam(h) {
  if (!(eta > 0.0)) fail(ErrorCode::OutOfRange, "guard must be positive");
  if (h < eta || h > 0.5 - eta) fail(ErrorCode::OutOfRange, "Hurst index outside [eta, 1/2 - eta]");
  guard_ = eta;
}

double cov_fbm(double h, double s, double t) {
  if (!(h > 0.0 && h <= 1.0)) fail(ErrorCode::OutOfRange, "cov_fbm needs h in (0, 1]");
  if (s < 0.0 || t < 0.0) fail(ErrorCode::OutOfRange, "cov_fbm needs s, t >= 0");
  const double e = 2.0 * h;
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(s - t), e));
}

double cov_l2(const HurstParam& h, double nf, double ng, double dsq) {
  if (nf < 0.0 || ng < 0.0 || dsq < 0.0) fail(ErrorCode::OutOfRange, "cov_l2 needs nonnegative inputs");
  // Both-sided triangle check with a small relative slack for rounding.
  const double a = std::sqrt(nf);
  const double b = std::sqrt(ng);
  const double d = std::sqrt(dsq);
  const double slack = 1e-9 * (a + b) + 1e-300;
  if (d > a + b + slack || d < std::abs(a - b) - slack) {
    fail(ErrorCode::TriangleViolation, "inputs are not norms of an L2 pair");
  }
  const double e = 2.0 * h.value();
  return 0.5 * (std::pow(nf, e) + std::pow(ng, e) - std::pow(dsq, e));
}

double cov_l2(const HurstParam& h, const IndexFunction& f, const IndexFunction& g) {
  require_same_space(f, g);
  return cov_l2(h, norm_sq(f), norm_sq(g), dist_sq(f, g));
}

double log_factor(double x) {
  if (!(std::abs(x) < 1.0)) fail(ErrorCode::OutOfRange, "log_factor needs |x| < 1");
  if (x == 0.0) return 0.0;
  return std::max(-std::log(std::abs(x)), 1.0);
}

namespace {

using KernelKey = std::tuple<std::uint64_t, int, int, int, std::uint64_t, bool>;

std::mutex g_kernel_mutex;
std::map<KernelKey, std::shared_ptr<const VolterraKernel>> g_kernels;

KernelKey key_of(double h, const QuadratureSpec& q, bool calibrated) {
  return {std::bit_cast<std::uint64_t>(h), q.nodes, q.kernel_nodes, q.zero_levels,
          std::bit_cast<std::uint64_t>(q.tolerance), calibrated};
}

void check_h(double h) {
  if (!(h > 0.0 && h <= 0.5)) fail(ErrorCode::OutOfRange, "Hurst index must lie in (0, 1/2]");
}

// int_0^1 Ktilde(1, r)^2 dr for the kernel `k` with panel order `nodes`.
double unit_energy(const std::shared_ptr<const VolterraKernel>& k, int nodes) {
  QuadratureSpec q = k->quadrature();
  q.nodes = nodes;
  const std::vector<double> pts{1.0};
  const KernelTable table(std::make_shared<const KernelPanels>(pts, pts, q), *k);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  return bilinear(table, one, table, one)(0, 0);
}

}  // namespace

VolterraKernel::VolterraKernel(double h, double c, const QuadratureSpec& q) : h_(h), c_(c), q_(q) {
  if (h_ == 0.5) return;
  right_rule_ = gauss_jacobi(q_.kernel_nodes, h_ - 0.5, 0.0);
  left_rule_ = gauss_jacobi(q_.kernel_nodes, 0.0, -2.0 * h_);
  j0_ = head(0.5) + tail(0.5);
  origin_a_ = c_ * (0.5 - h_) * j0_;
}

std::shared_ptr<const VolterraKernel> VolterraKernel::uncalibrated(double h, const QuadratureSpec& q) {
  check_h(h);
  q.validate();
  const auto key = key_of(h, q, false);
  {
    std::lock_guard lock(g_kernel_mutex);
    if (auto it = g_kernels.find(key); it != g_kernels.end()) return it->second;
  }
  std::shared_ptr<const VolterraKernel> k(new VolterraKernel(h, 1.0, q));
  std::lock_guard lock(g_kernel_mutex);
  return g_kernels.emplace(key, k).first->second;
}

std::shared_ptr<const VolterraKernel> VolterraKernel::get(double h, const QuadratureSpec& q) {
  check_h(h);
  q.validate();
  const auto key = key_of(h, q, true);
  {
    std::lock_guard lock(g_kernel_mutex);
    if (auto it = g_kernels.find(key); it != g_kernels.end()) return it->second;
  }
  double c = 1.0;
  if (h < 0.5) {
    const auto raw = uncalibrated(h, q);
    const double fine = unit_energy(raw, q.nodes);
    const double coarse = unit_energy(raw, std::max(2, q.nodes / 2));
    if (!(fine > 0.0) || std::abs(fine - coarse) > q.tolerance * fine) {
      fail(ErrorCode::QuadratureFailure, "calibration integral did not converge");
    }
    c = 1.0 / std::sqrt(fine);
  }
  std::shared_ptr<const VolterraKernel> k(new VolterraKernel(h, c, q));
  std::lock_guard lock(g_kernel_mutex);
  return g_kernels.emplace(key, k).first->second;
}

// int_0^r x^{-2h} (1 - x)^{h-1/2} dx, r <= 1/2
double VolterraKernel::head(double r) const {
  const auto& rule = *left_rule_;
  const double half = 0.5 * r;
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double x = half * (1.0 + rule.nodes[k]);
    sum += rule.weights[k] * std::pow(1.0 - x, h_ - 0.5);
  }
  return std::pow(half, 1.0 - 2.0 * h_) * sum;
}

// int_r^1 x^{-2h} (1 - x)^{h-1/2} dx, r >= 1/2
double VolterraKernel::tail(double r) const {
  const auto& rule = *right_rule_;
  const double half = 0.5 * (1.0 - r);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double x = r + half * (1.0 + rule.nodes[k]);
    sum += rule.weights[k] * std::pow(x, -2.0 * h_);
  }
  return std::pow(half, h_ + 0.5) * sum;
}

double VolterraKernel::j(double r) const {
  if (!(r > 0.0 && r <= 1.0)) fail(ErrorCode::OutOfRange, "J needs r in (0, 1]");
  if (h_ == 0.5) return -std::log(r);
  if (r >= 0.5) return tail(r);
  return j0_ - head(r);
}

double VolterraKernel::inner_integral(double s, double t) const {
  if (!(s > 0.0 && s < t)) fail(ErrorCode::OutOfRange, "inner integral needs 0 < s < t");
  return std::pow(s, 2.0 * h_ - 1.0) * j(s / t);
}

double VolterraKernel::operator()(double t, double s) const {
  if (s >= t || s < 0.0) return 0.0;
  if (h_ == 0.5) return 1.0;
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  const double a = h_ - 0.5;
  return c_ * (std::pow(t * (t - s) / s, a) - a * std::pow(s, a) * j(s / t));
}

double VolterraKernel::regular_part(double t, double s) const {
  if (s >= t || s < 0.0) return 0.0;
  if (h_ == 0.5) return 1.0;
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  const double a = h_ - 0.5;
  return c_ * (std::pow(t / s, a) - a * std::pow(s, a) * std::pow(t - s, -a) * j(s / t));
}

double VolterraKernel::origin_b(double t) const {
  if (h_ == 0.5) return 1.0;
  return 0.5 * c_ * std::pow(t, 2.0 * h_ - 1.0);
}

double volterra_kernel(const HurstParam& h, double t, double s, const QuadratureSpec& q) {
  if (t < 0.0 || t > 1.0 || s < 0.0 || s > 1.0) fail(ErrorCode::OutOfRange, "kernel arguments must lie in [0, 1]");
  return (*VolterraKernel::get(h.value(), q))(t, s);
}

double calibrate_ch(const HurstParam& h, const QuadratureSpec& q) {
  return VolterraKernel::get(h.value(), q)->c();
}

Eigen::MatrixXd kernel_cross_gram(const HurstParam& h, const HurstParam& h2,
                                  std::span<const double> points, const QuadratureSpec& q) {
  for (double t : points) {
    if (!(t > 0.0 && t <= 1.0)) fail(ErrorCode::OutOfRange, "kernel points must lie in (0, 1]");
  }
  std::vector<double> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const auto panels = std::make_shared<const KernelPanels>(sorted, sorted, q);
  const auto k1 = VolterraKernel::get(h.value(), q);
  const auto k2 = VolterraKernel::get(h2.value(), q);
  const KernelTable t1(panels, *k1);
  const KernelTable t2(panels, *k2);

  // Selection matrix from sorted rows to the caller's order.
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sorted.size()), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), points[i]) - sorted.begin();
    sel(pos, i) = 1.0;
  }
  return bilinear(t1, sel, t2, sel);
}

double kernel_cross_inner(const HurstParam& h, const HurstParam& h2, double ti, double tj,
                          const QuadratureSpec& q) {
  const double pts[2] = {ti, tj};
  if (ti == tj) return kernel_cross_gram(h, h2, std::span<const double>(pts, 1), q)(0, 0);
  return kernel_cross_gram(h, h2, pts, q)(0, 1);
}

}  // namespace fbf
