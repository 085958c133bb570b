#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fbf/measure.hpp"
#include "fbf/quadrature.hpp"

namespace fbf {

// Hurst index h in (0, 1/2], optionally restricted to [eta, 1/2 - eta].
class HurstParam {
 public:
  explicit HurstParam(double h);
  HurstParam(double h, double eta);

  double value() const { return h_; }
  std::optional<double> guard() const { return guard_; }
  bool is_half() const { return h_ == 0.5; }

  friend bool operator==(const HurstParam&, const HurstParam&) = default;

 private:
  double h_;
  std::optional<double> guard_;
};

// R_h(s, t) = (s^{2h} + t^{2h} - |s - t|^{2h}) / 2, valid for h in (0, 1].
double cov_fbm(double h, double s, double t);

// k_h expressed through nf = m(f^2), ng = m(g^2), dsq = m(|f-g|^2).
double cov_l2(const HurstParam& h, double nf, double ng, double dsq);
double cov_l2(const HurstParam& h, const IndexFunction& f, const IndexFunction& g);

// L(x) = max(log(1/|x|), 1) for x != 0, L(0) = 0; |x| < 1.
double log_factor(double x);

// Volterra kernel K_h(t, s) of the fractional Brownian motion with its
// normalizing constant. Instances are cached per (h, quadrature settings).
class VolterraKernel {
 public:
  static std::shared_ptr<const VolterraKernel> get(double h, const QuadratureSpec& q = {});

  // Same closed form with c_h = 1; used for calibration and tests.
  static std::shared_ptr<const VolterraKernel> uncalibrated(double h, const QuadratureSpec& q = {});

  double h() const { return h_; }
  double c() const { return c_; }
  // B(1 - 2h, h + 1/2) evaluated by the kernel's own quadrature.
  double beta_integral() const { return j0_; }

  // K_h(t, s); zero for s >= t, +infinity at s == 0 < t when h < 1/2.
  double operator()(double t, double s) const;
  // K_h(t, s) (t - s)^{1/2 - h}: smooth as s -> t.
  double regular_part(double t, double s) const;
  // int_s^t u^{h-3/2} (u - s)^{h-1/2} du for 0 < s < t.
  double inner_integral(double s, double t) const;
  // int_r^1 x^{-2h} (1 - x)^{h-1/2} dx for r in (0, 1].
  double j(double r) const;

  // Exponent of the (t - s) singularity at s -> t.
  double diagonal_exponent() const { return h_ - 0.5; }
  // Two-term expansion near s = 0: K_h(t, s) ~ A s^a + B(t) s^b.
  double origin_a() const { return origin_a_; }
  double origin_a_exponent() const { return h_ - 0.5; }
  double origin_b(double t) const;
  double origin_b_exponent() const { return 0.5 - h_; }

  const QuadratureSpec& quadrature() const { return q_; }

 private:
  VolterraKernel(double h, double c, const QuadratureSpec& q);

  double head(double r) const;
  double tail(double r) const;

  double h_;
  double c_;
  QuadratureSpec q_;
  std::shared_ptr<const GaussRule> right_rule_;
  std::shared_ptr<const GaussRule> left_rule_;
  double j0_ = 0.0;
  double origin_a_ = 0.0;
};

double volterra_kernel(const HurstParam& h, double t, double s, const QuadratureSpec& q = {});

// Positive constant making int_0^1 K_h(1, r)^2 dr = R_h(1, 1) = 1. Throws
// QuadratureFailure when halving the panel order changes the integral by more
// than q.tolerance (relative).
double calibrate_ch(const HurstParam& h, const QuadratureSpec& q = {});

// int_0^{min(ti,tj)} K_h(ti, r) K_h2(tj, r) dr.
double kernel_cross_inner(const HurstParam& h, const HurstParam& h2, double ti, double tj,
                          const QuadratureSpec& q = {});

// Matrix of kernel_cross_inner over all pairs of `points` (distinct, in (0, 1]).
Eigen::MatrixXd kernel_cross_gram(const HurstParam& h, const HurstParam& h2,
                                  std::span<const double> points, const QuadratureSpec& q = {});

}  // namespace fbf
