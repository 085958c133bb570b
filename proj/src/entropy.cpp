#include "fbf/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbf/error.hpp"
#include "fbf/parallel.hpp"
#include "fbf/regularity.hpp"

namespace fbf {

MetricSample product_metric(const MetricSample& a, const MetricSample& b) {
  MetricSample out;
  out.size = a.size * b.size;
  const std::size_t nb = b.size;
  out.dist = [da = a.dist, db = b.dist, nb](std::size_t p, std::size_t q) {
    return std::max(da(p / nb, q / nb), db(p % nb, q % nb));
  };
  out.description = "max(" + a.description + ", " + b.description + ")";
  out.resolution = std::max(a.resolution, b.resolution);
  return out;
}

std::vector<double> insertion_radii(const MetricSample& sample) {
  const std::size_t n = sample.size;
  if (n == 0) fail(ErrorCode::OutOfRange, "empty metric sample");
  std::vector<double> radii{std::numeric_limits<double>::infinity()};
  std::vector<double> gap(n);
  for (std::size_t i = 0; i < n; ++i) gap[i] = sample.dist(0, i);
  for (std::size_t k = 1; k < n; ++k) {
    const auto far = static_cast<std::size_t>(std::max_element(gap.begin(), gap.end()) - gap.begin());
    const double r = gap[far];
    radii.push_back(r);
    for (std::size_t i = 0; i < n; ++i) gap[i] = std::min(gap[i], sample.dist(far, i));
  }
  return radii;
}

namespace {

std::size_t count_above(const std::vector<double>& radii, double eps) {
  return static_cast<std::size_t>(std::count_if(radii.begin(), radii.end(), [eps](double r) { return r > eps; }));
}

// ceil(n / max_x |B(x, eps)|)
std::size_t counting_bound(const MetricSample& sample, double eps) {
  const std::size_t n = sample.size;
  std::vector<std::size_t> pop(n, 0);
  parallel_for(0, n, [&](std::size_t i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) c += sample.dist(i, j) <= eps ? 1 : 0;
    pop[i] = c;
  });
  const std::size_t most = *std::max_element(pop.begin(), pop.end());
  return (n + most - 1) / most;
}

CoveringBounds bounds_from(const MetricSample& sample, const std::vector<double>& radii, double eps) {
  CoveringBounds b;
  b.upper = count_above(radii, eps);
  b.lower = std::max(count_above(radii, 2.0 * eps), counting_bound(sample, eps));
  b.lower = std::min(b.lower, b.upper);
  return b;
}

}  // namespace

CoveringBounds covering_number(const MetricSample& sample, double eps) {
  if (!(eps > 0.0)) fail(ErrorCode::OutOfRange, "eps must be positive");
  return bounds_from(sample, insertion_radii(sample), eps);
}

EntropyProfile entropy_profile(const MetricSample& sample, std::span<const double> epsilons) {
  if (epsilons.empty()) fail(ErrorCode::OutOfRange, "no eps levels");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) fail(ErrorCode::OutOfRange, "eps must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) fail(ErrorCode::OutOfRange, "eps levels must decrease");
  }
  const auto radii = insertion_radii(sample);
  EntropyProfile p;
  p.metric = sample.description;
  p.resolution = sample.resolution;
  for (double e : epsilons) {
    const auto b = bounds_from(sample, radii, e);
    p.epsilons.push_back(e);
    p.upper.push_back(b.upper);
    p.lower.push_back(b.lower);
    p.packing.push_back(count_above(radii, e));
    p.trusted.push_back(e > sample.resolution);
  }
  return p;
}

const char* to_string(DudleyVerdict v) {
  switch (v) {
    case DudleyVerdict::Converges: return "converges";
    case DudleyVerdict::Diverges: return "diverges";
    case DudleyVerdict::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

DudleyResult dudley_integral(std::span<const double> eps, std::span<const double> entropy) {
  if (eps.size() != entropy.size()) fail(ErrorCode::LengthMismatch, "one entropy value per eps");
  if (eps.size() < 4) fail(ErrorCode::TooFewScales, "Dudley integral needs at least four eps levels");
  DudleyResult out;
  // Trapezoid over the levels inside (0, 1].
  for (std::size_t i = 1; i < eps.size(); ++i) {
    const double a = std::min(eps[i], 1.0);
    const double b = std::min(eps[i - 1], 1.0);
    if (b <= a) continue;
    out.value += 0.5 * (b - a) * (std::sqrt(std::max(entropy[i], 0.0)) + std::sqrt(std::max(entropy[i - 1], 0.0)));
  }
  // Power-law fit of H over the four smallest levels with H > 0.
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = eps.size(); i-- > 0 && x.size() < 4;) {
    if (entropy[i] > 0.0) {
      x.push_back(1.0 / eps[i]);
      y.push_back(entropy[i]);
    }
  }
  if (x.size() < 2) {
    out.exponent = 0.0;
    out.verdict = DudleyVerdict::Converges;
    return out;
  }
  const ScalingFit fit = fit_power_law(x, y);
  out.exponent = fit.slope;
  const double gamma = fit.slope;
  // sqrt(A eps^-gamma) is integrable at 0 iff gamma < 2. The boundary itself
  // diverges; the band just below it cannot be told apart from divergence.
  if (gamma >= 2.0 - 1e-3) {
    out.verdict = DudleyVerdict::Diverges;
    out.tail = std::numeric_limits<double>::infinity();
  } else {
    out.verdict = gamma < 1.95 ? DudleyVerdict::Converges : DudleyVerdict::Indeterminate;
    const double a = std::exp(fit.intercept);
    const double e0 = std::min(eps.back(), 1.0);
    out.tail = std::sqrt(a) * std::pow(e0, 1.0 - 0.5 * gamma) / (1.0 - 0.5 * gamma);
  }
  return out;
}

DudleyResult dudley_integral(const EntropyProfile& profile) {
  std::vector<double> h;
  for (auto n : profile.upper) h.push_back(std::log(static_cast<double>(n)));
  return dudley_integral(profile.epsilons, h);
}

ProductEntropyReport product_entropy_check(const EntropyProfile& n1, const EntropyProfile& n2,
                                           const EntropyProfile& n12) {
  if (n1.epsilons != n2.epsilons || n1.epsilons != n12.epsilons) {
    fail(ErrorCode::GridMismatch, "profiles must share their eps levels");
  }
  ProductEntropyReport r;
  for (std::size_t k = 0; k < n1.epsilons.size(); ++k) {
    if (n12.lower[k] > n1.upper[k] * n2.upper[k]) r.upper_violations.push_back(k);
    if (n12.upper[k] < std::max(n1.lower[k], n2.lower[k])) r.lower_violations.push_back(k);
  }
  r.holds = r.upper_violations.empty() && r.lower_violations.empty();
  return r;
}

std::vector<SmallBallPoint> small_ball_from_sups(const Eigen::VectorXd& sups, std::span<const double> eps) {
  const auto n = static_cast<std::size_t>(sups.size());
  if (n == 0) fail(ErrorCode::OutOfRange, "no sup draws");
  std::vector<SmallBallPoint> out;
  bool any = false;
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  for (double e : eps) {
    if (!(e > 0.0)) fail(ErrorCode::OutOfRange, "eps must be positive");
    SmallBallPoint p;
    p.eps = e;
    p.trials = n;
    p.hits = static_cast<std::size_t>((sups.array() <= e).count());
    p.p_hat = static_cast<double>(p.hits) / nn;
    const double den = 1.0 + z * z / nn;
    const double centre = (p.p_hat + z * z / (2.0 * nn)) / den;
    const double half = z * std::sqrt(p.p_hat * (1.0 - p.p_hat) / nn + z * z / (4.0 * nn * nn)) / den;
    p.lo = std::max(0.0, centre - half);
    p.hi = std::min(1.0, centre + half);
    any = any || p.hits > 0;
    out.push_back(p);
  }
  if (!any) fail(ErrorCode::AllZeroHits, "no path stayed inside any of the balls");
  return out;
}

std::vector<SmallBallPoint> small_ball_mc(const SupSource& source, std::span<const double> eps, std::size_t n_paths,
                                          const SeededStream& stream) {
  if (!source) fail(ErrorCode::InvalidConfig, "missing sup source");
  return small_ball_from_sups(source(n_paths, stream), eps);
}

SmallBallFit small_ball_slope(std::span<const SmallBallPoint> points) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : points) {
    const double n = static_cast<double>(p.trials);
    if (p.p_hat >= 10.0 / n && p.p_hat <= 1.0 - 10.0 / n) {
      x.push_back(1.0 / p.eps);
      y.push_back(-std::log(p.p_hat));
    }
  }
  if (x.size() < 3) fail(ErrorCode::TooFewScales, "fewer than three estimable small-ball levels");
  const ScalingFit fit = fit_power_law(x, y);
  return SmallBallFit{fit.slope, fit.intercept, x.size()};
}

}  // namespace fbf
