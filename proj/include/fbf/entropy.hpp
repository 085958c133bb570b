#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fbf/rng.hpp"

namespace fbf {

// Finite metric sample: n points and a distance between indices.
struct MetricSample {
  std::size_t size = 0;
  std::function<double(std::size_t, std::size_t)> dist;
  std::string description;
  double resolution = 0.0;  // distances below this are not trusted
};

// max(d1, d2) on the index product; index = i * n2 + j.
MetricSample product_metric(const MetricSample& a, const MetricSample& b);

// Farthest-point insertion radii (first point +infinity), in insertion order.
std::vector<double> insertion_radii(const MetricSample& sample);

// Bounds on the covering number by eps-balls centred in the sample:
// upper from the greedy farthest-point cover, lower from the 2 eps-separated
// greedy subset and from n / (largest eps-ball population).
struct CoveringBounds {
  std::size_t upper = 0;
  std::size_t lower = 0;
};

CoveringBounds covering_number(const MetricSample& sample, double eps);

struct EntropyProfile {
  std::vector<double> epsilons;         // decreasing
  std::vector<std::size_t> upper;       // covering upper bounds
  std::vector<std::size_t> lower;       // covering lower bounds
  std::vector<std::size_t> packing;     // greedy eps-separated set sizes
  std::string metric;
  double resolution = 0.0;
  std::vector<bool> trusted;            // eps above the sample resolution
};

EntropyProfile entropy_profile(const MetricSample& sample, std::span<const double> epsilons);

enum class DudleyVerdict { Converges, Diverges, Indeterminate };
const char* to_string(DudleyVerdict v);

struct DudleyResult {
  double value = 0.0;            // trapezoid part over the profile, eps <= 1
  double tail = 0.0;             // extrapolated part below the smallest eps (inf if divergent)
  double exponent = 0.0;         // fitted gamma in H(eps) ~ A eps^{-gamma}
  DudleyVerdict verdict = DudleyVerdict::Indeterminate;
};

// int_0^1 sqrt(log N(eps)) d eps from the covering upper bounds.
DudleyResult dudley_integral(const EntropyProfile& profile);
// Same from explicit (eps, H(eps)) values.
DudleyResult dudley_integral(std::span<const double> epsilons, std::span<const double> entropy);

struct ProductEntropyReport {
  bool holds = true;
  std::vector<std::size_t> upper_violations;  // levels with lower(N12) > upper(N1) upper(N2)
  std::vector<std::size_t> lower_violations;  // levels with upper(N12) < max(lower(N1), lower(N2))
};

ProductEntropyReport product_entropy_check(const EntropyProfile& n1, const EntropyProfile& n2,
                                           const EntropyProfile& n12);

struct SmallBallPoint {
  double eps = 0.0;
  std::size_t hits = 0;
  std::size_t trials = 0;
  double p_hat = 0.0;
  double lo = 0.0;  // Wilson 95% interval
  double hi = 0.0;
};

// Draws of sup |X| over the index set, one per path.
using SupSource = std::function<Eigen::VectorXd(std::size_t n_paths, const SeededStream& stream)>;

std::vector<SmallBallPoint> small_ball_mc(const SupSource& source, std::span<const double> eps,
                                          std::size_t n_paths, const SeededStream& stream);
std::vector<SmallBallPoint> small_ball_from_sups(const Eigen::VectorXd& sups, std::span<const double> eps);

// Slope of log(-log P) against log(1/eps) over levels with P in [10/n, 1 - 10/n].
struct SmallBallFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t levels = 0;
};
SmallBallFit small_ball_slope(std::span<const SmallBallPoint> points);

}  // namespace fbf
