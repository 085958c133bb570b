#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fbf/gram_field.hpp"
#include "fbf/sampler.hpp"

namespace fbf {

// Least-squares fit of log y = intercept + slope log x.
struct ScalingFit {
  std::vector<double> abscissae;
  std::vector<double> estimates;
  std::vector<double> std_errors;  // empty in analytic mode
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_se = 0.0;
};

ScalingFit fit_power_law(std::span<const double> x, std::span<const double> y,
                         std::span<const double> std_errors = {});

struct ExponentEstimate {
  std::vector<double> location;
  double alpha_hat = 0.0;
  double half_width = 0.0;
  std::vector<double> scales;
};

struct MeanWithError {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Unbiased sample variance of column i minus column j with a jackknife error.
MeanWithError empirical_increment_variance(const FieldSample& sample, std::size_t i, std::size_t j);

enum class ScalingMode { Analytic, MonteCarlo };

// E(B_{h0,f} - B_{h0+delta,f})^2 against delta.
ScalingFit verify_h_increment_scaling(const FieldModel& model, const IndexFunction& f, const HurstParam& h0,
                                      std::span<const double> deltas, ScalingMode mode = ScalingMode::Analytic,
                                      std::size_t n_paths = 0, const SeededStream& stream = SeededStream(0));

// rho0 2^{-k}, k = 0..levels
std::vector<double> geometric_radii(double rho0, int levels = 6);

// EqualResolution thins every ball to the grid lattice of stride r / r_min
// around the grid point nearest t0, so all balls hold about as many points as
// the smallest one; AllPoints uses every grid point in the ball.
enum class BallSampling { EqualResolution, AllPoints };

// Oscillation regression: for each radius, max - min of the path over the
// d'_m ball around t0; slope of log oscillation against log radius, capped at 1.
ExponentEstimate estimate_pointwise_exponent(std::span<const RectPoint> grid, std::span<const double> path,
                                             const RectPoint& t0, std::span<const double> radii,
                                             const ProductMeasure& measure,
                                             BallSampling sampling = BallSampling::EqualResolution);
// Pair regression: per radius, mean squared increment over pairs of the ball
// at d'_m-distance in (rho/2, rho]; half the slope against the mean distance.
ExponentEstimate estimate_local_exponent(std::span<const RectPoint> grid, std::span<const double> path,
                                         const RectPoint& t0, std::span<const double> radii,
                                         const ProductMeasure& measure);

// Row `path` of a sample whose descriptors carry rectangle corners.
ExponentEstimate estimate_pointwise_exponent(const FieldSample& sample, std::size_t path, const RectPoint& t0,
                                             std::span<const double> radii, const ProductMeasure& measure,
                                             BallSampling sampling = BallSampling::EqualResolution);
ExponentEstimate estimate_local_exponent(const FieldSample& sample, std::size_t path, const RectPoint& t0,
                                         std::span<const double> radii, const ProductMeasure& measure);

// Var(B_{h,f} | B_{h,g}, g in conditioning) as a Schur complement of the model covariance.
double conditional_variance(const FieldModel& model, const HurstParam& h, const IndexFunction& f,
                            std::span<const IndexFunction> conditioning);

// For each radius r, conditions on the basis members g with m(|f - g|^2) >= r
// and fits the conditional variance against r.
ScalingFit lnd_scaling_probe(const FieldModel& model, const HurstParam& h, const IndexFunction& f,
                             std::span<const double> radii);

}  // namespace fbf
