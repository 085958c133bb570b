#include "fbf/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbf/error.hpp"

namespace fbf {

ScalingFit fit_power_law(std::span<const double> x, std::span<const double> y, std::span<const double> std_errors) {
  if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, "abscissae and estimates differ in length");
  if (!std_errors.empty() && std_errors.size() != x.size()) {
    fail(ErrorCode::LengthMismatch, "one standard error per estimate");
  }
  if (x.size() < 2) fail(ErrorCode::TooFewScales, "a scaling fit needs at least two scales");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> lx(x.size());
  std::vector<double> ly(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail(ErrorCode::OutOfRange, "log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::TooFewScales, "scales must be distinct");
  ScalingFit fit;
  fit.abscissae.assign(x.begin(), x.end());
  fit.estimates.assign(y.begin(), y.end());
  fit.std_errors.assign(std_errors.begin(), std_errors.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double rss = std::max(syy - fit.slope * sxy, 0.0);
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
  fit.slope_se = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

MeanWithError empirical_increment_variance(const FieldSample& sample, std::size_t i, std::size_t j) {
  const auto cols = static_cast<std::size_t>(sample.values.cols());
  if (i >= cols || j >= cols) fail(ErrorCode::OutOfRange, "point index out of range");
  const auto n = static_cast<std::size_t>(sample.values.rows());
  if (n < 2) fail(ErrorCode::OutOfRange, "need at least two samples");
  const Eigen::VectorXd d = sample.values.col(static_cast<Eigen::Index>(i)) - sample.values.col(static_cast<Eigen::Index>(j));
  const double nn = static_cast<double>(n);
  const double mean = d.mean();
  const double var = (d.array() - mean).square().sum() / (nn - 1.0);
  MeanWithError out{var, std::numeric_limits<double>::infinity()};
  if (n < 3) return out;
  // Leave-one-out variances in closed form.
  const double s1 = d.sum();
  const double s2 = d.squaredNorm();
  double mean_loo = 0.0;
  std::vector<double> loo(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = d(static_cast<Eigen::Index>(k));
    const double a = s1 - x;
    loo[k] = (s2 - x * x - a * a / (nn - 1.0)) / (nn - 2.0);
    mean_loo += loo[k];
  }
  mean_loo /= nn;
  double acc = 0.0;
  for (double v : loo) acc += (v - mean_loo) * (v - mean_loo);
  out.std_error = std::sqrt((nn - 1.0) / nn * acc);
  return out;
}

ScalingFit verify_h_increment_scaling(const FieldModel& model, const IndexFunction& f, const HurstParam& h0,
                                      std::span<const double> deltas, ScalingMode mode, std::size_t n_paths,
                                      const SeededStream& stream) {
  if (deltas.size() < 2) fail(ErrorCode::TooFewScales, "need at least two deltas");
  std::vector<HurstParam> hs;
  for (double d : deltas) {
    if (!(d > 0.0)) fail(ErrorCode::OutOfRange, "deltas must be positive");
    const double h = h0.value() + d;
    if (h0.guard()) {
      hs.emplace_back(h, *h0.guard());
    } else {
      hs.emplace_back(h);
    }
  }
  std::vector<double> est;
  std::vector<double> se;
  if (mode == ScalingMode::Analytic) {
    const double base = field_cov(h0, f, h0, f, model);
    for (const auto& h : hs) {
      est.push_back(base + field_cov(h, f, h, f, model) - 2.0 * field_cov(h0, f, h, f, model));
    }
  } else {
    if (n_paths < 3) fail(ErrorCode::OutOfRange, "Monte Carlo mode needs at least three paths");
    std::vector<FieldPoint> points{FieldPoint{h0, f}};
    for (const auto& h : hs) points.push_back(FieldPoint{h, f});
    const FieldSample sample = simulate_field(points, model, n_paths, stream);
    for (std::size_t k = 0; k < hs.size(); ++k) {
      const auto m = empirical_increment_variance(sample, 0, k + 1);
      est.push_back(m.estimate);
      se.push_back(m.std_error);
    }
  }
  return fit_power_law(deltas, est, se);
}

std::vector<double> geometric_radii(double rho0, int levels) {
  if (!(rho0 > 0.0) || levels < 0) fail(ErrorCode::OutOfRange, "radii need rho0 > 0 and levels >= 0");
  std::vector<double> out;
  for (int k = 0; k <= levels; ++k) out.push_back(std::ldexp(rho0, -k));
  return out;
}

namespace {

void check_path(std::span<const RectPoint> grid, std::span<const double> path, std::span<const double> radii) {
  if (grid.size() != path.size()) fail(ErrorCode::LengthMismatch, "one value per grid point");
  if (radii.size() < 2) fail(ErrorCode::TooFewScales, "need at least two radii");
  for (double r : radii) {
    if (!(r > 0.0)) fail(ErrorCode::OutOfRange, "radii must be positive");
  }
}

ExponentEstimate finish(const RectPoint& t0, std::span<const double> radii, const std::vector<double>& scales,
                        const std::vector<double>& values, double exponent_scale) {
  ExponentEstimate out;
  out.location = t0.coords;
  out.scales.assign(radii.begin(), radii.end());
  const bool degenerate = std::any_of(values.begin(), values.end(), [](double v) { return !(v > 0.0); });
  if (degenerate) {
    out.alpha_hat = 1.0;
    return out;
  }
  const ScalingFit fit = fit_power_law(scales, values);
  out.alpha_hat = std::min(exponent_scale * fit.slope, 1.0);
  out.half_width = 1.96 * exponent_scale * fit.slope_se;
  return out;
}

// Integer lattice coordinates of each grid point relative to the point
// nearest t0, in units of the smallest coordinate gap per axis.
std::vector<std::vector<long>> lattice_offsets(std::span<const RectPoint> grid, const std::vector<double>& dist) {
  const std::size_t dim = grid.front().coords.size();
  const auto anchor = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
  std::vector<double> gap(dim, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < dim; ++a) {
    std::vector<double> xs;
    for (const auto& p : grid) xs.push_back(p.coords[a]);
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (xs[i] > xs[i - 1]) gap[a] = std::min(gap[a], xs[i] - xs[i - 1]);
    }
    if (!std::isfinite(gap[a])) gap[a] = 1.0;
  }
  std::vector<std::vector<long>> out(grid.size(), std::vector<long>(dim));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t a = 0; a < dim; ++a) {
      out[i][a] = std::lround((grid[i].coords[a] - grid[anchor].coords[a]) / gap[a]);
    }
  }
  return out;
}

std::vector<RectPoint> corners_of(const FieldSample& sample) {
  std::vector<RectPoint> grid;
  for (const auto& p : sample.points) {
    if (p.corner.empty()) fail(ErrorCode::DimensionMismatch, "sample points carry no rectangle corners");
    grid.emplace_back(p.corner);
  }
  return grid;
}

}  // namespace

ExponentEstimate estimate_pointwise_exponent(std::span<const RectPoint> grid, std::span<const double> path,
                                             const RectPoint& t0, std::span<const double> radii,
                                             const ProductMeasure& measure, BallSampling sampling) {
  check_path(grid, path, radii);
  std::vector<double> dist(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) dist[i] = rect_symdiff(measure, grid[i], t0);
  const auto lattice = sampling == BallSampling::EqualResolution ? lattice_offsets(grid, dist)
                                                                 : std::vector<std::vector<long>>();
  const double r_min = *std::min_element(radii.begin(), radii.end());
  std::vector<double> osc;
  for (double r : radii) {
    // Stride s keeps every ball at the resolution of the smallest one.
    const long stride = lattice.empty() ? 1 : std::max(1L, std::lround(r / r_min));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t count = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const bool on_lattice = lattice.empty() || std::all_of(lattice[i].begin(), lattice[i].end(),
                                                             [stride](long k) { return k % stride == 0; });
      if (on_lattice && dist[i] <= r) {
        lo = std::min(lo, path[i]);
        hi = std::max(hi, path[i]);
        ++count;
      }
    }
    if (count < 2) fail(ErrorCode::EmptyBall, "a ball holds fewer than two grid points");
    osc.push_back(hi - lo);
  }
  return finish(t0, radii, std::vector<double>(radii.begin(), radii.end()), osc, 1.0);
}

ExponentEstimate estimate_local_exponent(std::span<const RectPoint> grid, std::span<const double> path,
                                         const RectPoint& t0, std::span<const double> radii,
                                         const ProductMeasure& measure) {
  check_path(grid, path, radii);
  std::vector<double> dist(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) dist[i] = rect_symdiff(measure, grid[i], t0);
  std::vector<double> scale;
  std::vector<double> msq;
  for (double r : radii) {
    std::vector<std::size_t> ball;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (dist[i] <= r) ball.push_back(i);
    }
    double sum_d = 0.0;
    double sum_sq = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < ball.size(); ++a) {
      for (std::size_t b = a + 1; b < ball.size(); ++b) {
        const double d = rect_symdiff(measure, grid[ball[a]], grid[ball[b]]);
        if (d > 0.5 * r && d <= r) {
          const double x = path[ball[a]] - path[ball[b]];
          sum_d += d;
          sum_sq += x * x;
          ++pairs;
        }
      }
    }
    if (pairs == 0) fail(ErrorCode::EmptyBall, "no pairs at this scale inside the ball");
    scale.push_back(sum_d / static_cast<double>(pairs));
    msq.push_back(sum_sq / static_cast<double>(pairs));
  }
  return finish(t0, radii, scale, msq, 0.5);
}

ExponentEstimate estimate_pointwise_exponent(const FieldSample& sample, std::size_t path, const RectPoint& t0,
                                             std::span<const double> radii, const ProductMeasure& measure,
                                             BallSampling sampling) {
  if (path >= static_cast<std::size_t>(sample.values.rows())) fail(ErrorCode::OutOfRange, "path index out of range");
  const auto grid = corners_of(sample);
  const Eigen::VectorXd row = sample.values.row(static_cast<Eigen::Index>(path)).transpose();
  return estimate_pointwise_exponent(grid, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                     t0, radii, measure, sampling);
}

ExponentEstimate estimate_local_exponent(const FieldSample& sample, std::size_t path, const RectPoint& t0,
                                         std::span<const double> radii, const ProductMeasure& measure) {
  if (path >= static_cast<std::size_t>(sample.values.rows())) fail(ErrorCode::OutOfRange, "path index out of range");
  const auto grid = corners_of(sample);
  const Eigen::VectorXd row = sample.values.row(static_cast<Eigen::Index>(path)).transpose();
  return estimate_local_exponent(grid, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                 t0, radii, measure);
}

double conditional_variance(const FieldModel& model, const HurstParam& h, const IndexFunction& f,
                            std::span<const IndexFunction> conditioning) {
  const auto m = static_cast<Eigen::Index>(conditioning.size());
  const Eigen::VectorXd af = coeff_vector(h, f, model);
  const double total = af.squaredNorm();
  if (m == 0) return total;
  Eigen::MatrixXd a(af.size(), m);
  for (Eigen::Index j = 0; j < m; ++j) a.col(j) = coeff_vector(h, conditioning[static_cast<std::size_t>(j)], model);
  const CholeskyBasis basis = orthonormalize(a.transpose() * a, 1e-14);
  const Eigen::VectorXd y = basis.coordinates(Eigen::VectorXd(a.transpose() * af));
  return std::clamp(total - y.squaredNorm(), 0.0, total);
}

ScalingFit lnd_scaling_probe(const FieldModel& model, const HurstParam& h, const IndexFunction& f,
                             std::span<const double> radii) {
  if (radii.size() < 2) fail(ErrorCode::TooFewScales, "need at least two radii");
  const auto& basis = model.index_basis();
  std::vector<double> dist;
  for (const auto& g : basis) dist.push_back(dist_sq(f, g));
  std::vector<double> values;
  for (double r : radii) {
    if (!(r > 0.0)) fail(ErrorCode::OutOfRange, "radii must be positive");
    std::vector<IndexFunction> far;
    for (std::size_t j = 0; j < basis.size(); ++j) {
      if (dist[j] >= r) far.push_back(basis[j]);
    }
    values.push_back(conditional_variance(model, h, f, far));
  }
  return fit_power_law(radii, values);
}

}  // namespace fbf
