#include "fbf/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fbf/error.hpp"

namespace fbf {

MeasureSpace::MeasureSpace(std::size_t dim, std::vector<double> coords,
                           std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
  if (coords_.size() != dim_ * weights_.size()) {
    fail(ErrorCode::LengthMismatch, "atom and weight lists differ in length");
  }
  bool positive = false;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::NegativeWeight, "weights must be >= 0");
    positive = positive || w > 0.0;
  }
  if (!positive) fail(ErrorCode::ZeroMeasure, "at least one weight must be positive");
}

double MeasureSpace::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

bool MeasureSpace::same_as(const MeasureSpace& other) const {
  return this == &other ||
         (dim_ == other.dim_ && weights_ == other.weights_ && coords_ == other.coords_);
}

SpacePtr make_discrete_space(std::span<const double> atoms, std::span<const double> weights) {
  if (atoms.size() != weights.size()) {
    fail(ErrorCode::LengthMismatch, "atom and weight lists differ in length");
  }
  return std::make_shared<const MeasureSpace>(
      1, std::vector<double>(atoms.begin(), atoms.end()),
      std::vector<double>(weights.begin(), weights.end()));
}

SpacePtr make_discrete_space(const std::vector<std::vector<double>>& atoms,
                             std::span<const double> weights) {
  if (atoms.size() != weights.size()) {
    fail(ErrorCode::LengthMismatch, "atom and weight lists differ in length");
  }
  const std::size_t dim = atoms.empty() ? 0 : atoms.front().size();
  std::vector<double> coords;
  coords.reserve(dim * atoms.size());
  for (const auto& a : atoms) {
    if (a.size() != dim) fail(ErrorCode::DimensionMismatch, "atoms have inconsistent dimension");
    coords.insert(coords.end(), a.begin(), a.end());
  }
  return std::make_shared<const MeasureSpace>(dim, std::move(coords),
                                              std::vector<double>(weights.begin(), weights.end()));
}

AxisDensity::AxisDensity(std::vector<double> x, std::vector<double> values)
    : x_(std::move(x)), values_(std::move(values)) {
  if (x_.size() != values_.size() || x_.size() < 2) {
    fail(ErrorCode::LengthMismatch, "density table needs matching abscissae and values (>= 2)");
  }
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!(values_[i] >= 0.0)) fail(ErrorCode::NegativeWeight, "density values must be >= 0");
    if (i > 0 && !(x_[i] > x_[i - 1])) {
      fail(ErrorCode::OutOfRange, "density abscissae must be increasing");
    }
  }
  if (x_.front() > 0.0 || x_.back() < 1.0) {
    fail(ErrorCode::OutOfRange, "density table must cover [0, 1]");
  }
  cum_.assign(x_.size(), 0.0);
  for (std::size_t i = 1; i < x_.size(); ++i) {
    cum_[i] = cum_[i - 1] + 0.5 * (values_[i] + values_[i - 1]) * (x_[i] - x_[i - 1]);
  }
}

double AxisDensity::cumulative(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  const auto lower = [this](double u) {
    auto it = std::upper_bound(x_.begin(), x_.end(), u);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0));
  };
  const auto at = [&](double u) {
    const std::size_t i = std::min(lower(u), x_.size() - 2);
    const double dx = u - x_[i];
    const double slope = (values_[i + 1] - values_[i]) / (x_[i + 1] - x_[i]);
    return cum_[i] + values_[i] * dx + 0.5 * slope * dx * dx;
  };
  return at(t) - at(0.0);
}

double ProductMeasure::cumulative(std::size_t axis, double t) const {
  if (axes.empty()) return std::clamp(t, 0.0, 1.0);
  return axes.at(axis).cumulative(t);
}

SpacePtr make_grid_space(const ProductMeasure& measure, std::size_t cells_per_axis) {
  const std::size_t d = measure.dim;
  if (d == 0 || cells_per_axis == 0) fail(ErrorCode::OutOfRange, "grid needs d >= 1 and n >= 1");
  if (!measure.is_lebesgue() && measure.axes.size() != d) {
    fail(ErrorCode::DimensionMismatch, "one density per axis required");
  }
  const std::size_t n = cells_per_axis;
  std::vector<std::vector<double>> cell_mass(d, std::vector<double>(n));
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = static_cast<double>(i) / n;
      const double hi = static_cast<double>(i + 1) / n;
      cell_mass[k][i] = measure.is_lebesgue()
                            ? hi - lo
                            : measure.cumulative(k, hi) - measure.cumulative(k, lo);
    }
  }
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= n;
  std::vector<double> coords(total * d);
  std::vector<double> weights(total);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t a = 0; a < total; ++a) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      coords[a * d + k] = (static_cast<double>(idx[k]) + 0.5) / n;
      w *= cell_mass[k][idx[k]];
    }
    weights[a] = w;
    // last axis varies fastest
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < n) break;
      idx[k] = 0;
    }
  }
  return std::make_shared<const MeasureSpace>(d, std::move(coords), std::move(weights));
}

void RectPoint::validate() const {
  for (double c : coords) {
    if (!(c >= 0.0 && c <= 1.0)) fail(ErrorCode::OutOfRange, "rectangle corner outside [0,1]^d");
  }
}

IndexFunction::IndexFunction(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) fail(ErrorCode::SpaceMismatch, "index function needs a space");
  if (values_.size() != space_->size()) {
    fail(ErrorCode::LengthMismatch, "one value per atom required");
  }
}

IndexFunction IndexFunction::zero(SpacePtr space) { return constant(std::move(space), 0.0); }

IndexFunction IndexFunction::constant(SpacePtr space, double value) {
  const std::size_t n = space->size();
  return IndexFunction(std::move(space), std::vector<double>(n, value));
}

void require_same_space(const IndexFunction& f, const IndexFunction& g) {
  if (!f.space()->same_as(*g.space())) {
    fail(ErrorCode::SpaceMismatch, "index functions live on different spaces");
  }
}

double norm_sq(const IndexFunction& f) {
  const auto w = f.space()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i] * f[i];
  return s;
}

double dist_sq(const IndexFunction& f, const IndexFunction& g) {
  require_same_space(f, g);
  const auto w = f.space()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = f[i] - g[i];
    s += w[i] * d * d;
  }
  return s;
}

double inner(const IndexFunction& f, const IndexFunction& g) {
  require_same_space(f, g);
  const auto w = f.space()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i] * g[i];
  return s;
}

double rect_measure(const ProductMeasure& measure, const RectPoint& t) {
  t.validate();
  if (t.dim() != measure.dim) fail(ErrorCode::DimensionMismatch, "corner dimension mismatch");
  double m = 1.0;
  for (std::size_t k = 0; k < t.dim(); ++k) m *= measure.cumulative(k, t.coords[k]);
  return m;
}

double rect_symdiff(const ProductMeasure& measure, const RectPoint& s, const RectPoint& t) {
  if (s.dim() != t.dim()) fail(ErrorCode::DimensionMismatch, "corner dimension mismatch");
  RectPoint meet;
  meet.coords.resize(s.dim());
  for (std::size_t k = 0; k < s.dim(); ++k) meet.coords[k] = std::min(s.coords[k], t.coords[k]);
  const double value =
      rect_measure(measure, s) + rect_measure(measure, t) - 2.0 * rect_measure(measure, meet);
  return std::max(value, 0.0);
}

IndexFunction indicator_of_rect(const SpacePtr& space, const RectPoint& t) {
  t.validate();
  if (space->dim() != t.dim()) fail(ErrorCode::DimensionMismatch, "corner dimension mismatch");
  return indicator_of_set(space, [&t](std::span<const double> x) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] > t.coords[k]) return false;
    }
    return true;
  });
}

IndexFunction indicator_of_set(const SpacePtr& space,
                               const std::function<bool(std::span<const double>)>& contains) {
  if (space->dim() == 0) fail(ErrorCode::DimensionMismatch, "space atoms carry no coordinates");
  std::vector<double> values(space->size());
  for (std::size_t i = 0; i < space->size(); ++i) values[i] = contains(space->atom(i)) ? 1.0 : 0.0;
  return IndexFunction(space, std::move(values));
}

}  // namespace fbf
