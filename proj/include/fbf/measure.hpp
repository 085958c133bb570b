#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace fbf {

// Finite discretization of a measure space (T, m): atoms with nonnegative
// weights. Atoms carry `dim` coordinates each; dim == 0 means opaque atoms
// identified by their position in the list.
class MeasureSpace {
 public:
  MeasureSpace(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

  std::size_t size() const { return weights_.size(); }
  std::size_t dim() const { return dim_; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> atom(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * dim_, dim_);
  }
  std::span<const double> coords() const { return coords_; }
  double total_mass() const;

  bool same_as(const MeasureSpace& other) const;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

using SpacePtr = std::shared_ptr<const MeasureSpace>;

SpacePtr make_discrete_space(std::span<const double> atoms, std::span<const double> weights);
SpacePtr make_discrete_space(const std::vector<std::vector<double>>& atoms,
                             std::span<const double> weights);

// Tabulated nonnegative density on [0, 1]; cumulative mass by the trapezoid rule.
class AxisDensity {
 public:
  AxisDensity(std::vector<double> x, std::vector<double> values);

  // int_0^t density, with the tabulated function interpolated linearly.
  double cumulative(double t) const;
  std::span<const double> x() const { return x_; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> x_;
  std::vector<double> values_;
  std::vector<double> cum_;
};

// Product measure on [0,1]^d; an empty axis list means Lebesgue measure.
struct ProductMeasure {
  std::size_t dim = 1;
  std::vector<AxisDensity> axes;

  static ProductMeasure lebesgue(std::size_t dim) { return ProductMeasure{dim, {}}; }
  bool is_lebesgue() const { return axes.empty(); }
  double cumulative(std::size_t axis, double t) const;
};

// Regular n^d grid of cells over [0,1]^d; atoms at cell centers, weights the
// cell masses under `measure`.
SpacePtr make_grid_space(const ProductMeasure& measure, std::size_t cells_per_axis);

struct RectPoint {
  std::vector<double> coords;

  RectPoint() = default;
  RectPoint(std::initializer_list<double> c) : coords(c) {}
  explicit RectPoint(std::vector<double> c) : coords(std::move(c)) {}

  std::size_t dim() const { return coords.size(); }
  void validate() const;
};

class IndexFunction {
 public:
  IndexFunction(SpacePtr space, std::vector<double> values);

  static IndexFunction zero(SpacePtr space);
  static IndexFunction constant(SpacePtr space, double value);

  const SpacePtr& space() const { return space_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

void require_same_space(const IndexFunction& f, const IndexFunction& g);

// m(f^2)
double norm_sq(const IndexFunction& f);
// m(|f - g|^2)
double dist_sq(const IndexFunction& f, const IndexFunction& g);
// m(f g)
double inner(const IndexFunction& f, const IndexFunction& g);

// m([0, t]) for a product measure.
double rect_measure(const ProductMeasure& measure, const RectPoint& t);
// m([0, s] symmetric-difference [0, t]).
double rect_symdiff(const ProductMeasure& measure, const RectPoint& s, const RectPoint& t);

// 1_{[0,t]}: an atom belongs to [0, t] iff its coordinates are all <= t.
IndexFunction indicator_of_rect(const SpacePtr& space, const RectPoint& t);
// Indicator of an arbitrary set given by membership of the atom coordinates.
IndexFunction indicator_of_set(const SpacePtr& space,
                               const std::function<bool(std::span<const double>)>& contains);

}  // namespace fbf
