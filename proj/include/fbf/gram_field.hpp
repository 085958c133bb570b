#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "fbf/kernel_quadrature.hpp"
#include "fbf/kernels.hpp"
#include "fbf/measure.hpp"

namespace fbf {

// Breadth-first dyadics 1, 1/2, 1/4, 3/4, 1/8, ...
std::vector<double> dyadic_points(std::size_t n);

// Lower-triangular factor of a Gram matrix with near-dependent members dropped.
struct CholeskyBasis {
  Eigen::MatrixXd gram;              // full input Gram matrix
  Eigen::MatrixXd factor;            // retained x retained, gram(retained) = L L^T
  std::vector<std::size_t> retained;
  std::vector<std::size_t> dropped;

  // L^{-1} v restricted to retained indices; v indexed like `gram`.
  Eigen::VectorXd coordinates(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd coordinates(const Eigen::MatrixXd& v) const;
};

// Pivot-free Cholesky; a pivot below drop_tol * trace drops that index, a pivot
// below -drop_tol * trace throws NotPSD.
CholeskyBasis orthonormalize(const Eigen::MatrixXd& gram, double drop_tol = 1e-10);

// Indicators of [0, t] with dyadic corners, breadth-first, skipping members
// that are numerically dependent on the ones already chosen (k_{1/2} Gram).
std::vector<IndexFunction> default_basis(const SpacePtr& space, std::size_t n);
// Corners of the members returned by default_basis.
std::vector<RectPoint> default_basis_corners(const SpacePtr& space, std::size_t n);

struct FieldPoint {
  HurstParam h;
  IndexFunction f;
};

// Truncated L2-fBf: N dyadics t_n paired with N index functions f_n. Per-h
// factorizations and kernel tables are built on first use and cached.
class FieldModel {
 public:
  FieldModel(SpacePtr space, std::size_t basis_size, QuadratureSpec q = {});
  FieldModel(SpacePtr space, std::vector<RectPoint> corners, QuadratureSpec q = {});

  std::size_t basis_size() const { return dyadics_.size(); }
  const SpacePtr& space() const { return space_; }
  std::span<const double> dyadics() const { return dyadics_; }
  const std::vector<IndexFunction>& index_basis() const { return basis_; }
  const std::vector<RectPoint>& basis_corners() const { return corners_; }
  const QuadratureSpec& quadrature() const { return q_; }

  const CholeskyBasis& r_basis(const HurstParam& h) const;
  const CholeskyBasis& k_basis(const HurstParam& h) const;
  std::shared_ptr<const KernelTable> table(const HurstParam& h) const;
  const PanelsPtr& panels() const { return panels_; }
  // Reorders coefficients indexed by basis position into the (sorted) panel rows.
  Eigen::MatrixXd to_panel_rows(const Eigen::MatrixXd& beta) const;

  // [k_h(f_i, f)]_i
  Eigen::VectorXd kernel_column(const HurstParam& h, const IndexFunction& f) const;

  // Stable text summary of the model: N, dyadics, basis corners, quadrature.
  std::string fingerprint_source() const;
  std::uint64_t fingerprint() const;
  std::vector<double> cached_h() const;

 private:
  void init_gram();

  SpacePtr space_;
  QuadratureSpec q_;
  std::vector<double> dyadics_;
  std::vector<RectPoint> corners_;
  std::vector<IndexFunction> basis_;
  Eigen::VectorXd nf_;      // m(f_i^2)
  Eigen::MatrixXd dsq_;     // m(|f_i - f_j|^2)
  PanelsPtr panels_;
  std::vector<Eigen::Index> panel_row_;

  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const CholeskyBasis>> r_cache_;
  mutable std::map<double, std::shared_ptr<const CholeskyBasis>> k_cache_;
  mutable std::map<double, std::shared_ptr<const KernelTable>> tables_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<const Eigen::MatrixXd>> m_cache_;

  friend Eigen::MatrixXd cross_basis_matrix(const HurstParam&, const HurstParam&, const FieldModel&);
};

// a(h, f) = L_k(h)^{-1} [k_h(f, f_i)]_i
Eigen::VectorXd coeff_vector(const HurstParam& h, const IndexFunction& f, const FieldModel& model);

// M(h, h') = L_R(h)^{-1} C(h, h') L_R(h')^{-T}, C(h, h')_ij = int K_h(t_i, .) K_h'(t_j, .)
Eigen::MatrixXd cross_basis_matrix(const HurstParam& h, const HurstParam& h2, const FieldModel& model);

double field_cov(const HurstParam& h, const IndexFunction& f, const HurstParam& h2,
                 const IndexFunction& g, const FieldModel& model);

Eigen::MatrixXd assemble_cov_matrix(std::span<const FieldPoint> points, const FieldModel& model);

// min_j m(|f - f_j|^2)^{2h}, an upper bound on k_h(f, f) - |a(h, f)|^2.
double truncation_error(const HurstParam& h, const IndexFunction& f, const FieldModel& model);

}  // namespace fbf
