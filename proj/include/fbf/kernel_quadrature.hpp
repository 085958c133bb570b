#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "fbf/kernels.hpp"
#include "fbf/quadrature.hpp"

namespace fbf {

// Panel layout on [0, max breakpoint] shared by every Volterra-kernel integral.
// Each breakpoint b gets a final panel [b - w, b] that ends exactly on the
// singularity of K(b, .); the remaining pieces are refined until each one is no
// wider than its distance to the nearest singular point, with a geometric
// mesh toward r = 0 and a closed-form tail on [0, eps].
class KernelPanels {
 public:
  struct Segment {
    double lo;
    double hi;
    std::size_t offset;  // first node
    std::size_t count;   // node count
    std::ptrdiff_t row;  // row whose singular end this is, or -1
  };

  // `breakpoints` positive; `rows` a subset of them. Both are sorted and
  // deduplicated internally; rows keep that sorted order.
  KernelPanels(std::span<const double> breakpoints, std::span<const double> rows,
               const QuadratureSpec& q);

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> rows() const { return rows_; }
  std::size_t row_count() const { return rows_.size(); }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& final_segment(std::size_t row) const { return segments_[row_final_[row]]; }
  std::span<const double> nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  std::size_t node_count() const { return nodes_.size(); }
  double tail_end() const { return eps_; }
  const QuadratureSpec& quadrature() const { return q_; }

 private:
  void add_segment(double lo, double hi, int order, std::ptrdiff_t row);

  QuadratureSpec q_;
  std::vector<double> breakpoints_;
  std::vector<double> rows_;
  std::vector<Segment> segments_;
  std::vector<std::size_t> row_final_;
  std::vector<double> nodes_;
  Eigen::VectorXd weights_;
  double eps_ = 0.0;
};

using PanelsPtr = std::shared_ptr<const KernelPanels>;

// Values of K_h(row, .) at the panel nodes. The singular final panel of each
// row is stored separately through the regular part K (t - r)^{1/2-h}.
class KernelTable {
 public:
  KernelTable(PanelsPtr panels, const VolterraKernel& kernel);

  const PanelsPtr& panels_ptr() const { return panels_; }

  const KernelPanels& panels() const { return *panels_; }
  double h() const { return h_; }
  double alpha() const { return h_ - 0.5; }
  // rows x nodes, zero beyond each row and on its own final panel
  const Eigen::MatrixXd& values() const { return v_; }
  // nodes-of-final-panel x rows
  const Eigen::MatrixXd& regular() const { return reg_; }
  double origin_a() const { return a_; }
  double origin_a_exponent() const { return h_ - 0.5; }
  double origin_b_exponent() const { return 0.5 - h_; }
  const Eigen::VectorXd& origin_b() const { return b_; }

 private:
  PanelsPtr panels_;
  double h_;
  Eigen::MatrixXd v_;
  Eigen::MatrixXd reg_;
  double a_ = 0.0;
  Eigen::VectorXd b_;
};

// int (sum_n bl(n,p) K_hl(t_n, r)) (sum_n br(n,q) K_hr(t_n, r)) dr for all
// columns p of bl and q of br. Both tables must share the same panels.
Eigen::MatrixXd bilinear(const KernelTable& left, const Eigen::MatrixXd& bl,
                         const KernelTable& right, const Eigen::MatrixXd& br);

// Combination sum_n beta(n, p) K_h(t_n, .) reduced to what the bilinear form
// needs, so the full table can be released afterwards.
struct KernelSide {
  PanelsPtr panels;
  double h;
  Eigen::MatrixXd beta;  // rows x columns
  Eigen::MatrixXd g;     // nodes x columns, final panel of each row excluded
  Eigen::MatrixXd reg;   // regular parts on the final panels
  double origin_a;
  Eigen::VectorXd origin_b;
};

KernelSide make_side(const KernelTable& table, Eigen::MatrixXd beta);
Eigen::MatrixXd bilinear(const KernelSide& left, const KernelSide& right);

// A group of functions sum_n beta(n, p) K_h(t_n, .) sharing one table.
struct KernelCombination {
  const KernelTable* table;
  Eigen::MatrixXd beta;  // rows x columns
};

// Full Gram matrix of the columns of all groups, in group order.
Eigen::MatrixXd bilinear(std::span<const KernelCombination> groups);

// out(row, c) = int_{edges[c]}^{edges[c+1]} K_h(t_row, r) dr. Edges start at 0
// and every other edge must be a breakpoint of the panels. Rows are processed
// one at a time, so no node table is stored.
Eigen::MatrixXd cell_integrals(const PanelsPtr& panels, const VolterraKernel& kernel,
                               std::span<const double> edges);
// Same with kernels[row] for each (sorted) panel row.
Eigen::MatrixXd cell_integrals(const PanelsPtr& panels, std::span<const VolterraKernel* const> kernels,
                               std::span<const double> edges);

}  // namespace fbf
