#include "fbf/kernel_quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fbf/error.hpp"
#include "fbf/parallel.hpp"

namespace fbf {

namespace {

// Geometric levels toward 0 only see an r^a singularity one width away; a
// short rule is already exact to rounding there.
constexpr int kZeroOrder = 24;

std::vector<double> sorted_unique(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// int_0^eps r^x dr
double power_tail(double eps, double x) { return std::pow(eps, x + 1.0) / (x + 1.0); }

}  // namespace

KernelPanels::KernelPanels(std::span<const double> breakpoints, std::span<const double> rows,
                           const QuadratureSpec& q)
    : q_(q), breakpoints_(sorted_unique(breakpoints)), rows_(sorted_unique(rows)) {
  q_.validate();
  if (breakpoints_.empty()) fail(ErrorCode::OutOfRange, "kernel panels need a breakpoint");
  if (!(breakpoints_.front() > 0.0) || !std::isfinite(breakpoints_.back())) {
    fail(ErrorCode::OutOfRange, "breakpoints must be positive and finite");
  }
  std::vector<std::ptrdiff_t> row_of(breakpoints_.size(), -1);
  for (std::size_t n = 0; n < rows_.size(); ++n) {
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), rows_[n]);
    if (it == breakpoints_.end() || *it != rows_[n]) {
      fail(ErrorCode::OutOfRange, "every row must be a breakpoint");
    }
    row_of[static_cast<std::size_t>(it - breakpoints_.begin())] = static_cast<std::ptrdiff_t>(n);
  }
  row_final_.assign(rows_.size(), 0);

  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    const double b = breakpoints_[k];
    const double a = k == 0 ? 0.0 : breakpoints_[k - 1];
    const double c = k + 1 < breakpoints_.size() ? breakpoints_[k + 1] : inf;
    const double wf = std::min({b - a, 0.5 * b, c - b});

    // Singular points seen from inside (a, b): 0, b and c.
    auto split = [&](auto&& self, double u, double v) -> void {
      if (!(v > u)) return;
      const double dist = std::min({u, b - v, c - v});
      if (v - u <= dist * (1.0 + 1e-12)) {
        add_segment(u, v, q_.nodes, -1);
        return;
      }
      const double mid = 0.5 * (u + v);
      self(self, u, mid);
      self(self, mid, v);
    };

    if (k == 0) {
      eps_ = std::ldexp(b, -(q_.zero_levels + 1));
      for (int j = q_.zero_levels; j >= 1; --j) {
        add_segment(std::ldexp(b, -(j + 1)), std::ldexp(b, -j), std::min(q_.nodes, kZeroOrder), -1);
      }
      split(split, 0.5 * b, b - wf);
    } else {
      split(split, a, b - wf);
    }
    add_segment(b - wf, b, q_.nodes, row_of[k]);
    if (row_of[k] >= 0) row_final_[static_cast<std::size_t>(row_of[k])] = segments_.size() - 1;
  }

  weights_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes_.size()));
  for (const auto& s : segments_) {
    const auto rule = gauss_legendre(static_cast<int>(s.count));
    const double hw = 0.5 * (s.hi - s.lo);
    for (std::size_t i = 0; i < s.count; ++i) {
      weights_(static_cast<Eigen::Index>(s.offset + i)) = hw * rule->weights[i];
    }
  }
}

void KernelPanels::add_segment(double lo, double hi, int order, std::ptrdiff_t row) {
  const auto rule = gauss_legendre(order);
  const double mid = 0.5 * (lo + hi);
  const double hw = 0.5 * (hi - lo);
  segments_.push_back(Segment{lo, hi, nodes_.size(), static_cast<std::size_t>(order), row});
  for (double x : rule->nodes) nodes_.push_back(mid + hw * x);
}

KernelTable::KernelTable(PanelsPtr panels, const VolterraKernel& kernel)
    : panels_(std::move(panels)), h_(kernel.h()) {
  const auto& p = *panels_;
  const auto rows = static_cast<Eigen::Index>(p.row_count());
  const auto m = static_cast<Eigen::Index>(p.quadrature().nodes);
  v_ = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(p.node_count()));
  reg_ = Eigen::MatrixXd::Zero(m, rows);
  b_ = Eigen::VectorXd::Zero(rows);
  a_ = kernel.origin_a();
  const auto nodes = p.nodes();

  parallel_for(0, p.row_count(), [&](std::size_t n) {
    const double t = p.rows()[n];
    const auto row = static_cast<Eigen::Index>(n);
    for (const auto& s : p.segments()) {
      if (s.lo >= t) break;
      if (s.row == static_cast<std::ptrdiff_t>(n)) {
        for (std::size_t i = 0; i < s.count; ++i) {
          reg_(static_cast<Eigen::Index>(i), row) = kernel.regular_part(t, nodes[s.offset + i]);
        }
        continue;
      }
      for (std::size_t i = 0; i < s.count; ++i) {
        const double r = nodes[s.offset + i];
        if (r < t) v_(row, static_cast<Eigen::Index>(s.offset + i)) = kernel(t, r);
      }
    }
    b_(row) = kernel.origin_b(t);
  });
}

KernelSide make_side(const KernelTable& table, Eigen::MatrixXd beta) {
  if (beta.rows() != static_cast<Eigen::Index>(table.panels().row_count())) {
    fail(ErrorCode::DimensionMismatch, "coefficient rows must match the kernel rows");
  }
  Eigen::MatrixXd g = table.values().transpose() * beta;
  return KernelSide{table.panels_ptr(), table.h(), std::move(beta), std::move(g), table.regular(),
                    table.origin_a(), table.origin_b()};
}

Eigen::MatrixXd bilinear(const KernelSide& l, const KernelSide& r) {
  if (l.panels != r.panels) fail(ErrorCode::GridMismatch, "kernel tables must share one panel layout");
  const auto& panels = *l.panels;
  const Eigen::MatrixXd& bl = l.beta;
  const Eigen::MatrixXd& br = r.beta;
  Eigen::MatrixXd out = l.g.transpose() * panels.weights().asDiagonal() * r.g;

  const int m = panels.quadrature().nodes;
  const double al = l.h - 0.5;
  const double ar = r.h - 0.5;
  const double gamma = al + ar;
  const auto mom_l = singular_product_moments(m, al);
  const auto mom_r = singular_product_moments(m, ar);
  const auto mom_lr = singular_product_moments(m, gamma);

  for (std::size_t n = 0; n < panels.row_count(); ++n) {
    const auto row = static_cast<Eigen::Index>(n);
    const bool left = !bl.row(row).isZero(0.0);
    const bool right = !br.row(row).isZero(0.0);
    if (!left && !right) continue;
    const auto& s = panels.final_segment(n);
    const double hw = 0.5 * (s.hi - s.lo);
    const auto off = static_cast<Eigen::Index>(s.offset);
    const auto regl = l.reg.col(row);
    const auto regr = r.reg.col(row);
    if (left) {
      const Eigen::VectorXd u = (*mom_l) * regl;
      const Eigen::RowVectorXd term = std::pow(hw, al + 1.0) * (u.transpose() * r.g.middleRows(off, m));
      out.noalias() += bl.row(row).transpose() * term;
    }
    if (right) {
      const Eigen::VectorXd u = (*mom_r) * regr;
      const Eigen::VectorXd term = std::pow(hw, ar + 1.0) * (l.g.middleRows(off, m).transpose() * u);
      out.noalias() += term * br.row(row);
    }
    if (left && right) {
      const double w = std::pow(hw, gamma + 1.0) * regl.dot((*mom_lr) * regr);
      out.noalias() += w * bl.row(row).transpose() * br.row(row);
    }
  }

  // [0, eps]: K ~ A r^a + B(t) r^b with a = h - 1/2, b = 1/2 - h
  const double eps = panels.tail_end();
  const Eigen::VectorXd sl = bl.colwise().sum().transpose();
  const Eigen::VectorXd sr = br.colwise().sum().transpose();
  const Eigen::VectorXd tl = bl.transpose() * l.origin_b;
  const Eigen::VectorXd tr = br.transpose() * r.origin_b;
  const double Al = l.origin_a;
  const double Ar = r.origin_a;
  const double xa = al;
  const double xb = -al;
  const double ya = ar;
  const double yb = -ar;
  if (Al != 0.0 && Ar != 0.0) out.noalias() += Al * Ar * power_tail(eps, xa + ya) * sl * sr.transpose();
  if (Al != 0.0) out.noalias() += Al * power_tail(eps, xa + yb) * sl * tr.transpose();
  if (Ar != 0.0) out.noalias() += Ar * power_tail(eps, xb + ya) * tl * sr.transpose();
  out.noalias() += power_tail(eps, xb + yb) * tl * tr.transpose();
  return out;
}

Eigen::MatrixXd bilinear(const KernelTable& left, const Eigen::MatrixXd& bl, const KernelTable& right,
                         const Eigen::MatrixXd& br) {
  return bilinear(make_side(left, bl), make_side(right, br));
}

Eigen::MatrixXd bilinear(std::span<const KernelCombination> groups) {
  std::vector<KernelSide> sides;
  std::vector<Eigen::Index> start{0};
  sides.reserve(groups.size());
  for (const auto& grp : groups) {
    sides.push_back(make_side(*grp.table, grp.beta));
    start.push_back(start.back() + grp.beta.cols());
  }
  Eigen::MatrixXd out(start.back(), start.back());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < sides.size(); ++i) {
    for (std::size_t j = i; j < sides.size(); ++j) pairs.emplace_back(i, j);
  }
  parallel_for(0, pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const Eigen::MatrixXd block = bilinear(sides[i], sides[j]);
    const auto ni = sides[i].beta.cols();
    const auto nj = sides[j].beta.cols();
    if (i != j) {
      out.block(start[i], start[j], ni, nj) = block;
      out.block(start[j], start[i], nj, ni) = block.transpose();
    } else {
      out.block(start[i], start[i], ni, ni) = 0.5 * (block + block.transpose());
    }
  });
  return out;
}

Eigen::MatrixXd cell_integrals(const PanelsPtr& panels, const VolterraKernel& kernel,
                               std::span<const double> edges) {
  std::vector<const VolterraKernel*> per_row(panels->row_count(), &kernel);
  return cell_integrals(panels, per_row, edges);
}

Eigen::MatrixXd cell_integrals(const PanelsPtr& panels, std::span<const VolterraKernel* const> kernels,
                               std::span<const double> edges) {
  const auto& p = *panels;
  if (kernels.size() != p.row_count()) fail(ErrorCode::LengthMismatch, "one kernel per panel row expected");
  if (edges.size() < 2 || edges.front() != 0.0) {
    fail(ErrorCode::GridMismatch, "cell edges must start at 0");
  }
  for (std::size_t c = 1; c < edges.size(); ++c) {
    if (!(edges[c] > edges[c - 1])) fail(ErrorCode::GridMismatch, "cell edges must increase");
    if (!std::binary_search(p.breakpoints().begin(), p.breakpoints().end(), edges[c])) {
      fail(ErrorCode::GridMismatch, "cell edges must be panel breakpoints");
    }
  }
  const auto rows = static_cast<Eigen::Index>(p.row_count());
  const auto cells = static_cast<Eigen::Index>(edges.size() - 1);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cells);
  const int m = p.quadrature().nodes;
  std::map<double, std::shared_ptr<const Eigen::VectorXd>> moment_table;
  for (const auto* k : kernels) {
    const double a = k->diagonal_exponent();
    if (!moment_table.count(a)) moment_table.emplace(a, singular_moments(m, a));
  }
  const auto nodes = p.nodes();
  const auto& w = p.weights();

  // Cell of each segment.
  std::vector<Eigen::Index> cell_of(p.segments().size());
  for (std::size_t k = 0; k < p.segments().size(); ++k) {
    const auto& s = p.segments()[k];
    const double mid = 0.5 * (s.lo + s.hi);
    cell_of[k] = static_cast<Eigen::Index>(std::upper_bound(edges.begin(), edges.end(), mid) - edges.begin()) - 1;
  }

  const double eps = p.tail_end();
  parallel_for(0, p.row_count(), [&](std::size_t n) {
    const double t = p.rows()[n];
    const auto row = static_cast<Eigen::Index>(n);
    const VolterraKernel& kernel = *kernels[n];
    const double alpha = kernel.diagonal_exponent();
    const auto& moments = moment_table.at(alpha);
    for (std::size_t k = 0; k < p.segments().size(); ++k) {
      const auto& s = p.segments()[k];
      if (s.lo >= t) break;
      const Eigen::Index c = cell_of[k];
      if (c >= cells) continue;
      double sum = 0.0;
      if (s.row == static_cast<std::ptrdiff_t>(n)) {
        const double hw = 0.5 * (s.hi - s.lo);
        for (std::size_t i = 0; i < s.count; ++i) {
          sum += (*moments)(static_cast<Eigen::Index>(i)) * kernel.regular_part(t, nodes[s.offset + i]);
        }
        sum *= std::pow(hw, alpha + 1.0);
      } else {
        for (std::size_t i = 0; i < s.count; ++i) {
          const double r = nodes[s.offset + i];
          if (r < t) sum += w(static_cast<Eigen::Index>(s.offset + i)) * kernel(t, r);
        }
      }
      out(row, c) += sum;
    }
    out(row, 0) += kernel.origin_a() * power_tail(eps, kernel.origin_a_exponent()) +
                   kernel.origin_b(t) * power_tail(eps, kernel.origin_b_exponent());
  });
  return out;
}

}  // namespace fbf
