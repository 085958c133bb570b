#include "fbf/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbf/error.hpp"
#include "fbf/kernel_quadrature.hpp"
#include "fbf/parallel.hpp"

namespace fbf {

PsdFactor factor_psd(const Eigen::MatrixXd& sigma, const JitterPolicy& policy) {
  if (sigma.rows() != sigma.cols()) fail(ErrorCode::DimensionMismatch, "covariance must be square");
  const Eigen::Index n = sigma.rows();
  PsdFactor out;
  if (n == 0) return out;
  const double scale = sigma.cwiseAbs().maxCoeff();
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300)) {
    fail(ErrorCode::DimensionMismatch, "covariance must be symmetric");
  }
  if (scale == 0.0) {
    out.lower = Eigen::MatrixXd::Zero(n, n);
    return out;
  }
  const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
  const double unit = std::max(sym.trace(), 0.0) / static_cast<double>(n);
  double jitter = 0.0;
  while (true) {
    Eigen::LLT<Eigen::MatrixXd> llt(sym + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
      out.lower = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
    jitter = jitter == 0.0 ? policy.start * unit : jitter * policy.growth;
    if (!(unit > 0.0) || jitter > policy.max * unit * (1.0 + 1e-12)) {
      fail(ErrorCode::NotPSD, "covariance is not positive semidefinite within the jitter budget");
    }
  }
}

Eigen::MatrixXd sample_gaussian(const PsdFactor& factor, std::size_t n, const SeededStream& stream) {
  const Eigen::Index dim = factor.lower.rows();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
  parallel_for(0, n, [&](std::size_t i) {
    SeededStream s = stream.substream(i);
    Eigen::VectorXd z(dim);
    for (Eigen::Index k = 0; k < dim; ++k) z(k) = s.normal();
    out.row(static_cast<Eigen::Index>(i)) = (factor.lower.triangularView<Eigen::Lower>() * z).transpose();
  });
  return out;
}

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) fail(ErrorCode::OutOfRange, "empty path grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) fail(ErrorCode::OutOfRange, "grid points must lie in (0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) fail(ErrorCode::OutOfRange, "grid must be increasing");
  }
}

// Shared noise: one substream per path, one normal per cell.
Eigen::MatrixXd cell_noise(std::size_t n_paths, std::size_t cells, const SeededStream& stream) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(n_paths));
  parallel_for(0, n_paths, [&](std::size_t p) {
    SeededStream s = stream.substream(p);
    for (std::size_t c = 0; c < cells; ++c) z(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p)) = s.normal();
  });
  return z;
}

}  // namespace

std::vector<double> volterra_edges(std::span<const double> grid, const VolterraSettings& settings) {
  check_grid(grid);
  if (settings.inner_cells < 1) fail(ErrorCode::InvalidConfig, "need at least one inner cell");
  const double top = grid.back();
  std::vector<double> edges{0.0};
  const auto n = settings.inner_cells;
  for (std::size_t j = 1; j <= n; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(n);
    if (x < top) edges.push_back(x);
  }
  edges.insert(edges.end(), grid.begin(), grid.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

Eigen::MatrixXd volterra_weights(const HurstParam& h, std::span<const double> grid, const VolterraSettings& settings) {
  const auto edges = volterra_edges(grid, settings);
  QuadratureSpec q = settings.kernel;
  q.nodes = settings.panel_nodes;
  const auto panels = std::make_shared<const KernelPanels>(std::span(edges).subspan(1), grid, q);
  const auto kernel = VolterraKernel::get(h.value(), settings.kernel);
  Eigen::MatrixXd w = cell_integrals(panels, *kernel, edges);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    w.col(c) /= std::sqrt(edges[static_cast<std::size_t>(c) + 1] - edges[static_cast<std::size_t>(c)]);
  }
  return w;
}

std::vector<Eigen::MatrixXd> simulate_fbf_1d(std::span<const HurstParam> h_list, std::span<const double> grid,
                                             std::size_t n_paths, const SeededStream& stream,
                                             const VolterraSettings& settings) {
  if (h_list.empty()) fail(ErrorCode::OutOfRange, "empty Hurst list");
  const auto edges = volterra_edges(grid, settings);
  const Eigen::MatrixXd z = cell_noise(n_paths, edges.size() - 1, stream);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& h : h_list) {
    const Eigen::MatrixXd w = volterra_weights(h, grid, settings);
    out.push_back((w * z).transpose());
  }
  return out;
}

Eigen::MatrixXd simulate_fbm_volterra(const HurstParam& h, std::span<const double> grid, std::size_t n_paths,
                                      const SeededStream& stream, const VolterraSettings& settings) {
  const HurstParam one[1] = {h};
  return std::move(simulate_fbf_1d(one, grid, n_paths, stream, settings).front());
}

Eigen::MatrixXd simulate_fbm_exact(const HurstParam& h, std::span<const double> grid, std::size_t n_paths,
                                   const SeededStream& stream) {
  check_grid(grid);
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      sigma(i, j) = sigma(j, i) =
          cov_fbm(h.value(), grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(j)]);
    }
  }
  return sample_gaussian(factor_psd(sigma), n_paths, stream);
}

FieldSample simulate_field(std::span<const FieldPoint> points, std::vector<PointDescriptor> descriptors,
                           const FieldModel& model, std::size_t n_paths, const SeededStream& stream) {
  if (descriptors.size() != points.size()) fail(ErrorCode::LengthMismatch, "one descriptor per point");
  const Eigen::MatrixXd sigma = assemble_cov_matrix(points, model);
  const PsdFactor factor = factor_psd(sigma);
  FieldSample out;
  out.points = std::move(descriptors);
  out.values = sample_gaussian(factor, n_paths, stream);
  out.provenance.model_fingerprint = model.fingerprint();
  out.provenance.seed = stream.seed();
  out.provenance.stream_id = stream.stream_id();
  out.provenance.jitter = factor.jitter;
  return out;
}

FieldSample simulate_field(std::span<const FieldPoint> points, const FieldModel& model, std::size_t n_paths,
                           const SeededStream& stream) {
  std::vector<PointDescriptor> desc;
  for (std::size_t i = 0; i < points.size(); ++i) {
    desc.push_back(PointDescriptor{points[i].h.value(), {}, "p" + std::to_string(i)});
  }
  return simulate_field(points, std::move(desc), model, n_paths, stream);
}

double RegularityFunction::operator()(const RectPoint& t) const {
  if (!eval) fail(ErrorCode::InvalidConfig, "regularity function has no evaluator");
  const double h = eval(t);
  if (!(h > 0.0 && h <= 0.5)) fail(ErrorCode::RangeViolation, "regularity function left (0, 1/2]");
  if (eta > 0.0 && (h < eta || h > 0.5 - eta)) {
    fail(ErrorCode::RangeViolation, "regularity function left its guard band");
  }
  return h;
}

FieldSample simulate_mbm_field(const RegularityFunction& hfun, std::span<const RectPoint> grid,
                               const FieldModel& model, std::size_t n_paths, const SeededStream& stream) {
  std::vector<FieldPoint> points;
  std::vector<PointDescriptor> desc;
  for (const auto& t : grid) {
    t.validate();
    const double h = hfun(t);
    points.push_back(FieldPoint{HurstParam(h), indicator_of_rect(model.space(), t)});
    std::ostringstream label;
    label.precision(17);
    label << "t=";
    for (std::size_t a = 0; a < t.dim(); ++a) label << (a ? ";" : "") << t.coords[a];
    desc.push_back(PointDescriptor{h, t.coords, label.str()});
  }
  return simulate_field(points, std::move(desc), model, n_paths, stream);
}

FieldSample simulate_mbm_volterra(const RegularityFunction& hfun, std::span<const double> grid, std::size_t n_paths,
                                  const SeededStream& stream, const VolterraSettings& settings) {
  check_grid(grid);
  const auto edges = volterra_edges(grid, settings);
  QuadratureSpec q = settings.kernel;
  q.nodes = settings.panel_nodes;
  const auto panels = std::make_shared<const KernelPanels>(std::span(edges).subspan(1), grid, q);

  FieldSample out;
  std::vector<std::shared_ptr<const VolterraKernel>> kernels(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const RectPoint t{grid[i]};
    const double h = HurstParam(hfun(t)).value();
    std::ostringstream label;
    label.precision(17);
    label << "t=" << grid[i];
    out.points.push_back(PointDescriptor{h, t.coords, label.str()});
  }
  parallel_for(0, grid.size(), [&](std::size_t i) { kernels[i] = VolterraKernel::get(out.points[i].h, settings.kernel); });
  // Panel rows are the grid points in increasing order, so row i is grid[i].
  std::vector<const VolterraKernel*> per_row;
  for (const auto& k : kernels) per_row.push_back(k.get());
  Eigen::MatrixXd w = cell_integrals(panels, per_row, edges);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    w.col(c) /= std::sqrt(edges[static_cast<std::size_t>(c) + 1] - edges[static_cast<std::size_t>(c)]);
  }
  const Eigen::MatrixXd z = cell_noise(n_paths, edges.size() - 1, stream);
  out.values = (w * z).transpose();
  out.provenance.seed = stream.seed();
  out.provenance.stream_id = stream.stream_id();
  return out;
}

}  // namespace fbf
