#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fbf/gram_field.hpp"
#include "fbf/kernels.hpp"
#include "fbf/rng.hpp"

namespace fbf {

// Jitter added to the diagonal, in units of trace / n.
struct JitterPolicy {
  double start = 1e-12;
  double growth = 10.0;
  double max = 1e-6;
};

struct PsdFactor {
  Eigen::MatrixXd lower;  // L with L L^T = sigma + jitter I
  double jitter = 0.0;
};

PsdFactor factor_psd(const Eigen::MatrixXd& sigma, const JitterPolicy& policy = {});

// n x dim matrix of N(0, L L^T) rows; row i uses stream.substream(i).
Eigen::MatrixXd sample_gaussian(const PsdFactor& factor, std::size_t n, const SeededStream& stream);

// Inner discretization of the white noise for Volterra paths.
struct VolterraSettings {
  std::size_t inner_cells = 1024;  // uniform cells on [0, 1], refined by the path grid
  int panel_nodes = 16;            // Gauss nodes per panel for the cell averages
  QuadratureSpec kernel{};         // calibration of K_h
};

// Cell edges (starting at 0) used for a path grid.
std::vector<double> volterra_edges(std::span<const double> grid, const VolterraSettings& settings);

// grid x cells matrix w with B(t_i) = sum_c w(i, c) Z_c, Z standard normal:
// w(i, c) = int_cell K_h(t_i, s) ds / sqrt(|cell|).
Eigen::MatrixXd volterra_weights(const HurstParam& h, std::span<const double> grid,
                                 const VolterraSettings& settings = {});

// n_paths x grid
Eigen::MatrixXd simulate_fbm_volterra(const HurstParam& h, std::span<const double> grid, std::size_t n_paths,
                                      const SeededStream& stream, const VolterraSettings& settings = {});

// One n_paths x grid matrix per entry of h_list, all driven by the same noise.
std::vector<Eigen::MatrixXd> simulate_fbf_1d(std::span<const HurstParam> h_list, std::span<const double> grid,
                                             std::size_t n_paths, const SeededStream& stream,
                                             const VolterraSettings& settings = {});

// Exact fBm on a grid by factorizing the R_h covariance matrix.
Eigen::MatrixXd simulate_fbm_exact(const HurstParam& h, std::span<const double> grid, std::size_t n_paths,
                                   const SeededStream& stream);

struct PointDescriptor {
  double h = 0.5;
  std::vector<double> corner;  // [0, t] corner when the index is a rectangle
  std::string label;
};

struct Provenance {
  std::uint64_t model_fingerprint = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  double jitter = 0.0;
  std::string generator = SeededStream::generator_name();
  std::string normal_method = SeededStream::normal_method();
};

struct FieldSample {
  std::vector<PointDescriptor> points;
  Eigen::MatrixXd values;  // n_samples x n_points
  Provenance provenance;
};

FieldSample simulate_field(std::span<const FieldPoint> points, const FieldModel& model, std::size_t n_paths,
                           const SeededStream& stream);
// Same, with descriptors supplied by the caller.
FieldSample simulate_field(std::span<const FieldPoint> points, std::vector<PointDescriptor> descriptors,
                           const FieldModel& model, std::size_t n_paths, const SeededStream& stream);

// t -> h(t) with range inside [eta, 1/2 - eta].
struct RegularityFunction {
  std::function<double(const RectPoint&)> eval;
  double eta = 0.0;  // 0 means only (0, 1/2] is enforced
  std::string description;
  double holder_exponent = 1.0;  // declared budget |h(s) - h(t)| <= C |s - t|^beta
  double holder_constant = 0.0;

  double operator()(const RectPoint& t) const;
};

FieldSample simulate_mbm_field(const RegularityFunction& hfun, std::span<const RectPoint> grid,
                               const FieldModel& model, std::size_t n_paths, const SeededStream& stream);

// One-dimensional mBm under Lebesgue measure through the Volterra route: every
// grid point gets its own kernel K_{h(t)} over one shared white noise.
FieldSample simulate_mbm_volterra(const RegularityFunction& hfun, std::span<const double> grid, std::size_t n_paths,
                                  const SeededStream& stream, const VolterraSettings& settings = {});

}  // namespace fbf
