#include "fbf/spde.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "fbf/error.hpp"
#include "fbf/kernel_quadrature.hpp"
#include "fbf/parallel.hpp"

namespace fbf {

namespace {

constexpr double kPi = std::numbers::pi;

// S(m - 1, i) = sin(m pi i / n)
Eigen::MatrixXd sine_table(int modes, int n) {
  Eigen::MatrixXd s(modes, n + 1);
  for (int m = 1; m <= modes; ++m) {
    for (int i = 0; i <= n; ++i) s(m - 1, i) = std::sin(m * kPi * i / n);
  }
  return s;
}

int grid_of(const Eigen::MatrixXd& psi) {
  if (psi.rows() != psi.cols() || psi.rows() < 2) fail(ErrorCode::GridMismatch, "psi must be a square node table");
  return static_cast<int>(psi.rows()) - 1;
}

std::vector<double> nodes(int n) {
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
  return x;
}

Eigen::MatrixXd fbm_gram(double h, std::span<const double> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k <= i; ++k) r(i, k) = r(k, i) = cov_fbm(h, pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(k)]);
  }
  return r;
}

// Cell averages of K_h(x_{i+1}, .) over the n uniform cells: rows i, columns cells.
Eigen::MatrixXd cell_average_kernel(double h, int n, const QuadratureSpec& q) {
  const auto x = nodes(n);
  const std::span<const double> upper(x.data() + 1, x.size() - 1);
  const auto panels = std::make_shared<const KernelPanels>(upper, upper, q);
  return cell_integrals(panels, *VolterraKernel::get(h, q), x) * static_cast<double>(n);
}

}  // namespace

SpectralGreen::SpectralGreen(int modes) : modes_(modes) {
  if (modes < 1) fail(ErrorCode::InvalidConfig, "mode cutoff must be positive");
}

double SpectralGreen::eigenvalue(int m, int n) { return kPi * kPi * (m * m + n * n); }

double SpectralGreen::eigenfunction(int m, int n, double x, double y) {
  return 2.0 * std::sin(m * kPi * x) * std::sin(n * kPi * y);
}

double SpectralGreen::operator()(double x, double y, double s, double t) const {
  double sum = 0.0;
  for (int m = 1; m <= modes_; ++m) {
    for (int n = 1; n <= modes_; ++n) sum += eigenfunction(m, n, x, y) * eigenfunction(m, n, s, t) / eigenvalue(m, n);
  }
  return sum;
}

double TestFunction::operator()(double x, double y) const {
  if (x < lo || x > hi || y < lo || y > hi) return 0.0;
  return eval(x, y);
}

Eigen::MatrixXd TestFunction::tabulate(int n) const {
  if (n < 1) fail(ErrorCode::GridMismatch, "grid must have at least one cell");
  Eigen::MatrixXd out(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) out(i, j) = (*this)(static_cast<double>(i) / n, static_cast<double>(j) / n);
  }
  return out;
}

TestFunction TestFunction::eigenmode(int m, int n) {
  if (m < 1 || n < 1) fail(ErrorCode::InvalidConfig, "mode indices start at 1");
  return TestFunction{[m, n](double x, double y) { return SpectralGreen::eigenfunction(m, n, x, y); }, 0.0, 1.0,
                      "phi_" + std::to_string(m) + "_" + std::to_string(n)};
}

TestFunction TestFunction::bump(double cx, double cy, double r) {
  if (!(r > 0.0) || cx - r <= 0.0 || cx + r >= 1.0 || cy - r <= 0.0 || cy + r >= 1.0) {
    fail(ErrorCode::InvalidConfig, "bump support must lie inside the open square");
  }
  auto f = [cx, cy, r](double x, double y) {
    const double q = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r);
    return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
  };
  return TestFunction{f, std::min(cx, cy) - r, std::max(cx, cy) + r, "bump"};
}

Eigen::MatrixXd green_convolve(const SpectralGreen& g, const TestFunction& phi, int n) {
  const int m = g.modes();
  if (n < 2 * m) fail(ErrorCode::UnderResolved, "grid must have at least two nodes per mode");
  const Eigen::MatrixXd s = sine_table(m, n);
  const Eigen::MatrixXd values = phi.tabulate(n);
  // Trapezoid projection on 2 sin sin; boundary terms vanish.
  Eigen::MatrixXd coef = (2.0 / (static_cast<double>(n) * n)) * (s * values * s.transpose());
  for (int a = 1; a <= m; ++a) {
    for (int b = 1; b <= m; ++b) coef(a - 1, b - 1) /= SpectralGreen::eigenvalue(a, b);
  }
  Eigen::MatrixXd psi = 2.0 * (s.transpose() * coef * s);
  psi.row(0).setZero();
  psi.row(n).setZero();
  psi.col(0).setZero();
  psi.col(n).setZero();
  return psi;
}

Eigen::MatrixXd neg_laplacian(const Eigen::MatrixXd& psi) {
  const int n = grid_of(psi);
  Eigen::MatrixXd out(n - 1, n - 1);
  const double scale = static_cast<double>(n) * n;
  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      out(i - 1, j - 1) = -scale * (psi(i + 1, j) + psi(i - 1, j) + psi(i, j + 1) + psi(i, j - 1) - 4.0 * psi(i, j));
    }
  }
  return out;
}

Eigen::MatrixXd mixed_differences(const Eigen::MatrixXd& psi) {
  const int n = grid_of(psi);
  return psi.bottomRightCorner(n, n) - psi.topRightCorner(n, n) - psi.bottomLeftCorner(n, n) + psi.topLeftCorner(n, n);
}

Eigen::MatrixXd noise_integrand(const HurstPair& h, const Eigen::MatrixXd& psi, const QuadratureSpec& q) {
  const int n = grid_of(psi);
  const Eigen::MatrixXd d = mixed_differences(psi);
  const Eigen::MatrixXd k1 = cell_average_kernel(h.h1, n, q);
  const Eigen::MatrixXd k2 = h.h2 == h.h1 ? k1 : cell_average_kernel(h.h2, n, q);
  return k1.transpose() * d * k2;
}

double mild_solution_var(const HurstPair& h, const Eigen::MatrixXd& psi) {
  const int n = grid_of(psi);
  const auto x = nodes(n);
  const std::span<const double> upper(x.data() + 1, x.size() - 1);
  const Eigen::MatrixXd d = mixed_differences(psi);
  const Eigen::MatrixXd r1 = fbm_gram(h.h1, upper);
  const Eigen::MatrixXd r2 = h.h2 == h.h1 ? r1 : fbm_gram(h.h2, upper);
  return std::max((r1 * d * r2).cwiseProduct(d).sum(), 0.0);
}

double mild_solution_var(const HurstPair& h, const TestFunction& phi, const SpectralGreen& g, int n) {
  return mild_solution_var(h, green_convolve(g, phi, n));
}

double mild_solution_increment(const HurstPair& a, const HurstPair& b, const Eigen::MatrixXd& psi,
                               const QuadratureSpec& q) {
  const int n = grid_of(psi);
  const auto x = nodes(n);
  const std::span<const double> upper(x.data() + 1, x.size() - 1);
  const Eigen::MatrixXd d = mixed_differences(psi);
  auto cross = [&](double ha, double hb) {
    if (ha == hb) return fbm_gram(ha, upper);
    return kernel_cross_gram(HurstParam(ha), HurstParam(hb), upper, q);
  };
  const Eigen::MatrixXd c1 = cross(a.h1, b.h1);
  const Eigen::MatrixXd c2 = cross(a.h2, b.h2);
  const double mixed = (c1.transpose() * d * c2).cwiseProduct(d).sum();
  return std::max(mild_solution_var(a, psi) + mild_solution_var(b, psi) - 2.0 * mixed, 0.0);
}

Eigen::MatrixXd sample_mild_solution(std::span<const HurstPair> pairs, const Eigen::MatrixXd& psi, std::size_t n,
                                     const SeededStream& stream, const QuadratureSpec& q) {
  const int cells = grid_of(psi);
  if (pairs.empty()) fail(ErrorCode::OutOfRange, "no Hurst pairs");
  std::map<std::pair<double, double>, Eigen::MatrixXd> tables;
  for (const auto& p : pairs) {
    const auto key = std::make_pair(p.h1, p.h2);
    if (!tables.count(key)) tables.emplace(key, noise_integrand(p, psi, q));
  }
  // Flatten each table so a path is one matrix-vector product.
  Eigen::MatrixXd weights(static_cast<Eigen::Index>(cells) * cells, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& t = tables.at(std::make_pair(pairs[k].h1, pairs[k].h2));
    weights.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
  }
  const double cell = 1.0 / cells;  // sqrt of the cell area
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pairs.size()));
  parallel_for(0, n, [&](std::size_t p) {
    SeededStream s = stream.substream(p);
    Eigen::VectorXd dw(weights.rows());
    for (Eigen::Index c = 0; c < dw.size(); ++c) dw(c) = cell * s.normal();
    out.row(static_cast<Eigen::Index>(p)) = (weights.transpose() * dw).transpose();
  });
  return out;
}

ScalingFit verify_spde_h_continuity(const Eigen::MatrixXd& psi, const HurstPair& base, std::span<const double> deltas,
                                    SpdeDirection direction, const QuadratureSpec& q) {
  if (deltas.size() < 2) fail(ErrorCode::TooFewScales, "need at least two deltas");
  std::vector<double> y;
  for (double d : deltas) {
    if (!(d > 0.0 && d < 1.0)) fail(ErrorCode::OutOfRange, "deltas must lie in (0, 1)");
    HurstPair moved = base;
    if (direction != SpdeDirection::Second) moved.h1 += d;
    if (direction != SpdeDirection::First) moved.h2 += d;
    if (moved.h1 > 0.5 || moved.h2 > 0.5) fail(ErrorCode::OutOfRange, "shifted Hurst pair leaves (0, 1/2]");
    const double l = log_factor(d);
    y.push_back(mild_solution_increment(base, moved, psi, q) / (l * l));
  }
  return fit_power_law(deltas, y);
}

}  // namespace fbf
