#include "fbf/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "fbf/entropy.hpp"
#include "fbf/error.hpp"
#include "fbf/gram_field.hpp"
#include "fbf/io.hpp"
#include "fbf/parallel.hpp"
#include "fbf/regularity.hpp"
#include "fbf/sampler.hpp"
#include "fbf/spde.hpp"
#include "fbf/version.hpp"

namespace fbf {

using nlohmann::json;

namespace {

std::vector<double> dyadic_list(int from, int to) {
  std::vector<double> out;
  for (int k = from; k <= to; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

json common_defaults() {
  return {{"seed", 0},
          {"threads", 0},
          {"dim", 1},
          {"cells", 256},
          {"density", nullptr},
          {"eta", 0.0},
          {"basis_size", 64},
          {"quadrature", {{"nodes", 64}, {"kernel_nodes", 32}, {"tolerance", 1e-8}, {"zero_levels", 40}}}};
}

const std::map<std::string, json>& command_defaults() {
  static const std::map<std::string, json> table = {
      {"covariance", {{"h", {0.5}}, {"h2", nullptr}, {"f", {1.0}}, {"g", {1.0}}}},
      {"simulate-fbm", {{"h", {0.3}}, {"grid", 256}, {"paths", 4}, {"method", "exact"}}},
      {"simulate-fbf", {{"h", {0.2, 0.3, 0.4}}, {"grid", 16}, {"paths", 4}}},
      {"simulate-mbm", {{"hfun", {{"a", 0.2}, {"b", 0.2}}}, {"grid", 16}, {"paths", 4}}},
      {"verify-hinc",
       {{"h", {0.25}},
        {"f", {1.0}},
        {"delta", dyadic_list(3, 7)},
        {"mode", "analytic"},
        {"paths", 10000},
        {"basis_size", 128},
        {"band", {1.8, 2.2}}}},
      {"exponents",
       {{"process", "fbm"},
        {"h", {0.3}},
        {"hfun", {{"a", 0.2}, {"b", 0.2}}},
        {"grid", 2048},
        {"paths", 10},
        {"t0", 0.5},
        {"rho0", 0.25},
        {"levels", 6}}},
      {"lnd", {{"h", {0.2, 0.3, 0.4}}, {"f", {0.5}}, {"radii", {0.2, 0.1, 0.05, 0.025, 0.0125}}, {"tolerance", 0.3}}},
      {"entropy", {{"h", {0.25}}, {"grid", 1025}, {"eps", {0.8, 0.6, 0.5, 0.4, 0.3, 0.25}}}},
      {"smallball", {{"h", {0.3}}, {"grid", 512}, {"paths", 10000}, {"eps", {1.2, 1.1, 1.0, 0.95, 0.9, 0.85, 0.8, 0.76}}}},
      {"spde",
       {{"h", {0.25}},
        {"h2", nullptr},
        {"grid", 128},
        {"modes", 32},
        {"phi", "eigen11"},
        {"delta", dyadic_list(2, 6)},
        {"direction", "both"},
        {"band", {1.8, 2.2}}}},
  };
  return table;
}

// Keys that do not apply to a command stay out of its resolved config.
const std::map<std::string, std::vector<std::string>>& unused_common() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"simulate-fbm", {"dim", "cells", "density", "eta", "basis_size"}},
      {"exponents", {"dim", "cells", "density", "basis_size"}},
      {"entropy", {"dim", "cells", "density", "eta", "basis_size", "quadrature"}},
      {"smallball", {"dim", "cells", "density", "eta", "basis_size", "quadrature"}},
      {"spde", {"dim", "cells", "density", "eta", "basis_size"}},
  };
  return table;
}

void merge_into(json& target, const json& patch, const std::string& where) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (!target.contains(it.key())) fail(ErrorCode::InvalidConfig, "unknown config key '" + where + it.key() + "'");
    json& slot = target[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge_into(slot, it.value(), where + it.key() + ".");
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T get(const json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("config key '") + key + "': " + e.what());
  }
}

std::size_t positive(const json& cfg, const char* key, std::size_t min = 1) {
  const auto v = get<long long>(cfg, key);
  if (v < static_cast<long long>(min)) {
    fail(ErrorCode::InvalidConfig, std::string("config key '") + key + "' must be at least " + std::to_string(min));
  }
  return static_cast<std::size_t>(v);
}

std::vector<double> nonempty_list(const json& cfg, const char* key) {
  auto v = get<std::vector<double>>(cfg, key);
  if (v.empty()) fail(ErrorCode::InvalidConfig, std::string("config key '") + key + "' must not be empty");
  return v;
}

HurstParam hurst(const json& cfg, double h) {
  const double eta = get<double>(cfg, "eta");
  try {
    return eta > 0.0 ? HurstParam(h, eta) : HurstParam(h);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, e.what());
  }
}

QuadratureSpec quadrature(const json& cfg) {
  const json& q = cfg.at("quadrature");
  QuadratureSpec spec;
  spec.nodes = static_cast<int>(positive(q, "nodes", 4));
  spec.kernel_nodes = static_cast<int>(positive(q, "kernel_nodes", 4));
  spec.tolerance = get<double>(q, "tolerance");
  spec.zero_levels = static_cast<int>(positive(q, "zero_levels", 1));
  if (!(spec.tolerance > 0.0)) fail(ErrorCode::InvalidConfig, "quadrature.tolerance must be positive");
  return spec;
}

ProductMeasure product_measure(const json& cfg) {
  const std::size_t dim = positive(cfg, "dim");
  if (dim > 3) fail(ErrorCode::InvalidConfig, "dim must be 1, 2 or 3");
  ProductMeasure m = ProductMeasure::lebesgue(dim);
  const json& density = cfg.at("density");
  if (!density.is_null()) {
    AxisDensity axis(get<std::vector<double>>(density, "x"), get<std::vector<double>>(density, "values"));
    m.axes.assign(dim, axis);
  }
  return m;
}

RectPoint corner(const json& cfg, const char* key, std::size_t dim) {
  auto c = get<std::vector<double>>(cfg, key);
  if (c.size() == 1 && dim > 1) c.assign(dim, c[0]);
  if (c.size() != dim) fail(ErrorCode::InvalidConfig, std::string("corner '") + key + "' has the wrong dimension");
  for (double x : c) {
    if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::InvalidConfig, std::string("corner '") + key + "' leaves [0, 1]");
  }
  return RectPoint(std::move(c));
}

std::string corner_label(const RectPoint& t) {
  std::string s;
  for (std::size_t a = 0; a < t.coords.size(); ++a) s += (a ? " " : "") + format_double(t.coords[a]);
  return s;
}

// Unit-grid corners i/n (and their products for dim > 1), i = 1..n.
std::vector<RectPoint> corner_grid(std::size_t n, std::size_t dim) {
  std::vector<RectPoint> out;
  std::size_t total = 1;
  for (std::size_t a = 0; a < dim; ++a) total *= n;
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> c(dim);
    std::size_t r = k;
    for (std::size_t a = dim; a-- > 0;) {
      c[a] = static_cast<double>(r % n + 1) / static_cast<double>(n);
      r /= n;
    }
    out.emplace_back(std::move(c));
  }
  return out;
}

std::vector<double> unit_grid(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return t;
}

RegularityFunction linear_hfun(const json& cfg) {
  const json& hf = cfg.at("hfun");
  const double a = get<double>(hf, "a");
  const double b = get<double>(hf, "b");
  RegularityFunction fn;
  fn.eval = [a, b](const RectPoint& t) {
    double mean = 0.0;
    for (double x : t.coords) mean += x;
    return a + b * mean / static_cast<double>(t.coords.size());
  };
  fn.eta = get<double>(cfg, "eta");
  fn.description = "h(t) = " + format_double(a) + " + " + format_double(b) + " * mean(t)";
  fn.holder_exponent = 1.0;
  fn.holder_constant = std::abs(b);
  return fn;
}

struct Outcome {
  CsvTable results{{}};
  std::vector<std::string> summary;
  std::optional<json> model;
  std::optional<Provenance> sampling;
};

struct Context {
  const json& cfg;
  std::ostream& log;

  SpacePtr space() const {
    const std::size_t cells = positive(cfg, "cells", 2);
    return make_grid_space(product_measure(cfg), cells);
  }
  std::unique_ptr<FieldModel> model() const {
    return std::make_unique<FieldModel>(space(), positive(cfg, "basis_size"), quadrature(cfg));
  }
  SeededStream stream() const { return SeededStream(get<std::uint64_t>(cfg, "seed")); }
};

std::string verdict(double x, double lo, double hi) { return (x >= lo && x <= hi) ? "PASS" : "FAIL"; }

Outcome cmd_covariance(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto hs = nonempty_list(cfg, "h");
  const std::size_t dim = positive(cfg, "dim");
  const RectPoint tf = corner(cfg, "f", dim);
  const RectPoint tg = corner(cfg, "g", dim);
  const SpacePtr space = ctx.space();
  const IndexFunction f = indicator_of_rect(space, tf);
  const IndexFunction g = indicator_of_rect(space, tg);

  Outcome out;
  out.results = CsvTable({"h", "h2", "f_corner", "g_corner", "value", "truncation_error", "method"});
  std::unique_ptr<FieldModel> model;
  for (double hv : hs) {
    const HurstParam h = hurst(cfg, hv);
    const HurstParam h2 = cfg.at("h2").is_null() ? h : hurst(cfg, get<double>(cfg, "h2"));
    double value = 0.0;
    double err = 0.0;
    std::string method;
    if (h.value() == h2.value()) {
      value = cov_l2(h, f, g);
      method = "closed_form";
    } else {
      if (!model) model = ctx.model();
      value = field_cov(h, f, h2, g, *model);
      // Cauchy-Schwarz bound from the two projection residuals.
      err = std::sqrt(truncation_error(h, f, *model) * cov_l2(h2, g, g)) +
            std::sqrt(truncation_error(h2, g, *model) * cov_l2(h, f, f));
      method = "basis_model";
    }
    out.results.add_row({format_double(h.value()), format_double(h2.value()), corner_label(tf), corner_label(tg),
                         format_double(value), format_double(err), method});
    out.summary.push_back("k(h=" + format_double(h.value()) + ", h2=" + format_double(h2.value()) +
                          ") = " + format_double(value) + " (" + method + ")");
  }
  if (model) out.model = to_json(*model);
  return out;
}

Outcome cmd_simulate_fbm(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto hs = nonempty_list(cfg, "h");
  const auto n = positive(cfg, "grid", 2);
  const auto paths = positive(cfg, "paths");
  const auto method = get<std::string>(cfg, "method");
  if (method != "exact" && method != "volterra") fail(ErrorCode::InvalidConfig, "method must be exact or volterra");
  const auto grid = unit_grid(n);
  const SeededStream stream = ctx.stream();
  VolterraSettings settings;
  settings.kernel = quadrature(cfg);

  Outcome out;
  out.results = CsvTable({"h", "path", "t", "value", "truncation_error"});
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const HurstParam h(hs[k]);
    // Separate stream per h so adding an h does not disturb the others.
    const SeededStream s = stream.substream(k);
    Eigen::MatrixXd values;
    std::vector<double> deficit(n, 0.0);
    if (method == "exact") {
      values = simulate_fbm_exact(h, grid, paths, s);
    } else {
      values = simulate_fbm_volterra(h, grid, paths, s, settings);
      const Eigen::MatrixXd w = volterra_weights(h, grid, settings);
      for (std::size_t i = 0; i < n; ++i) {
        deficit[i] = cov_fbm(h.value(), grid[i], grid[i]) - w.row(static_cast<Eigen::Index>(i)).squaredNorm();
      }
    }
    for (std::size_t p = 0; p < paths; ++p) {
      for (std::size_t i = 0; i < n; ++i) {
        out.results.add_row({format_double(h.value()), std::to_string(p), format_double(grid[i]),
                             format_double(values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i))),
                             format_double(deficit[i])});
      }
    }
    out.summary.push_back("h=" + format_double(h.value()) + ": " + std::to_string(paths) + " paths on " +
                          std::to_string(n) + " points (" + method + ")");
  }
  Provenance p;
  p.seed = stream.seed();
  out.sampling = p;
  return out;
}

void add_field_rows(Outcome& out, const FieldSample& sample, const std::vector<RectPoint>& corners,
                    const std::vector<double>& trunc) {
  out.results = CsvTable({"path", "h", "corner", "value", "truncation_error"});
  for (Eigen::Index p = 0; p < sample.values.rows(); ++p) {
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
      out.results.add_row({std::to_string(p), format_double(sample.points[i].h), corner_label(corners[i]),
                           format_double(sample.values(p, static_cast<Eigen::Index>(i))), format_double(trunc[i])});
    }
  }
  out.sampling = sample.provenance;
}

Outcome cmd_simulate_fbf(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto hs = nonempty_list(cfg, "h");
  const auto n = positive(cfg, "grid");
  const auto paths = positive(cfg, "paths");
  const auto model = ctx.model();
  const auto corners = corner_grid(n, model->space()->dim());

  std::vector<FieldPoint> points;
  std::vector<PointDescriptor> desc;
  std::vector<RectPoint> point_corners;
  std::vector<double> trunc;
  for (double hv : hs) {
    const HurstParam h = hurst(cfg, hv);
    for (const auto& c : corners) {
      IndexFunction f = indicator_of_rect(model->space(), c);
      trunc.push_back(truncation_error(h, f, *model));
      points.push_back(FieldPoint{h, std::move(f)});
      desc.push_back(PointDescriptor{h.value(), c.coords, "t=" + corner_label(c)});
      point_corners.push_back(c);
    }
  }
  const FieldSample sample = simulate_field(points, std::move(desc), *model, paths, ctx.stream());
  Outcome out;
  add_field_rows(out, sample, point_corners, trunc);
  out.model = to_json(*model);
  out.summary.push_back(std::to_string(points.size()) + " field points, " + std::to_string(paths) +
                        " paths, jitter " + format_double(sample.provenance.jitter));
  return out;
}

Outcome cmd_simulate_mbm(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto n = positive(cfg, "grid");
  const auto paths = positive(cfg, "paths");
  const RegularityFunction hfun = linear_hfun(cfg);
  const auto model = ctx.model();
  const auto corners = corner_grid(n, model->space()->dim());
  const FieldSample sample = simulate_mbm_field(hfun, corners, *model, paths, ctx.stream());
  std::vector<double> trunc;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    trunc.push_back(
        truncation_error(HurstParam(sample.points[i].h), indicator_of_rect(model->space(), corners[i]), *model));
  }
  Outcome out;
  add_field_rows(out, sample, corners, trunc);
  out.model = to_json(*model);
  out.summary.push_back(hfun.description + ": " + std::to_string(corners.size()) + " points, " +
                        std::to_string(paths) + " paths");
  return out;
}

Outcome cmd_verify_hinc(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const HurstParam h0 = hurst(cfg, nonempty_list(cfg, "h").front());
  const auto deltas = nonempty_list(cfg, "delta");
  const auto band = get<std::vector<double>>(cfg, "band");
  if (band.size() != 2) fail(ErrorCode::InvalidConfig, "band must hold two numbers");
  const auto mode_name = get<std::string>(cfg, "mode");
  if (mode_name != "analytic" && mode_name != "mc") fail(ErrorCode::InvalidConfig, "mode must be analytic or mc");
  const ScalingMode mode = mode_name == "mc" ? ScalingMode::MonteCarlo : ScalingMode::Analytic;
  const auto model = ctx.model();
  const std::size_t dim = model->space()->dim();
  const RectPoint tf = corner(cfg, "f", dim);
  const IndexFunction f = indicator_of_rect(model->space(), tf);
  const std::size_t paths = mode == ScalingMode::MonteCarlo ? positive(cfg, "paths", 3) : 0;

  const ScalingFit fit = verify_h_increment_scaling(*model, f, h0, deltas, mode, paths, ctx.stream());
  Outcome out;
  out.results = CsvTable({"delta", "h0", "h1", "increment_variance", "std_error", "truncation_error"});
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const HurstParam h1(h0.value() + deltas[k]);
    const double trunc = truncation_error(h0, f, *model) + truncation_error(h1, f, *model);
    out.results.add_row({format_double(deltas[k]), format_double(h0.value()), format_double(h1.value()),
                         format_double(fit.estimates[k]),
                         format_double(fit.std_errors.empty() ? 0.0 : fit.std_errors[k]), format_double(trunc)});
  }
  out.results.add_row({"slope", format_double(h0.value()), "", format_double(fit.slope), format_double(fit.slope_se),
                       "0"});
  out.model = to_json(*model);
  out.summary.push_back("h0=" + format_double(h0.value()) + " f=1[0," + corner_label(tf) + "] mode=" + mode_name);
  out.summary.push_back("slope " + format_double(fit.slope) + " (se " + format_double(fit.slope_se) + ", r^2 " +
                        format_double(fit.r_squared) + ")");
  out.summary.push_back("band [" + format_double(band[0]) + ", " + format_double(band[1]) +
                        "]: " + verdict(fit.slope, band[0], band[1]));
  if (mode == ScalingMode::MonteCarlo) {
    Provenance p;
    p.seed = get<std::uint64_t>(cfg, "seed");
    p.model_fingerprint = model->fingerprint();
    out.sampling = p;
  }
  return out;
}

Outcome cmd_exponents(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto process = get<std::string>(cfg, "process");
  if (process != "fbm" && process != "mbm") fail(ErrorCode::InvalidConfig, "process must be fbm or mbm");
  const auto n = positive(cfg, "grid", 4);
  const auto paths = positive(cfg, "paths");
  const double t0v = get<double>(cfg, "t0");
  if (!(t0v > 0.0 && t0v < 1.0)) fail(ErrorCode::InvalidConfig, "t0 must lie in (0, 1)");
  const auto radii = geometric_radii(get<double>(cfg, "rho0"), static_cast<int>(positive(cfg, "levels")));
  const RectPoint t0{t0v};
  const ProductMeasure lebesgue = ProductMeasure::lebesgue(1);
  const SeededStream stream = ctx.stream();

  Outcome out;
  out.results = CsvTable({"process", "h_true", "path", "t0", "pointwise", "pointwise_std_error", "local",
                          "local_std_error"});
  auto emit = [&](double h_true, std::size_t p, const ExponentEstimate& pw, const ExponentEstimate& lc) {
    out.results.add_row({process, format_double(h_true), std::to_string(p), format_double(t0v),
                         format_double(pw.alpha_hat), format_double(pw.half_width), format_double(lc.alpha_hat),
                         format_double(lc.half_width)});
  };
  if (process == "fbm") {
    const auto grid = unit_grid(n);
    std::vector<RectPoint> corners;
    for (double t : grid) corners.push_back(RectPoint{t});
    const auto hs = nonempty_list(cfg, "h");
    for (std::size_t k = 0; k < hs.size(); ++k) {
      const HurstParam h(hs[k]);
      const Eigen::MatrixXd values = simulate_fbm_exact(h, grid, paths, stream.substream(k));
      std::vector<double> pws;
      for (std::size_t p = 0; p < paths; ++p) {
        const Eigen::VectorXd row = values.row(static_cast<Eigen::Index>(p)).transpose();
        const std::span<const double> path(row.data(), static_cast<std::size_t>(row.size()));
        const auto pw = estimate_pointwise_exponent(corners, path, t0, radii, lebesgue);
        const auto lc = estimate_local_exponent(corners, path, t0, radii, lebesgue);
        pws.push_back(pw.alpha_hat);
        emit(h.value(), p, pw, lc);
      }
      std::sort(pws.begin(), pws.end());
      const double median = pws.size() % 2 ? pws[pws.size() / 2] : 0.5 * (pws[pws.size() / 2 - 1] + pws[pws.size() / 2]);
      out.summary.push_back("fbm h=" + format_double(h.value()) + ": median pointwise exponent " +
                            format_double(median));
    }
    Provenance pv;
    pv.seed = stream.seed();
    out.sampling = pv;
  } else {
    const RegularityFunction hfun = linear_hfun(cfg);
    // Volterra route on the grid points k / grid inside the largest ball.
    std::vector<double> grid;
    for (std::size_t k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n);
      if (std::abs(t - t0v) <= radii.front() + 1e-12) grid.push_back(t);
    }
    VolterraSettings settings;
    settings.kernel = quadrature(cfg);
    const FieldSample sample = simulate_mbm_volterra(hfun, grid, paths, stream, settings);
    const double h_true = hfun(t0);
    std::size_t within = 0;
    for (std::size_t p = 0; p < paths; ++p) {
      const auto pw = estimate_pointwise_exponent(sample, p, t0, radii, lebesgue);
      const auto lc = estimate_local_exponent(sample, p, t0, radii, lebesgue);
      if (std::abs(pw.alpha_hat - h_true) <= 0.1) ++within;
      emit(h_true, p, pw, lc);
    }
    out.sampling = sample.provenance;
    out.summary.push_back(hfun.description + ": " + std::to_string(within) + "/" + std::to_string(paths) +
                          " pointwise estimates within 0.1 of h(t0)=" + format_double(h_true));
  }
  return out;
}

Outcome cmd_lnd(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto hs = nonempty_list(cfg, "h");
  const auto radii = nonempty_list(cfg, "radii");
  const double tol = get<double>(cfg, "tolerance");
  const auto model = ctx.model();
  const RectPoint tf = corner(cfg, "f", model->space()->dim());
  const IndexFunction f = indicator_of_rect(model->space(), tf);

  Outcome out;
  out.results = CsvTable({"h", "radius", "conditional_variance", "truncation_error"});
  for (double hv : hs) {
    const HurstParam h = hurst(cfg, hv);
    const ScalingFit fit = lnd_scaling_probe(*model, h, f, radii);
    const double trunc = truncation_error(h, f, *model);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      out.results.add_row({format_double(h.value()), format_double(radii[k]), format_double(fit.estimates[k]),
                           format_double(trunc)});
    }
    out.results.add_row({format_double(h.value()), "slope", format_double(fit.slope), format_double(fit.slope_se)});
    const double target = 2.0 * h.value();
    out.summary.push_back("h=" + format_double(h.value()) + ": slope " + format_double(fit.slope) + " vs 2h=" +
                          format_double(target) + " " + verdict(fit.slope, target - tol, target + tol));
  }
  out.model = to_json(*model);
  return out;
}

Outcome cmd_entropy(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto hs = nonempty_list(cfg, "h");
  const auto n = positive(cfg, "grid", 2);
  auto eps = nonempty_list(cfg, "eps");
  std::sort(eps.begin(), eps.end(), std::greater<>());
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / static_cast<double>(n - 1);

  Outcome out;
  out.results = CsvTable({"h", "eps", "covering_upper", "covering_lower", "packing", "reference", "trusted",
                          "truncation_error"});
  for (double hv : hs) {
    const HurstParam h(hv);
    MetricSample sample;
    sample.size = n;
    sample.dist = [&t, e = h.value()](std::size_t i, std::size_t j) { return std::pow(std::abs(t[i] - t[j]), e); };
    sample.description = "|s - t|^h on a uniform grid of [0, 1]";
    sample.resolution = std::pow(1.0 / static_cast<double>(n - 1), h.value());
    const EntropyProfile profile = entropy_profile(sample, eps);
    for (std::size_t k = 0; k < eps.size(); ++k) {
      out.results.add_row({format_double(h.value()), format_double(eps[k]), std::to_string(profile.upper[k]),
                           std::to_string(profile.lower[k]), std::to_string(profile.packing[k]),
                           format_double(std::pow(eps[k], -1.0 / h.value())), profile.trusted[k] ? "1" : "0",
                           format_double(profile.resolution)});
    }
    const DudleyResult dudley = dudley_integral(profile);
    out.summary.push_back("h=" + format_double(h.value()) + ": Dudley integral " + format_double(dudley.value) +
                          " + tail " + format_double(dudley.tail) + ", exponent " + format_double(dudley.exponent) +
                          ", " + to_string(dudley.verdict));
  }
  return out;
}

Outcome cmd_smallball(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const HurstParam h(nonempty_list(cfg, "h").front());
  const auto n = positive(cfg, "grid", 2);
  const auto paths = positive(cfg, "paths");
  const auto eps = nonempty_list(cfg, "eps");
  const auto grid = unit_grid(n);
  const SeededStream stream = ctx.stream();
  const Eigen::MatrixXd values = simulate_fbm_exact(h, grid, paths, stream);
  const Eigen::VectorXd sups = values.cwiseAbs().rowwise().maxCoeff();
  const auto points = small_ball_from_sups(sups, eps);

  Outcome out;
  out.results = CsvTable({"h", "eps", "hits", "trials", "p_hat", "std_error", "wilson_lo", "wilson_hi"});
  for (const auto& p : points) {
    const double se = std::sqrt(p.p_hat * (1.0 - p.p_hat) / static_cast<double>(p.trials));
    out.results.add_row({format_double(h.value()), format_double(p.eps), std::to_string(p.hits),
                         std::to_string(p.trials), format_double(p.p_hat), format_double(se), format_double(p.lo),
                         format_double(p.hi)});
  }
  try {
    const SmallBallFit fit = small_ball_slope(points);
    out.summary.push_back("slope of log(-log P) vs log(1/eps): " + format_double(fit.slope) + " over " +
                          std::to_string(fit.levels) + " levels; 1/h = " + format_double(1.0 / h.value()));
  } catch (const Error& e) {
    out.summary.push_back(std::string("no slope: ") + e.what());
  }
  Provenance pv;
  pv.seed = stream.seed();
  out.sampling = pv;
  return out;
}

TestFunction spde_phi(const std::string& name) {
  if (name == "eigen11") return TestFunction::eigenmode(1, 1);
  if (name == "eigen12") return TestFunction::eigenmode(1, 2);
  if (name == "bump") return TestFunction::bump(0.5, 0.5, 0.3);
  fail(ErrorCode::InvalidConfig, "phi must be eigen11, eigen12 or bump");
}

Outcome cmd_spde(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double h1 = nonempty_list(cfg, "h").front();
  const double h2 = cfg.at("h2").is_null() ? h1 : get<double>(cfg, "h2");
  const HurstPair base{HurstParam(h1).value(), HurstParam(h2).value()};
  const int n = static_cast<int>(positive(cfg, "grid", 4));
  const int modes = static_cast<int>(positive(cfg, "modes"));
  const auto deltas = nonempty_list(cfg, "delta");
  const auto band = get<std::vector<double>>(cfg, "band");
  if (band.size() != 2) fail(ErrorCode::InvalidConfig, "band must hold two numbers");
  const auto dir_name = get<std::string>(cfg, "direction");
  SpdeDirection dir = SpdeDirection::Both;
  if (dir_name == "first") {
    dir = SpdeDirection::First;
  } else if (dir_name == "second") {
    dir = SpdeDirection::Second;
  } else if (dir_name != "both") {
    fail(ErrorCode::InvalidConfig, "direction must be both, first or second");
  }
  const QuadratureSpec q = quadrature(cfg);
  const TestFunction phi = spde_phi(get<std::string>(cfg, "phi"));
  const SpectralGreen green(modes);
  const Eigen::MatrixXd psi = green_convolve(green, phi, n);
  // The half-resolution grid measures the discretization error.
  const bool coarse_ok = n / 2 >= 2 * modes;
  const Eigen::MatrixXd psi_coarse = coarse_ok ? green_convolve(green, phi, n / 2) : Eigen::MatrixXd();

  Outcome out;
  out.results = CsvTable({"quantity", "h1", "h2", "delta", "value", "truncation_error"});
  const double var = mild_solution_var(base, psi);
  const double var_err = coarse_ok ? std::abs(var - mild_solution_var(base, psi_coarse)) : std::nan("");
  out.results.add_row({"variance", format_double(base.h1), format_double(base.h2), "0", format_double(var),
                       format_double(var_err)});

  const ScalingFit fit = verify_spde_h_continuity(psi, base, deltas, dir, q);
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    HurstPair moved = base;
    if (dir != SpdeDirection::Second) moved.h1 += deltas[k];
    if (dir != SpdeDirection::First) moved.h2 += deltas[k];
    const double l = log_factor(deltas[k]);
    double err = std::nan("");
    if (coarse_ok) err = std::abs(fit.estimates[k] - mild_solution_increment(base, moved, psi_coarse, q) / (l * l));
    out.results.add_row({"normalized_increment", format_double(moved.h1), format_double(moved.h2),
                         format_double(deltas[k]), format_double(fit.estimates[k]), format_double(err)});
  }
  out.results.add_row({"slope", format_double(base.h1), format_double(base.h2), "", format_double(fit.slope),
                       format_double(fit.slope_se)});
  out.summary.push_back("phi=" + phi.name + " grid=" + std::to_string(n) + " modes=" + std::to_string(modes));
  out.summary.push_back("variance " + format_double(var));
  out.summary.push_back("increment slope after L(delta)^2 division " + format_double(fit.slope) + ": " +
                        verdict(fit.slope, band[0], band[1]));
  return out;
}

using Handler = Outcome (*)(const Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = {
      {"covariance", cmd_covariance},   {"simulate-fbm", cmd_simulate_fbm}, {"simulate-fbf", cmd_simulate_fbf},
      {"simulate-mbm", cmd_simulate_mbm}, {"verify-hinc", cmd_verify_hinc}, {"exponents", cmd_exponents},
      {"lnd", cmd_lnd},                 {"entropy", cmd_entropy},         {"smallball", cmd_smallball},
      {"spde", cmd_spde},
  };
  return table;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : handlers()) v.push_back(name);
    return v;
  }();
  return names;
}

json default_config(const std::string& command) {
  const auto it = command_defaults().find(command);
  if (it == command_defaults().end()) fail(ErrorCode::InvalidConfig, "unknown command '" + command + "'");
  json cfg = common_defaults();
  if (const auto u = unused_common().find(command); u != unused_common().end()) {
    for (const auto& key : u->second) cfg.erase(key);
  }
  for (auto kv = it->second.begin(); kv != it->second.end(); ++kv) cfg[kv.key()] = kv.value();
  return cfg;
}

json resolve_config(const std::string& command, const json& user) {
  json cfg = default_config(command);
  if (user.is_null()) return cfg;
  if (!user.is_object()) fail(ErrorCode::InvalidConfig, "config must be a JSON object");
  json patch = user;
  patch.erase("command");
  merge_into(cfg, patch, "");
  // A scalar where a list is expected is taken as a one-element list.
  for (const char* key : {"h", "eps", "delta", "radii"}) {
    if (cfg.contains(key) && cfg[key].is_number()) cfg[key] = json::array({cfg[key]});
  }
  return cfg;
}

void run_command(const std::string& command, const json& config, const std::filesystem::path& out,
                 std::ostream& log) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) fail(ErrorCode::InvalidConfig, "unknown command '" + command + "'");
  set_thread_count(static_cast<unsigned>(get<long long>(config, "threads") < 0 ? 0 : get<long long>(config, "threads")));

  const Context ctx{config, log};
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome = it->second(ctx);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out.string() + ": " + ec.message());

  outcome.results.write(out / "results.csv");

  json prov = {{"command", command},
               {"config", config},
               {"version", kVersion},
               {"generator", SeededStream::generator_name()},
               {"normal_method", SeededStream::normal_method()}};
  if (config.contains("seed")) prov["seed"] = config.at("seed");
  if (outcome.model) {
    prov["model"] = *outcome.model;
    prov["model_fingerprint"] = outcome.model->at("fingerprint");
  }
  if (outcome.sampling) prov["sampling"] = to_json(*outcome.sampling);
  write_json(out / "provenance.json", prov);

  std::ostringstream summary;
  summary << "command: " << command << "\n";
  summary << "version: " << kVersion << "\n";
  summary << "finished: " << timestamp() << " (" << std::fixed << std::setprecision(2) << seconds << " s)\n";
  for (const auto& line : outcome.summary) summary << line << "\n";
  write_text(out / "summary.txt", summary.str());
  for (const auto& line : outcome.summary) log << line << "\n";
}

int run(const std::string& command, const json& user_config, const std::filesystem::path& out, std::ostream& log) {
  try {
    const json cfg = resolve_config(command, user_config);
    run_command(command, cfg, out, log);
    return kExitOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? kExitNumerical : kExitInvalid;
  } catch (const json::exception& e) {
    log << "error: invalid config: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace fbf
