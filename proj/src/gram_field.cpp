#include "fbf/gram_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbf/error.hpp"
#include "fbf/parallel.hpp"

namespace fbf {

std::vector<double> dyadic_points(std::size_t n) {
  if (n < 1) fail(ErrorCode::OutOfRange, "need at least one dyadic point");
  std::vector<double> out{1.0};
  for (int level = 1; out.size() < n; ++level) {
    const double step = std::ldexp(1.0, -level);
    for (std::int64_t k = 1; k < (std::int64_t{1} << level) && out.size() < n; k += 2) {
      out.push_back(static_cast<double>(k) * step);
    }
  }
  return out;
}

Eigen::VectorXd CholeskyBasis::coordinates(const Eigen::VectorXd& v) const {
  Eigen::VectorXd sub(static_cast<Eigen::Index>(retained.size()));
  for (std::size_t i = 0; i < retained.size(); ++i) sub(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(retained[i]));
  return factor.triangularView<Eigen::Lower>().solve(sub);
}

Eigen::MatrixXd CholeskyBasis::coordinates(const Eigen::MatrixXd& v) const {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(retained.size()), v.cols());
  for (std::size_t i = 0; i < retained.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = v.row(static_cast<Eigen::Index>(retained[i]));
  return factor.triangularView<Eigen::Lower>().solve(sub);
}

CholeskyBasis orthonormalize(const Eigen::MatrixXd& gram, double drop_tol) {
  if (gram.rows() != gram.cols()) fail(ErrorCode::DimensionMismatch, "Gram matrix must be square");
  if (!(drop_tol > 0.0)) fail(ErrorCode::OutOfRange, "drop tolerance must be positive");
  const Eigen::Index n = gram.rows();
  const double scale = drop_tol * std::max(gram.trace(), 0.0);
  CholeskyBasis out;
  out.gram = gram;
  // Rows of the factor for the retained indices, grown one at a time.
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd col(k);
    for (Eigen::Index i = 0; i < k; ++i) col(i) = gram(static_cast<Eigen::Index>(out.retained[i]), j);
    const Eigen::VectorXd y = l.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(col);
    const double pivot = gram(j, j) - y.squaredNorm();
    if (pivot < -scale) fail(ErrorCode::NotPSD, "Gram matrix has a negative pivot");
    if (pivot <= scale) {
      out.dropped.push_back(static_cast<std::size_t>(j));
      continue;
    }
    l.row(k).head(k) = y.transpose();
    l(k, k) = std::sqrt(pivot);
    out.retained.push_back(static_cast<std::size_t>(j));
    ++k;
  }
  out.factor = l.topLeftCorner(k, k);
  return out;
}

namespace {

// Level-by-level dyadic corners of [0,1]^d with coordinates in breadth-first order.
class CornerEnumerator {
 public:
  explicit CornerEnumerator(std::size_t dim) : dim_(dim) {}

  // Corners first appearing at `level`.
  std::vector<RectPoint> level(int level) const {
    const std::vector<double> values = dyadic_points(std::size_t{1} << level);
    const double coarse = level == 0 ? 2.0 : std::ldexp(1.0, -(level - 1));
    std::vector<RectPoint> out;
    std::vector<std::size_t> idx(dim_, 0);
    while (true) {
      std::vector<double> c(dim_);
      bool fresh = level == 0;
      for (std::size_t a = 0; a < dim_; ++a) {
        c[a] = values[idx[a]];
        if (std::fmod(c[a], coarse) != 0.0) fresh = true;
      }
      if (fresh) out.emplace_back(std::move(c));
      std::size_t a = dim_;
      while (a > 0) {
        --a;
        if (++idx[a] < values.size()) break;
        idx[a] = 0;
        if (a == 0) return out;
      }
      if (dim_ == 0) return out;
    }
  }

 private:
  std::size_t dim_;
};

}  // namespace

std::vector<RectPoint> default_basis_corners(const SpacePtr& space, std::size_t n) {
  if (!space) fail(ErrorCode::InvalidConfig, "missing measure space");
  if (space->dim() == 0) fail(ErrorCode::DimensionMismatch, "dyadic rectangles need coordinates");
  if (n < 1) fail(ErrorCode::OutOfRange, "basis size must be positive");
  if (n > space->size()) fail(ErrorCode::CannotReachRank, "more basis members than atoms");

  std::vector<RectPoint> corners;
  std::vector<IndexFunction> members;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double trace = 0.0;
  const CornerEnumerator enumerator(space->dim());
  int empty_levels = 0;
  for (int lev = 0; corners.size() < n; ++lev) {
    if (lev > 40 || empty_levels >= 2) {
      fail(ErrorCode::CannotReachRank, "discretization too coarse for the requested basis size");
    }
    if (std::ldexp(1.0, lev * static_cast<int>(space->dim())) > 1e7) {
      fail(ErrorCode::CannotReachRank, "dyadic enumeration exhausted before reaching the rank");
    }
    bool added = false;
    for (auto& corner : enumerator.level(lev)) {
      if (corners.size() == n) break;
      IndexFunction f = indicator_of_rect(space, corner);
      const double d = norm_sq(f);
      if (!(d > 0.0)) continue;
      const auto k = static_cast<Eigen::Index>(members.size());
      Eigen::VectorXd col(k);
      for (Eigen::Index i = 0; i < k; ++i) col(i) = inner(members[static_cast<std::size_t>(i)], f);
      const Eigen::VectorXd y = l.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(col);
      const double pivot = d - y.squaredNorm();
      if (pivot <= 1e-10 * (trace + d)) continue;
      l.row(k).head(k) = y.transpose();
      l(k, k) = std::sqrt(pivot);
      trace += d;
      members.push_back(std::move(f));
      corners.push_back(std::move(corner));
      added = true;
    }
    empty_levels = added ? 0 : empty_levels + 1;
  }
  return corners;
}

std::vector<IndexFunction> default_basis(const SpacePtr& space, std::size_t n) {
  std::vector<IndexFunction> out;
  for (const auto& c : default_basis_corners(space, n)) out.push_back(indicator_of_rect(space, c));
  return out;
}

FieldModel::FieldModel(SpacePtr space, std::size_t basis_size, QuadratureSpec q)
    : FieldModel(space, default_basis_corners(space, basis_size), q) {}

FieldModel::FieldModel(SpacePtr space, std::vector<RectPoint> corners, QuadratureSpec q)
    : space_(std::move(space)), q_(q), corners_(std::move(corners)) {
  q_.validate();
  if (corners_.empty()) fail(ErrorCode::OutOfRange, "basis size must be positive");
  dyadics_ = dyadic_points(corners_.size());
  for (const auto& c : corners_) basis_.push_back(indicator_of_rect(space_, c));
  init_gram();
  // k_{1/2} Gram = m(f_i f_j)
  const auto n = nf_.size();
  const Eigen::MatrixXd half = 0.5 * (nf_.replicate(1, n) + nf_.transpose().replicate(n, 1) - dsq_);
  if (!orthonormalize(half).dropped.empty()) {
    fail(ErrorCode::CannotReachRank, "index basis is numerically dependent");
  }
  panels_ = std::make_shared<const KernelPanels>(dyadics_, dyadics_, q_);
  const auto rows = panels_->rows();
  for (double t : dyadics_) {
    panel_row_.push_back(static_cast<Eigen::Index>(std::lower_bound(rows.begin(), rows.end(), t) - rows.begin()));
  }
}

Eigen::MatrixXd FieldModel::to_panel_rows(const Eigen::MatrixXd& beta) const {
  Eigen::MatrixXd out(beta.rows(), beta.cols());
  for (std::size_t i = 0; i < panel_row_.size(); ++i) out.row(panel_row_[i]) = beta.row(static_cast<Eigen::Index>(i));
  return out;
}

void FieldModel::init_gram() {
  const auto n = static_cast<Eigen::Index>(basis_.size());
  nf_.resize(n);
  dsq_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    nf_(i) = norm_sq(basis_[static_cast<std::size_t>(i)]);
    dsq_(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      dsq_(i, j) = dsq_(j, i) = dist_sq(basis_[static_cast<std::size_t>(i)], basis_[static_cast<std::size_t>(j)]);
    }
  }
}

const CholeskyBasis& FieldModel::r_basis(const HurstParam& h) const {
  const double key = h.value();
  {
    std::lock_guard lock(mutex_);
    if (auto it = r_cache_.find(key); it != r_cache_.end()) return *it->second;
  }
  const auto n = static_cast<Eigen::Index>(dyadics_.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      g(i, j) = g(j, i) = cov_fbm(key, dyadics_[static_cast<std::size_t>(i)], dyadics_[static_cast<std::size_t>(j)]);
    }
  }
  auto basis = std::make_shared<const CholeskyBasis>(orthonormalize(g));
  if (!basis->dropped.empty()) fail(ErrorCode::RankDeficient, "R_h Gram matrix lost rank");
  std::lock_guard lock(mutex_);
  return *r_cache_.emplace(key, basis).first->second;
}

const CholeskyBasis& FieldModel::k_basis(const HurstParam& h) const {
  const double key = h.value();
  {
    std::lock_guard lock(mutex_);
    if (auto it = k_cache_.find(key); it != k_cache_.end()) return *it->second;
  }
  const auto n = static_cast<Eigen::Index>(basis_.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = cov_l2(h, nf_(i), nf_(j), dsq_(i, j));
  }
  auto basis = std::make_shared<const CholeskyBasis>(orthonormalize(g));
  if (!basis->dropped.empty()) fail(ErrorCode::RankDeficient, "k_h Gram matrix lost rank");
  std::lock_guard lock(mutex_);
  return *k_cache_.emplace(key, basis).first->second;
}

std::shared_ptr<const KernelTable> FieldModel::table(const HurstParam& h) const {
  constexpr std::size_t kMaxTables = 8;
  const double key = h.value();
  {
    std::lock_guard lock(mutex_);
    if (auto it = tables_.find(key); it != tables_.end()) return it->second;
  }
  auto t = std::make_shared<const KernelTable>(panels_, *VolterraKernel::get(key, q_));
  std::lock_guard lock(mutex_);
  if (tables_.size() >= kMaxTables) tables_.erase(tables_.begin());
  return tables_.emplace(key, t).first->second;
}

Eigen::VectorXd FieldModel::kernel_column(const HurstParam& h, const IndexFunction& f) const {
  require_same_space(basis_.front(), f);
  const double nf = norm_sq(f);
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out(ii) = cov_l2(h, nf_(ii), nf, dist_sq(basis_[i], f));
  }
  return out;
}

std::string FieldModel::fingerprint_source() const {
  std::ostringstream os;
  os.precision(17);
  os << "N=" << dyadics_.size() << ";atoms=" << space_->size() << ";dim=" << space_->dim();
  os << ";quad=" << q_.nodes << "," << q_.kernel_nodes << "," << q_.tolerance << "," << q_.zero_levels;
  os << ";corners=";
  for (const auto& c : corners_) {
    for (double x : c.coords) os << x << ",";
    os << "|";
  }
  os << ";weights=";
  for (double w : space_->weights()) os << w << ",";
  os << ";coords=";
  for (double x : space_->coords()) os << x << ",";
  return os.str();
}

std::uint64_t FieldModel::fingerprint() const {
  // FNV-1a
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : fingerprint_source()) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::vector<double> FieldModel::cached_h() const {
  std::lock_guard lock(mutex_);
  std::vector<double> out;
  for (const auto& [h, basis] : r_cache_) out.push_back(h);
  return out;
}

Eigen::VectorXd coeff_vector(const HurstParam& h, const IndexFunction& f, const FieldModel& model) {
  return model.k_basis(h).coordinates(model.kernel_column(h, f));
}

Eigen::MatrixXd cross_basis_matrix(const HurstParam& h, const HurstParam& h2, const FieldModel& model) {
  const auto n = static_cast<Eigen::Index>(model.basis_size());
  if (h.value() == h2.value()) return Eigen::MatrixXd::Identity(n, n);
  const auto key = std::make_pair(h.value(), h2.value());
  {
    std::lock_guard lock(model.mutex_);
    if (auto it = model.m_cache_.find(key); it != model.m_cache_.end()) return *it->second;
  }
  const auto t1 = model.table(h);
  const auto t2 = model.table(h2);
  const Eigen::MatrixXd perm = model.to_panel_rows(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd c = bilinear(*t1, perm, *t2, perm);
  const auto& l1 = model.r_basis(h).factor;
  const auto& l2 = model.r_basis(h2).factor;
  Eigen::MatrixXd m = l1.triangularView<Eigen::Lower>().solve(c);
  m = l2.triangularView<Eigen::Lower>().solve(m.transpose()).transpose();
  auto stored = std::make_shared<const Eigen::MatrixXd>(m);
  auto flipped = std::make_shared<const Eigen::MatrixXd>(m.transpose());
  std::lock_guard lock(model.mutex_);
  if (model.m_cache_.size() >= 64) model.m_cache_.clear();
  model.m_cache_.emplace(key, stored);
  model.m_cache_.emplace(std::make_pair(h2.value(), h.value()), flipped);
  return m;
}

double field_cov(const HurstParam& h, const IndexFunction& f, const HurstParam& h2, const IndexFunction& g,
                 const FieldModel& model) {
  const Eigen::VectorXd a = coeff_vector(h, f, model);
  const Eigen::VectorXd b = coeff_vector(h2, g, model);
  if (h.value() == h2.value()) return a.dot(b);
  return a.dot(cross_basis_matrix(h, h2, model) * b);
}

Eigen::MatrixXd assemble_cov_matrix(std::span<const FieldPoint> points, const FieldModel& model) {
  if (points.empty()) fail(ErrorCode::OutOfRange, "no points to assemble");
  const auto total = static_cast<Eigen::Index>(points.size());
  const auto n = static_cast<Eigen::Index>(model.basis_size());

  // Group points by Hurst index; coefficients a(h, f) per group.
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < points.size(); ++i) groups[points[i].h.value()].push_back(i);
  std::vector<double> hs;
  std::vector<std::vector<std::size_t>> members;
  for (auto& [h, idx] : groups) {
    hs.push_back(h);
    members.push_back(idx);
  }
  const std::size_t ng = hs.size();
  std::vector<Eigen::MatrixXd> coeffs(ng);
  parallel_for(0, ng, [&](std::size_t g) {
    const HurstParam h(hs[g]);
    Eigen::MatrixXd cols(n, static_cast<Eigen::Index>(members[g].size()));
    for (std::size_t j = 0; j < members[g].size(); ++j) {
      cols.col(static_cast<Eigen::Index>(j)) = model.kernel_column(h, points[members[g][j]].f);
    }
    coeffs[g] = model.k_basis(h).coordinates(cols);
  });

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total, total);
  auto scatter = [&](std::size_t gi, std::size_t gj, const Eigen::MatrixXd& block) {
    for (std::size_t a = 0; a < members[gi].size(); ++a) {
      for (std::size_t b = 0; b < members[gj].size(); ++b) {
        const auto r = static_cast<Eigen::Index>(members[gi][a]);
        const auto c = static_cast<Eigen::Index>(members[gj][b]);
        out(r, c) = block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        out(c, r) = out(r, c);
      }
    }
  };
  for (std::size_t g = 0; g < ng; ++g) scatter(g, g, coeffs[g].transpose() * coeffs[g]);
  if (ng == 1) return out;

  // Cross-h blocks through the point representation beta = L_R^{-T} a.
  std::vector<KernelSide> sides;
  sides.reserve(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    const HurstParam h(hs[g]);
    const auto& l = model.r_basis(h).factor;
    Eigen::MatrixXd beta = l.transpose().triangularView<Eigen::Upper>().solve(coeffs[g]);
    sides.push_back(make_side(*model.table(h), model.to_panel_rows(beta)));
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < ng; ++i) {
    for (std::size_t j = i + 1; j < ng; ++j) pairs.emplace_back(i, j);
  }
  std::vector<Eigen::MatrixXd> blocks(pairs.size());
  parallel_for(0, pairs.size(), [&](std::size_t k) {
    blocks[k] = bilinear(sides[pairs[k].first], sides[pairs[k].second]);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) scatter(pairs[k].first, pairs[k].second, blocks[k]);
  return out;
}

double truncation_error(const HurstParam& h, const IndexFunction& f, const FieldModel& model) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : model.index_basis()) best = std::min(best, dist_sq(f, b));
  return std::pow(best, 2.0 * h.value());
}

}  // namespace fbf
