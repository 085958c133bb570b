#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fbf/error.hpp"
#include "fbf/gram_field.hpp"

using namespace fbf;

namespace {

SpacePtr unit_grid(std::size_t cells = 128) { return make_grid_space(ProductMeasure::lebesgue(1), cells); }

const FieldModel& shared_model() {
  static const FieldModel model(unit_grid(), 16);
  return model;
}

}  // namespace

TEST_CASE("dyadic enumeration") {
  CHECK(dyadic_points(1) == std::vector<double>{1.0});
  CHECK(dyadic_points(4) == std::vector<double>{1.0, 0.5, 0.25, 0.75});
  auto d = dyadic_points(512);
  std::sort(d.begin(), d.end());
  CHECK(std::adjacent_find(d.begin(), d.end()) == d.end());
  CHECK(d.front() > 0.0);
  CHECK(d.back() == 1.0);
}

TEST_CASE("orthonormalize") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  CHECK(orthonormalize(id).factor.isApprox(id));

  const double rho = 0.3;
  Eigen::MatrixXd g(2, 2);
  g << 1.0, rho, rho, 1.0;
  Eigen::MatrixXd l(2, 2);
  l << 1.0, 0.0, rho, std::sqrt(1.0 - rho * rho);
  CHECK((orthonormalize(g).factor - l).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd dup(3, 3);
  dup << 2.0, 2.0, 1.0, 2.0, 2.0, 1.0, 1.0, 1.0, 3.0;
  const auto b = orthonormalize(dup);
  CHECK(b.dropped == std::vector<std::size_t>{1});
  CHECK(b.retained == std::vector<std::size_t>{0, 2});

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(orthonormalize(bad), Error);

  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(10, 6);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(gen);
  const Eigen::MatrixXd gram = a.transpose() * a;
  const auto f = orthonormalize(gram);
  CHECK((gram - f.factor * f.factor.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * gram.cwiseAbs().maxCoeff());
  CHECK((f.factor.diagonal().array() > 0.0).all());
}

TEST_CASE("default basis is dyadic and linearly independent") {
  const auto space = unit_grid(64);
  const auto b2 = default_basis(space, 2);
  CHECK(dist_sq(b2[0], indicator_of_rect(space, RectPoint{1.0})) == 0.0);
  CHECK(dist_sq(b2[1], indicator_of_rect(space, RectPoint{0.5})) == 0.0);

  const auto basis = default_basis(space, 32);
  Eigen::MatrixXd gram(32, 32);
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) gram(i, j) = inner(basis[i], basis[j]);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() > 1e-10 * gram.trace());
  CHECK_THROWS_AS(default_basis(space, 65), Error);

  const auto space2 = make_grid_space(ProductMeasure::lebesgue(2), 16);
  CHECK(default_basis(space2, 20).size() == 20);
}

TEST_CASE("coefficients and orthonormality") {
  const auto& model = shared_model();
  const HurstParam h(0.3);
  const auto& f0 = model.index_basis()[0];
  const Eigen::VectorXd a0 = coeff_vector(h, f0, model);
  CHECK(a0(0) == doctest::Approx(std::sqrt(cov_l2(h, f0, f0))));
  CHECK(a0.tail(a0.size() - 1).cwiseAbs().maxCoeff() < 1e-12);
  for (const auto& f : model.index_basis()) {
    CHECK(coeff_vector(h, f, model).squaredNorm() == doctest::Approx(cov_l2(h, f, f)).epsilon(1e-8));
  }
  // A function outside the span loses energy (Bessel).
  const auto g = indicator_of_rect(model.space(), RectPoint{0.3});
  const double gap = cov_l2(h, g, g) - coeff_vector(h, g, model).squaredNorm();
  CHECK(gap > 0.0);
  CHECK(gap <= truncation_error(h, g, model) + 1e-12);

  CHECK((cross_basis_matrix(h, h, model) - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("cross-basis matrices") {
  const auto& model = shared_model();
  const HurstParam h(0.2);
  const HurstParam h2(0.35);
  const Eigen::MatrixXd m = cross_basis_matrix(h, h2, model);
  const Eigen::MatrixXd mt = cross_basis_matrix(h2, h, model);
  CHECK((m.transpose() - mt).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  CHECK(svd.singularValues().maxCoeff() <= 1.0 + 1e-6);
}

TEST_CASE("field covariance") {
  const auto& model = shared_model();
  const auto& basis = model.index_basis();
  const HurstParam h(0.25);
  for (std::size_t i = 0; i < basis.size(); i += 3) {
    for (std::size_t j = 0; j < basis.size(); j += 5) {
      CHECK(field_cov(h, basis[i], h, basis[j], model) ==
            doctest::Approx(cov_l2(h, basis[i], basis[j])).epsilon(1e-8));
    }
  }
  const HurstParam h2(0.4);
  const auto f = basis[3];
  const auto g = basis[7];
  CHECK(field_cov(h, f, h2, g, model) == doctest::Approx(field_cov(h2, g, h, f, model)).epsilon(1e-12));

  // One-dimensional Lebesgue: the field on 1[0,1] is B_h(1) for every h, so
  // the cross covariance is int K_h(1, r) K_h2(1, r) dr.
  const auto one = indicator_of_rect(model.space(), RectPoint{1.0});
  CHECK(field_cov(HurstParam(0.15), one, HurstParam(0.275), one, model) ==
        doctest::Approx(0.959706674307672556).epsilon(1e-7));

  // Self-similarity on the dyadic grid.
  for (double t : {0.25, 0.5, 0.75}) {
    const auto ft = indicator_of_rect(model.space(), RectPoint{t});
    CHECK(field_cov(h, ft, h, ft, model) == doctest::Approx(std::pow(t, 0.5)).epsilon(1e-8));
  }
}

TEST_CASE("assembled covariance matrices") {
  const auto& model = shared_model();
  const auto space = model.space();
  const auto f = indicator_of_rect(space, RectPoint{0.5});
  const std::vector<FieldPoint> one{FieldPoint{HurstParam(0.3), f}};
  const Eigen::MatrixXd s1 = assemble_cov_matrix(one, model);
  CHECK(s1.rows() == 1);
  CHECK(s1(0, 0) == doctest::Approx(field_cov(HurstParam(0.3), f, HurstParam(0.3), f, model)));

  const std::vector<FieldPoint> twice{FieldPoint{HurstParam(0.3), f}, FieldPoint{HurstParam(0.3), f}};
  const Eigen::MatrixXd s2 = assemble_cov_matrix(twice, model);
  CHECK((s2.array() - s2(0, 0)).abs().maxCoeff() < 1e-14);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FieldPoint> batch;
  const double hs[] = {0.2, 0.3, 0.45};
  for (int i = 0; i < 50; ++i) {
    batch.push_back(FieldPoint{HurstParam(hs[i % 3]), indicator_of_rect(space, RectPoint{u(gen)})});
  }
  const Eigen::MatrixXd s = assemble_cov_matrix(batch, model);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8 * s.trace());
  // Entries agree with field_cov.
  CHECK(s(0, 1) == doctest::Approx(field_cov(batch[0].h, batch[0].f, batch[1].h, batch[1].f, model)).epsilon(1e-10));
}

TEST_CASE("truncation error bound") {
  const auto& model = shared_model();
  const HurstParam h(0.3);
  CHECK(truncation_error(h, model.index_basis()[5], model) == 0.0);
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto f = indicator_of_rect(model.space(), RectPoint{u(gen)});
    const double gap = cov_l2(h, f, f) - coeff_vector(h, f, model).squaredNorm();
    CHECK(gap <= truncation_error(h, f, model) + 1e-12);
  }
  const FieldModel small(model.space(), 4);
  const auto f = indicator_of_rect(model.space(), RectPoint{0.3});
  CHECK(truncation_error(h, f, model) <= truncation_error(h, f, small));
}

TEST_CASE("model fingerprint is stable") {
  const FieldModel a(unit_grid(), 8);
  const FieldModel b(unit_grid(), 8);
  const FieldModel c(unit_grid(), 9);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
}
