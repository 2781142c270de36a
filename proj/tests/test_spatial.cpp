#include <doctest.h>

#include <cmath>

#include "stormlevels/rng.hpp"
#include "stormlevels/spatial.hpp"
#include "support/oracles.hpp"

using namespace stormlevels;

namespace {

Sites line_sites(int n, double spacing) {
  Sites s(n);
  for (int i = 0; i < n; ++i) s[i] = Site{i * spacing, 0.0};
  return s;
}

}  // namespace

TEST_SUITE("spatial") {

TEST_CASE("covariance spec validation") {
  spatial::CovarianceSpec bad;
  bad.sill = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spatial::CovarianceSpec{};
  bad.smoothness = 2.5;  // powered exponential cap
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  spatial::CovarianceSpec matern{spatial::CovKind::matern, 1.0, 1.0, 2.5, 1e-8};
  CHECK_NOTHROW(matern.validate());
}

TEST_CASE("powered exponential closed-form values") {
  const spatial::CovarianceSpec spec{spatial::CovKind::powered_exponential, 4.0, 20.0, 1.0, 0.0};
  CHECK(spec(0.0) == doctest::Approx(4.0));
  CHECK(spec(20.0) == doctest::Approx(4.0 * std::exp(-1.0)));
}

TEST_CASE("matern at nu = 1/2 reduces to the exponential") {
  const spatial::CovarianceSpec matern{spatial::CovKind::matern, 2.0, 3.0, 0.5, 0.0};
  for (double d : {0.01, 0.5, 1.0, 3.0, 10.0, 30.0}) {
    CHECK(std::abs(matern(d) - 2.0 * std::exp(-d / 3.0)) < 1e-10);
  }
  CHECK(matern(0.0) == doctest::Approx(2.0));
  // continuity at tiny distances
  CHECK(matern(1e-13) == doctest::Approx(2.0));
}

TEST_CASE("covariance matrices are symmetric with nearly nonnegative spectrum") {
  Rng rng(17);
  Sites sites(12);
  for (auto& s : sites) s = Site{rng.uniform() * 10.0, rng.uniform() * 10.0};
  for (auto kind : {spatial::CovKind::powered_exponential, spatial::CovKind::matern}) {
    spatial::CovarianceSpec spec{kind, 1.5, 2.0, kind == spatial::CovKind::matern ? 1.2 : 1.4,
                                 0.0};
    const auto c = spatial::cov_matrix_from_dist(spec, distance_matrix(sites), false);
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("square covariance gets jitter on the diagonal, cross does not") {
  const Sites a = line_sites(3, 1.0);
  spatial::CovarianceSpec spec;
  spec.jitter = 1e-4;
  const auto sq = spatial::cov_matrix(spec, a);
  CHECK(sq(0, 0) == doctest::Approx(spec.sill + 1e-4));
  const auto cross = spatial::cov_matrix(spec, a, a);
  CHECK(cross(0, 0) == doctest::Approx(spec.sill));
}

TEST_CASE("gp log density matches the univariate normal") {
  const Sites one{{0.0, 0.0}};
  spatial::CovarianceSpec spec;
  spec.sill = 2.5;
  spec.jitter = 0.0;
  spatial::GpField field{Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(1, 3.0),
                         Eigen::MatrixXd::Ones(1, 1)};
  CHECK(spatial::gp_logdensity(field, spec, one) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI * 2.5)));
}

TEST_CASE("gp log density factorizes for distant sites") {
  // spacing far beyond the range makes the field effectively independent
  const Sites sites = line_sites(5, 1000.0);
  spatial::CovarianceSpec spec;
  spec.sill = 1.7;
  spec.range = 0.5;
  spec.jitter = 0.0;
  Eigen::VectorXd values(5);
  values << 0.3, -0.2, 1.4, 0.9, -1.1;
  spatial::GpField field{values, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(5, 1)};
  const double joint = spatial::gp_logdensity(field, spec, sites);
  double sum = 0.0;
  for (int i = 0; i < 5; ++i)
    sum += -0.5 * std::log(2.0 * M_PI * 1.7) - 0.5 * values(i) * values(i) / 1.7;
  CHECK(joint == doctest::Approx(sum).epsilon(1e-8));
}

TEST_CASE("gp log density is permutation invariant") {
  Rng rng(23);
  Sites sites(8);
  for (auto& s : sites) s = Site{rng.uniform() * 4.0, rng.uniform() * 4.0};
  Eigen::VectorXd values(8);
  for (int i = 0; i < 8; ++i) values(i) = rng.normal();
  spatial::CovarianceSpec spec;
  spec.range = 2.0;
  spatial::GpField field{values, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(8, 1)};
  const double base = spatial::gp_logdensity(field, spec, sites);

  std::vector<int> perm{3, 1, 7, 0, 4, 6, 2, 5};
  Sites ps(8);
  Eigen::VectorXd pv(8);
  for (int i = 0; i < 8; ++i) {
    ps[i] = sites[perm[i]];
    pv(i) = values(perm[i]);
  }
  spatial::GpField pfield{pv, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(8, 1)};
  CHECK(std::abs(spatial::gp_logdensity(pfield, spec, ps) - base) < 1e-10);
}

TEST_CASE("gp log density agrees with the dense-inverse evaluation") {
  Rng rng(29);
  Sites sites(15);
  for (auto& s : sites) s = Site{rng.uniform() * 6.0, rng.uniform() * 6.0};
  Eigen::VectorXd values(15);
  for (int i = 0; i < 15; ++i) values(i) = rng.normal() * 2.0 + 1.0;
  spatial::CovarianceSpec spec;
  spec.sill = 1.3;
  spec.range = 2.5;
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(15, 1);
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 1.0);
  spatial::GpField field{values, beta, design};
  const double fast = spatial::gp_logdensity(field, spec, sites);

  const Eigen::MatrixXd cov = spatial::cov_matrix(spec, sites);
  const Eigen::VectorXd r = values - design * beta;
  const double direct = -0.5 * 15.0 * std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant()) -
                        0.5 * r.dot(cov.inverse() * r);
  CHECK(fast == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("kriging interpolates at an observed site") {
  Rng rng(31);
  Sites sites(6);
  for (auto& s : sites) s = Site{rng.uniform() * 3.0, rng.uniform() * 3.0};
  Eigen::VectorXd values(6);
  for (int i = 0; i < 6; ++i) values(i) = rng.normal();
  spatial::CovarianceSpec spec;
  spec.range = 2.0;
  spatial::GpField field{values, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(6, 1)};
  const Sites at{sites[2]};
  const auto res = spatial::krige(field, spec, sites, at, Eigen::MatrixXd::Zero(1, 1));
  CHECK(std::abs(res.mean(0) - values(2)) < 1e-6);
  CHECK(std::abs(res.cov(0, 0)) < 1e-6);
}

TEST_CASE("kriging decorrelates far from the data") {
  const Sites obs = line_sites(4, 1.0);
  Eigen::VectorXd values(4);
  values << 1.0, 2.0, 0.5, 1.5;
  spatial::CovarianceSpec spec;
  spec.sill = 1.1;
  spec.range = 0.7;
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 0.75);
  spatial::GpField field{values, beta, design};
  const Sites far{{1e5, 1e5}};
  const auto res = spatial::krige(field, spec, obs, far, Eigen::MatrixXd::Ones(1, 1));
  CHECK(res.mean(0) == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(res.cov(0, 0) == doctest::Approx(1.1).epsilon(1e-10));
}

TEST_CASE("kriging with one observed site matches the scalar conditional normal") {
  const Sites obs{{0.0, 0.0}};
  const Sites target{{1.5, 0.0}};
  spatial::CovarianceSpec spec;
  spec.sill = 2.0;
  spec.range = 3.0;
  spec.jitter = 0.0;
  Eigen::VectorXd value = Eigen::VectorXd::Constant(1, 1.8);
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 1.0);
  spatial::GpField field{value, beta, design};
  const auto res = spatial::krige(field, spec, obs, target, Eigen::MatrixXd::Ones(1, 1));
  const double c = 2.0 * std::exp(-1.5 / 3.0);
  CHECK(res.mean(0) == doctest::Approx(1.0 + c / 2.0 * (1.8 - 1.0)).epsilon(1e-12));
  CHECK(res.cov(0, 0) == doctest::Approx(2.0 - c * c / 2.0).epsilon(1e-12));
}

TEST_CASE("kriging with no observations returns the prior exactly") {
  spatial::CovarianceSpec spec;
  spec.sill = 1.4;
  spatial::GpField empty{Eigen::VectorXd(0), Eigen::VectorXd::Constant(1, 2.0),
                         Eigen::MatrixXd(0, 1)};
  const Sites grid = line_sites(3, 1.0);
  const auto res = spatial::krige(empty, spec, {}, grid, Eigen::MatrixXd::Ones(3, 1));
  CHECK(res.mean.isApprox(Eigen::VectorXd::Constant(3, 2.0)));
  CHECK(res.cov.isApprox(spatial::cov_matrix_from_dist(spec, distance_matrix(grid), false)));
}

TEST_CASE("gp samples reproduce the mean and covariance") {
  const Sites sites = line_sites(5, 1.0);
  spatial::CovarianceSpec spec;
  spec.sill = 2.0;
  spec.range = 2.0;
  Eigen::VectorXd mean(5);
  mean << 1.0, 2.0, 3.0, 2.0, 1.0;
  const int n = 10000;
  Eigen::MatrixXd draws(n, 5);
  Rng rng(41);
  for (int i = 0; i < n; ++i) {
    Rng g = rng.derive(static_cast<std::uint64_t>(i));
    draws.row(i) = spatial::gp_sample(spec, sites, mean, g).transpose();
  }
  const Eigen::VectorXd emp_mean = draws.colwise().mean();
  for (int j = 0; j < 5; ++j)
    CHECK(std::abs(emp_mean(j) - mean(j)) < 3.0 * std::sqrt(2.0 / n) + 0.02);
  const Eigen::MatrixXd centered = draws.rowwise() - emp_mean.transpose();
  const Eigen::MatrixXd emp_cov = centered.transpose() * centered / double(n - 1);
  const Eigen::MatrixXd cov = spatial::cov_matrix(spec, sites);
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      CHECK(std::abs(emp_cov(a, b) - cov(a, b)) < 0.05 * spec.sill + 0.02);
}

TEST_CASE("gp sampling is deterministic given the seed") {
  const Sites sites = line_sites(4, 0.5);
  spatial::CovarianceSpec spec;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  Rng a(99), b(99);
  const auto va = spatial::gp_sample(spec, sites, mean, a);
  const auto vb = spatial::gp_sample(spec, sites, mean, b);
  CHECK(va == vb);
}

TEST_CASE("safe_llt escalates jitter and eventually throws") {
  // rank-deficient matrix: identical rows
  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(3, 3);
  CHECK_NOTHROW(spatial::safe_llt(singular, 1e-8));
  Eigen::MatrixXd negative = -Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(spatial::safe_llt(negative, 1e-8), std::runtime_error);
}

}  // TEST_SUITE
