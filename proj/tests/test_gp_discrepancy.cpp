#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "gibbscal/gp_discrepancy.hpp"
#include "helpers.hpp"

using namespace gibbscal;

namespace {

// Independent draw by dense LLT with a tiny jitter, for generating test data.
Eigen::VectorXd reference_gp_draw(const Eigen::VectorXd& x, double s2, double ell, Rng& rng) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = s2 * std::exp(-0.5 * std::pow((x(i) - x(j)) / ell, 2));
  K.diagonal().array() += 1e-8 * s2;
  const Eigen::MatrixXd L = K.llt().matrixL();
  std::normal_distribution<double> nd;
  Eigen::VectorXd z(n);
  for (auto& v : z) v = nd(rng);
  return L * z;
}

}  // namespace

TEST_CASE("kernel values and covariance") {
  const SqExpKernel k{2.0, 0.5, 0.1};
  CHECK(k(0.0, 0.0) == doctest::Approx(2.0));
  CHECK(k(0.0, 0.5) == doctest::Approx(2.0 * std::exp(-0.5)));
  const Eigen::MatrixXd K = k.covariance(Eigen::Vector3d(0.0, 0.5, 2.0));
  CHECK(K(0, 0) == doctest::Approx(2.1));
  CHECK(K(0, 1) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK(K.isApprox(K.transpose()));
  CHECK(error_kind([] { SqExpKernel{-1.0, 1.0, 0.0}.validate(); }) == ErrorKind::Domain);
  CHECK(error_kind([] { SqExpKernel{1.0, 0.0, 0.0}.validate(); }) == ErrorKind::Domain);

  // A dense SE kernel on a fine grid is numerically singular; the jitter
  // ladder rescues it.
  const SqExpKernel smooth{1.0, 1.0, 0.0};
  const auto chol = robust_cholesky(smooth.covariance(Eigen::VectorXd::LinSpaced(200, 0.0, 1.0)), 1.0);
  CHECK(chol.jitter > 0.0);
  CHECK(chol.jitter <= 1e-6);
}

TEST_CASE("empirical discrepancy") {
  PolynomialModel m(1, true);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  ExperimentData d(x, 0.3 * x.array() + 0.1);
  const Eigen::VectorXd r = empirical_discrepancy(d, m, Eigen::VectorXd::Constant(1, 0.3));
  CHECK(r.isApprox(Eigen::VectorXd::Constant(5, 0.1)));
  ExperimentData exact(x, 0.3 * x);
  CHECK(empirical_discrepancy(exact, m, Eigen::VectorXd::Constant(1, 0.3)).norm() == doctest::Approx(0.0));
}

TEST_CASE("GP marginal likelihood against the direct formula") {
  Rng rng(1);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(12, 0.0, 1.0);
  const Eigen::VectorXd r = reference_gp_draw(x, 1.0, 0.3, rng);
  const SqExpKernel k{0.7, 0.25, 0.05};
  const Eigen::MatrixXd K = k.covariance(x);
  const double direct = -0.5 * r.dot(K.inverse() * r) - 0.5 * std::log(K.determinant()) -
                        0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI);
  CHECK(gp_log_marginal_likelihood(r, x, k) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("GP MLE recovers the generating kernel on average") {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(100, 0.0, 1.0);
  double log_s2 = 0.0, log_ell = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + static_cast<std::uint64_t>(s));
    const Eigen::VectorXd r = reference_gp_draw(x, 1.0, 0.2, rng);
    const SqExpKernel fit = fit_gp_mle(r, x, SqExpKernel{r.squaredNorm() / 100.0, 0.1, 1e-3});
    log_s2 += std::log(fit.s2) / seeds;
    log_ell += std::log(fit.length_scale) / seeds;
  }
  CHECK(std::exp(log_s2) == doctest::Approx(1.0).epsilon(0.5));
  CHECK(std::exp(log_ell) == doctest::Approx(0.2).epsilon(0.5));
}

TEST_CASE("GP MLE degenerate inputs") {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(60, 0.0, 1.0);
  const double spacing = x(1) - x(0);
  SUBCASE("white noise") {
    Rng rng(4);
    std::normal_distribution<double> nd;
    Eigen::VectorXd r(60);
    for (auto& v : r) v = nd(rng);
    const SqExpKernel fit = fit_gp_mle(r, x, SqExpKernel{1.0, 0.2, 1e-3});
    const double var = r.squaredNorm() / 60.0;
    CHECK((fit.length_scale < spacing || fit.nugget > 0.5 * var));
  }
  SUBCASE("constant residuals") {
    const double c = 0.7;
    const SqExpKernel fit = fit_gp_mle(Eigen::VectorXd::Constant(60, c), x, SqExpKernel{0.5, 0.1, 1e-3});
    CHECK(fit.length_scale > 0.9 * 10.0);  // upper bound is 10 x range
    CHECK(fit.s2 > 0.1 * c * c);
    CHECK(fit.s2 < 10.0 * c * c);
  }
  SUBCASE("never worse than the initial kernel") {
    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::VectorXd r = reference_gp_draw(x, 2.0, 0.05 + 0.1 * rep, rng);
      const SqExpKernel init{2.0, 0.05 + 0.1 * rep, 1e-4};
      const SqExpKernel fit = fit_gp_mle(r, x, init);
      CHECK(gp_log_marginal_likelihood(r, x, fit) >= gp_log_marginal_likelihood(r, x, init) - 1e-9);
    }
  }
  CHECK(error_kind([&] { fit_gp_mle(Eigen::VectorXd::Ones(5), x.head(5), SqExpKernel{}); }) == ErrorKind::Domain);
}

TEST_CASE("GP sampling") {
  Rng rng(6);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
  CHECK(sample_gp(SqExpKernel{0.0, 0.2, 0.0}, x, rng).isZero());

  const Eigen::VectorXd single = Eigen::VectorXd::Zero(1);
  double ss = 0.0;
  for (int i = 0; i < 10000; ++i) ss += std::pow(sample_gp(SqExpKernel{4.0, 1.0, 0.0}, single, rng)(0), 2);
  CHECK(ss / 10000.0 >= 3.7);
  CHECK(ss / 10000.0 <= 4.3);

  const Eigen::VectorXd flat = sample_gp(SqExpKernel{1.0, 1e6, 0.0}, x, rng);
  // Increments between points have sd of order x / l = 1e-6.
  CHECK((flat.array() - flat(0)).abs().maxCoeff() <= 1e-4);

  const Eigen::VectorXd five = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  const SqExpKernel k{1.5, 0.3, 0.01};
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::VectorXd d = sample_gp(k, five, rng);
    emp += d * d.transpose() / 10000.0;
  }
  const Eigen::MatrixXd K = k.covariance(five);
  CHECK((emp - K).norm() / K.norm() < 0.1);
}

TEST_CASE("effective sample size properties") {
  Rng rng(7);
  std::normal_distribution<double> nd;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(1000, 0.0, 1.0);
  Eigen::VectorXd r(1000);
  for (auto& v : r) v = nd(rng);
  const double ne = effective_sample_size(r, x);
  CHECK(ne >= 800.0);
  CHECK(ne <= 1200.0);
  for (double c : {-3.7, 1e-5, 2.0, 1e6}) CHECK(effective_sample_size(c * r, x) == ne);
  CHECK(effective_sample_size(Eigen::VectorXd::Constant(1000, 0.4), x) == 1.0);

  // AR(1) closed form: n (1 - rho) / (1 + rho).
  const int n = 20000;
  const double rho = 0.5;
  Eigen::VectorXd ar(n);
  ar(0) = nd(rng);
  for (int i = 1; i < n; ++i) ar(i) = rho * ar(i - 1) + std::sqrt(1 - rho * rho) * nd(rng);
  CHECK(effective_sample_size(ar, Eigen::VectorXd::LinSpaced(n, 0.0, 1.0)) ==
        doctest::Approx(n * (1 - rho) / (1 + rho)).epsilon(0.1));

  CHECK(error_kind([&] { effective_sample_size(r.head(5), x.head(5)); }) == ErrorKind::Domain);

  // Kernel form: white noise gives n, a near-constant field gives about 1.
  CHECK(effective_sample_size_from_kernel(SqExpKernel{0.0, 1.0, 1.0}, x.head(50)) == doctest::Approx(50.0));
  CHECK(effective_sample_size_from_kernel(SqExpKernel{1.0, 1e4, 0.0}, x.head(50)) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("GLS reductions") {
  Rng rng(8);
  std::normal_distribution<double> nd;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(30, 0.1, 3.0);
  Eigen::MatrixXd X(30, 2);
  X.col(0).setOnes();
  X.col(1) = x;
  Eigen::VectorXd y = 1.0 + 0.5 * x.array();
  for (auto& v : y) v += 0.2 * nd(rng);
  const ExperimentData data(x, y);
  const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);

  const GlsResult white = gls_fixed_kernel(data, X, SqExpKernel{0.0, 1.0, 1.0});
  CHECK((white.coef - ols).norm() < 1e-10);
  for (double s2 : {1e-4, 3.0, 1e3}) CHECK((gls_fixed_kernel(data, X, SqExpKernel{0.0, 1.0, s2}).coef - ols).norm() < 1e-10);

  // Responses in the column span are reproduced for any PD kernel.
  const Eigen::VectorXd beta(Eigen::Vector2d(-0.3, 1.7));
  const ExperimentData exact(x, X * beta);
  CHECK((gls_fixed_kernel(exact, X, SqExpKernel{1.0, 0.7, 0.01}).coef - beta).norm() < 1e-8);

  // Normal-theory interval from the coefficient covariance.
  const double z = boost::math::quantile(boost::math::normal(), 0.975);
  CHECK(white.ci_hi(1) - white.ci_lo(1) == doctest::Approx(2 * z * std::sqrt(white.cov(1, 1))));

  Eigen::MatrixXd rank_def(30, 2);
  rank_def.col(0) = x;
  rank_def.col(1) = 2.0 * x;
  CHECK(error_kind([&] { gls_fixed_kernel(data, rank_def, SqExpKernel{0.0, 1.0, 1.0}); }) == ErrorKind::Structural);

  const GlsResult fit = gls_fit(data, [&](const Eigen::VectorXd&) { return X; }, SqExpKernel{0.04, 0.5, 0.01});
  CHECK(gp_log_marginal_likelihood(y - X * fit.coef, x, fit.kernel) > -1e300);
  CHECK(fit.ci_lo(1) < 0.5);
  CHECK(fit.ci_hi(1) > 0.5);
}

TEST_CASE("discrepancy prior families") {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(60, 4.0 / 60, 4.0);
  DiscrepancyPrior shift{ShiftFamily{4.0 / 3.0, 4.0, 0.0, 0.4, -1.0}, 0.0};
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd d = shift.sample_discrepancy(x, rng);
    double level = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) <= 4.0 / 3.0) {
        CHECK(d(i) == 0.0);
      } else {
        if (level == 0.0) level = d(i);
        CHECK(d(i) == level);
      }
    }
    CHECK(level <= 0.0);
    CHECK(level >= -0.4);
  }
  const Eigen::VectorXd e = shift.expected(x);
  CHECK(e(59) == doctest::Approx(-0.2));
  CHECK(e(0) == 0.0);

  DiscrepancyPrior noise{NoDiscrepancy{}, 0.5};
  double ss = 0.0;
  for (int i = 0; i < 200; ++i) ss += noise.sample_noise(x, rng).squaredNorm();
  CHECK(ss / (200.0 * 60.0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(error_kind([] { DiscrepancyPrior{ShiftFamily{1.0, 0.0, 0.0, 1.0, 1.0}, 0.0}.validate(); }) ==
        ErrorKind::Configuration);
}
