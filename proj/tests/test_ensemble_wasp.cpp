#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gibbscal/ensemble_wasp.hpp"
#include "helpers.hpp"

using namespace gibbscal;

namespace {

Eigen::MatrixXd m1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

GaussianSummary summary(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::string id = {}) {
  GaussianSummary s;
  s.mean = std::move(mean);
  s.cov = std::move(cov);
  s.n_draws = 1000;
  s.id = std::move(id);
  return s;
}

Eigen::MatrixXd random_spd(int d, Rng& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(d, d);
  for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = nd(rng);
  return A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
}

PosteriorSample sample_of(const Eigen::MatrixXd& draws) {
  PosteriorSample s;
  s.draws = draws;
  for (Eigen::Index j = 0; j < draws.cols(); ++j) s.names.push_back("p" + std::to_string(j));
  return s;
}

}  // namespace

TEST_CASE("barycenter closed forms") {
  Rng rng(1);
  const Eigen::MatrixXd sigma = random_spd(3, rng);
  const auto same = barycenter_covariance({sigma, sigma, sigma});
  CHECK(same.converged);
  CHECK((same.cov - sigma).cwiseAbs().maxCoeff() < 1e-8);

  const auto scalar = barycenter_covariance({m1(1.0), m1(9.0)});
  CHECK(std::abs(scalar.cov(0, 0) - 4.0) < 1e-8);

  const Eigen::MatrixXd a = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const Eigen::MatrixXd b = Eigen::Vector2d(9.0, 16.0).asDiagonal();
  const auto diag = barycenter_covariance({a, b});
  const Eigen::MatrixXd expected = Eigen::Vector2d(4.0, 9.0).asDiagonal();
  CHECK((diag.cov - expected).cwiseAbs().maxCoeff() < 1e-8);

  // Commuting (shared eigenvectors) but not diagonal: (mean of square roots)^2.
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_spd(3, rng)).householderQ();
  const Eigen::MatrixXd c1 = Q * Eigen::Vector3d(1, 2, 3).asDiagonal() * Q.transpose();
  const Eigen::MatrixXd c2 = Q * Eigen::Vector3d(5, 0.5, 7).asDiagonal() * Q.transpose();
  const Eigen::MatrixXd half = 0.5 * (sqrtm_spd(c1) + sqrtm_spd(c2));
  CHECK((barycenter_covariance({c1, c2}).cov - half * half).norm() < 1e-8);
}

TEST_CASE("barycenter fixed point and convergence reporting") {
  Rng rng(2);
  std::vector<Eigen::MatrixXd> covs;
  for (int k = 0; k < 5; ++k) covs.push_back(random_spd(4, rng));
  const double tol = 1e-10;
  const auto res = barycenter_covariance(covs, tol, 500);
  REQUIRE(res.converged);
  CHECK((barycenter_update(res.cov, covs) - res.cov).norm() < 10 * tol);

  const auto capped = barycenter_covariance(covs, tol, 1);
  CHECK_FALSE(capped.converged);
  CHECK(capped.iterations == 1);

  CHECK(error_kind([] { sqrtm_spd(Eigen::Vector2d(1.0, 1e-14).asDiagonal()); }) == ErrorKind::Conditioning);
  CHECK(error_kind([] { barycenter_covariance({Eigen::Matrix2d::Identity(), m1(1.0)}); }) == ErrorKind::Structural);
  CHECK((sqrtm_spd(covs[0]) * sqrtm_spd(covs[0]) - covs[0]).norm() < 1e-10);
  CHECK((inv_sqrtm_spd(covs[0]) * covs[0] * inv_sqrtm_spd(covs[0]) - Eigen::Matrix4d::Identity()).norm() < 1e-10);
}

TEST_CASE("consensus mean") {
  const auto m = consensus_mean({summary(Eigen::VectorXd::Constant(1, 0.0), m1(1.0)),
                                 summary(Eigen::VectorXd::Constant(1, 10.0), m1(4.0))});
  CHECK(m(0) == doctest::Approx(2.0).epsilon(1e-14));

  Rng rng(3);
  const Eigen::Vector2d mu(1.5, -2.0);
  std::vector<GaussianSummary> same_mean;
  for (int k = 0; k < 4; ++k) same_mean.push_back(summary(mu, random_spd(2, rng)));
  CHECK((consensus_mean(same_mean) - mu).norm() < 1e-12);

  const Eigen::MatrixXd cov = random_spd(2, rng);
  std::vector<GaussianSummary> same_cov{summary(Eigen::Vector2d(0, 1), cov), summary(Eigen::Vector2d(2, 5), cov),
                                        summary(Eigen::Vector2d(4, 0), cov)};
  CHECK((consensus_mean(same_cov) - Eigen::Vector2d(2, 2)).norm() < 1e-12);
}

TEST_CASE("combine and scaling") {
  const auto within = combine({summary(Eigen::VectorXd::Constant(1, 0.0), m1(1.0)),
                               summary(Eigen::VectorXd::Constant(1, 10.0), m1(4.0))},
                              ConsensusScaling::WithinExperiment);
  CHECK(within.mean(0) == doctest::Approx(2.0));
  CHECK(within.cov(0, 0) == doctest::Approx(2.25));
  CHECK(within.scaling == ConsensusScaling::WithinExperiment);

  const auto single = combine({summary(Eigen::Vector2d(1, 2), Eigen::Matrix2d{{2, 0.3}, {0.3, 1}})},
                              ConsensusScaling::WithinExperiment);
  CHECK((single.mean - Eigen::Vector2d(1, 2)).norm() < 1e-12);
  CHECK((single.cov - Eigen::Matrix2d{{2, 0.3}, {0.3, 1}}).norm() < 1e-8);

  std::vector<GaussianSummary> nine(9, summary(Eigen::VectorXd::Constant(1, 3.9), m1(0.04)));
  const auto across = combine(nine, ConsensusScaling::AcrossExperiments);
  CHECK(across.mean(0) == doctest::Approx(3.9));
  CHECK(across.cov(0, 0) == doctest::Approx(0.04 / 9.0).epsilon(1e-8));

  CHECK(subset_loss_multiplier(ConsensusScaling::WithinExperiment, 9) == 9.0);
  CHECK(subset_loss_multiplier(ConsensusScaling::AcrossExperiments, 9) == 1.0);
  CHECK(error_kind([] { combine({}, ConsensusScaling::WithinExperiment); }) == ErrorKind::Structural);
}

TEST_CASE("combine is exactly permutation invariant") {
  Rng rng(4);
  std::normal_distribution<double> nd;
  std::vector<GaussianSummary> s;
  for (int k = 0; k < 6; ++k) s.push_back(summary(Eigen::Vector3d(nd(rng), nd(rng), nd(rng)), random_spd(3, rng)));
  const auto ref = combine(s, ConsensusScaling::AcrossExperiments);
  std::vector<int> perm{0, 1, 2, 3, 4, 5};
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<GaussianSummary> shuffled;
    for (int i : perm) shuffled.push_back(s[static_cast<std::size_t>(i)]);
    const auto c = combine(shuffled, ConsensusScaling::AcrossExperiments);
    CHECK(c.mean == ref.mean);
    CHECK(c.cov == ref.cov);
    CHECK(c.iterations_used == ref.iterations_used);
  }
}

TEST_CASE("gaussianize") {
  Rng rng(5);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(100000, 2);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
  const auto g = gaussianize(sample_of(z));
  CHECK(g.mean.cwiseAbs().maxCoeff() < 0.02);
  CHECK((g.cov - Eigen::Matrix2d::Identity()).norm() < 0.05);
  CHECK(g.warnings.empty());
  CHECK(g.n_draws == 100000);

  // Moments transform exactly under affine maps.
  const Eigen::Matrix2d A{{2.0, 0.5}, {-1.0, 3.0}};
  const Eigen::Vector2d b(10.0, -4.0);
  const Eigen::MatrixXd y = (z * A.transpose()).rowwise() + b.transpose();
  const auto ga = gaussianize(sample_of(y));
  CHECK((ga.mean - (A * g.mean + b)).norm() < 1e-10);
  CHECK((ga.cov - A * g.cov * A.transpose()).norm() < 1e-9);

  // Unbiased covariance on a tiny hand-checkable sample.
  Eigen::MatrixXd small(100, 1);
  for (int i = 0; i < 100; ++i) small(i, 0) = i % 2;
  CHECK(gaussianize(sample_of(small)).cov(0, 0) == doctest::Approx(0.25 * 100.0 / 99.0));

  // Coordinate subset.
  const auto first = gaussianize(sample_of(z), std::vector<Eigen::Index>{1});
  CHECK(first.mean.size() == 1);
  CHECK(first.mean(0) == g.mean(1));

  Eigen::MatrixXd skewed(5000, 1);
  std::exponential_distribution<double> ex(1.0);
  for (int i = 0; i < 5000; ++i) skewed(i, 0) = ex(rng);
  CHECK_FALSE(gaussianize(sample_of(skewed)).warnings.empty());

  CHECK(error_kind([] { gaussianize(sample_of(Eigen::MatrixXd::Constant(200, 2, 1.0))); }) == ErrorKind::Conditioning);
  CHECK(error_kind([&] { gaussianize(sample_of(z.topRows(99))); }) == ErrorKind::Precision);
}

TEST_CASE("combine of gaussianized location-scale copies follows the scalar oracles") {
  Rng rng(6);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(5000, 1);
  for (auto& v : z.reshaped()) v = nd(rng);
  const auto base = gaussianize(sample_of(z));
  const double m = base.mean(0), sd = std::sqrt(base.cov(0, 0));
  const std::vector<std::pair<double, double>> copies{{1.0, 0.0}, {2.0, 5.0}, {0.5, -3.0}};
  std::vector<GaussianSummary> s;
  double prec = 0.0, weighted = 0.0, sd_mean = 0.0;
  for (auto [a, b] : copies) {
    s.push_back(gaussianize(sample_of((a * z).array() + b)));
    const double var = a * a * sd * sd;
    prec += 1.0 / var;
    weighted += (a * m + b) / var;
    sd_mean += a * sd / 3.0;
  }
  const auto c = combine(s, ConsensusScaling::WithinExperiment);
  CHECK(c.mean(0) == doctest::Approx(weighted / prec).epsilon(1e-10));
  CHECK(c.cov(0, 0) == doctest::Approx(sd_mean * sd_mean).epsilon(1e-8));
}
