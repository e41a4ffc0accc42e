#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>

#include "gibbscal/gibbs_sampler.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace gibbscal;

namespace {

ExperimentData linear_data(double slope, double noise_sd, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, noise_sd);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, 0.1, 1.0);
  Eigen::VectorXd y = slope * x;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += nd(rng);
  return ExperimentData(x, y);
}

std::vector<double> column(const PosteriorSample& s, Eigen::Index j, int thin = 1) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < s.size(); i += thin) out.push_back(s.draws(i, j));
  return out;
}

PosteriorSample fake_sample(const std::vector<double>& v) {
  PosteriorSample s;
  s.draws.resize(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) s.draws(static_cast<Eigen::Index>(i), 0) = v[i];
  s.names = {"theta"};
  return s;
}

}  // namespace

TEST_CASE("w = 0 recovers the prior (two-sample KS)") {
  const auto model = std::make_shared<PolynomialModel>(1, true);
  const ParameterPrior prior({Normal{1.0, 0.5}, InverseGamma{3.0, 1.0}});
  GibbsPosteriorSpec spec{model, linear_data(0.8, 0.1, 20, 1), GaussianNllLoss{}, prior, 0.0};
  SamplerConfig cfg;
  cfg.n_iter = 60000;
  cfg.n_burn = 10000;
  cfg.seed = 5;
  const PosteriorSample s = sample_gibbs(spec, cfg);
  Rng rng(6);
  std::vector<double> ref_theta, ref_s2;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd d = prior.sample(rng);
    ref_theta.push_back(d(0));
    ref_s2.push_back(d(1));
  }
  CHECK(oracle::ks_two_sample_pvalue(column(s, 0, 25), ref_theta) > 0.01);
  CHECK(oracle::ks_two_sample_pvalue(column(s, 1, 25), ref_s2) > 0.01);
}

TEST_CASE("w = 1 Gaussian NLL matches the semi-analytic linear posterior") {
  const auto model = std::make_shared<PolynomialModel>(1, true);
  const ExperimentData data = linear_data(0.8, 0.1, 20, 2);
  GibbsPosteriorSpec spec{model, data, GaussianNllLoss{}, ParameterPrior({Normal{0.0, 1.0}, InverseGamma{2.0, 0.02}}),
                          1.0};
  SamplerConfig cfg;
  cfg.n_iter = 60000;
  cfg.n_burn = 10000;
  cfg.seed = 9;
  const PosteriorSample s = sample_gibbs(spec, cfg);
  const auto ref = oracle::linear_nig_moments(data.x(), data.y(), 0.0, 1.0, 2.0, 0.02);

  const auto theta = column(s, 0);
  const auto m = oracle::batch_means(theta);
  CHECK(std::abs(m.mean - ref.theta_mean) < 3.0 * m.se);
  std::vector<double> sq;
  for (double t : theta) sq.push_back((t - ref.theta_mean) * (t - ref.theta_mean));
  const auto v = oracle::batch_means(sq);
  CHECK(std::abs(v.mean - ref.theta_sd * ref.theta_sd) < 3.0 * v.se);
  const auto s2 = oracle::batch_means(column(s, 1));
  CHECK(std::abs(s2.mean - ref.sigma2_mean) < 3.0 * s2.se);
  CHECK(s.acceptance_rate > 0.1);
  CHECK(s.acceptance_rate < 0.6);
}

TEST_CASE("l2 loss at w = 1/(2 s2) is the conjugate known-variance posterior") {
  const auto model = std::make_shared<PolynomialModel>(1, true);
  const ExperimentData data = linear_data(0.8, 0.1, 20, 3);
  const double s2 = 0.01, m0 = 0.0, v0 = 1.0;
  GibbsPosteriorSpec spec{model, data, L2Loss{}, ParameterPrior({Normal{m0, std::sqrt(v0)}}), 0.5 / s2};
  SamplerConfig cfg;
  cfg.n_iter = 50000;
  cfg.n_burn = 5000;
  cfg.seed = 10;
  const PosteriorSample s = sample_gibbs(spec, cfg);
  const double prec = data.x().squaredNorm() / s2 + 1.0 / v0;
  const double mean = (data.x().dot(data.y()) / s2 + m0 / v0) / prec;
  const auto m = oracle::batch_means(column(s, 0));
  CHECK(std::abs(m.mean - mean) < 3.0 * m.se);
  std::vector<double> sq;
  for (double t : column(s, 0)) sq.push_back((t - mean) * (t - mean));
  const auto v = oracle::batch_means(sq);
  CHECK(std::abs(v.mean - 1.0 / prec) < 3.0 * v.se);
}

TEST_CASE("tempering shrinks the posterior") {
  const auto model = std::make_shared<PolynomialModel>(1, true);
  const ExperimentData data = linear_data(0.8, 0.1, 20, 4);
  auto sd_at = [&](double w) {
    GibbsPosteriorSpec spec{model, data, L2Loss{}, ParameterPrior({Normal{0.0, 1.0}}), w};
    SamplerConfig cfg;
    cfg.n_iter = 30000;
    cfg.n_burn = 5000;
    cfg.seed = 12;
    const auto th = column(sample_gibbs(spec, cfg), 0);
    double mean = 0.0;
    for (double t : th) mean += t;
    mean /= static_cast<double>(th.size());
    std::vector<double> sq;
    for (double t : th) sq.push_back((t - mean) * (t - mean));
    return oracle::batch_means(sq);
  };
  const auto small = sd_at(1.0);
  const auto large = sd_at(10.0);
  CHECK(large.mean <= small.mean + 3.0 * (small.se + large.se));
  CHECK(large.mean < small.mean);
}

TEST_CASE("sampler determinism and support") {
  const auto model = std::make_shared<PolynomialModel>(1, true);
  // The unconstrained mode sits outside the Uniform support, so the chain
  // presses against the boundary.
  GibbsPosteriorSpec spec{model, linear_data(0.8, 0.1, 20, 5), L2Loss{}, ParameterPrior({Uniform{0.0, 0.75}}), 50.0};
  SamplerConfig cfg;
  cfg.n_iter = 5000;
  cfg.n_burn = 1000;
  cfg.seed = 77;
  const PosteriorSample a = sample_gibbs(spec, cfg);
  const PosteriorSample b = sample_gibbs(spec, cfg);
  CHECK(a.draws == b.draws);
  CHECK(a.accepted == b.accepted);
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::isfinite(spec.prior.log_density(a.draws.row(i).transpose())));

  // Acceptance rate from the transcript.
  double acc = 0.0;
  for (bool v : a.accepted) acc += v;
  CHECK(a.acceptance_rate == doctest::Approx(acc / static_cast<double>(a.accepted.size())));
  CHECK(a.size() == 4000);

  cfg.seed = 78;
  CHECK(sample_gibbs(spec, cfg).draws != a.draws);
}

TEST_CASE("sampler error paths") {
  const auto model = std::make_shared<PolynomialModel>(1, true);
  const ExperimentData data = linear_data(0.8, 0.1, 20, 6);
  GibbsPosteriorSpec spec{model, data, L2Loss{}, ParameterPrior({Normal{0.0, 1.0}}), 1.0};
  SamplerConfig cfg;
  cfg.n_iter = 100;
  cfg.n_burn = 100;
  CHECK(error_kind([&] { sample_gibbs(spec, cfg); }) == ErrorKind::Configuration);
  cfg.n_iter = 1000;
  cfg.step_sizes = {-1.0};
  CHECK(error_kind([&] { sample_gibbs(spec, cfg); }) == ErrorKind::Configuration);
  cfg.step_sizes.clear();
  spec.w = -1.0;
  CHECK(error_kind([&] { sample_gibbs(spec, cfg); }) == ErrorKind::Configuration);

  const auto nan_model = std::make_shared<FunctionModel>("nan", 1, [](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Constant(x.size(), std::numeric_limits<double>::quiet_NaN()).eval();
  });
  GibbsPosteriorSpec bad{nan_model, data, L2Loss{}, ParameterPrior({Normal{0.0, 1.0}}), 1.0};
  CHECK(error_kind([&] { sample_gibbs(bad, cfg); }) == ErrorKind::Initialization);
}

TEST_CASE("credible interval conventions") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto ci = credible_interval(fake_sample(v), 0.10);
  CHECK(ci.lo(0) == doctest::Approx(5.95));
  CHECK(ci.hi(0) == doctest::Approx(95.05));

  const auto flat = credible_interval(fake_sample(std::vector<double>(200, 0.3)), 0.05);
  CHECK(flat.lo(0) == 0.3);
  CHECK(flat.hi(0) == 0.3);

  Rng rng(8);
  std::normal_distribution<double> nd;
  std::vector<double> z(100000);
  for (auto& d : z) d = nd(rng);
  const auto zci = credible_interval(fake_sample(z), 0.05);
  const double q = boost::math::quantile(boost::math::normal(), 0.975);
  CHECK(zci.lo(0) == doctest::Approx(-q).epsilon(0.02));
  CHECK(zci.hi(0) == doctest::Approx(q).epsilon(0.02));

  // Equal-tailed intervals contain the median at every level.
  const auto med = posterior_median(fake_sample(z))(0);
  for (double a : {0.01, 0.1, 0.5, 0.9, 0.99}) {
    const auto c = credible_interval(fake_sample(z), a);
    CHECK(c.lo(0) <= med);
    CHECK(med <= c.hi(0));
  }

  CHECK(error_kind([] { credible_interval(fake_sample(std::vector<double>(99, 1.0)), 0.1); }) == ErrorKind::Precision);
  CHECK(error_kind([&] { credible_interval(fake_sample(v), 1.5); }) == ErrorKind::Domain);
  CHECK(quantile_type7({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("MAP estimates") {
  const auto model = std::make_shared<PolynomialModel>(1, true);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(10, 0.1, 1.0);
  ExperimentData exact(x, 0.5 * x);
  GibbsPosteriorSpec spec{model, exact, L2Loss{}, ParameterPrior({Uniform{-10.0, 10.0}}), 1.0};
  CHECK(map_estimate(spec)(0) == doctest::Approx(0.5).epsilon(1e-6));

  // Constant model theta: loss 2 (theta - 2)^2 on two points.
  const auto constant = std::make_shared<PolynomialModel>(0);
  GibbsPosteriorSpec quad{constant, ExperimentData(Eigen::Vector2d(0, 1), Eigen::Vector2d(2, 2)), L2Loss{},
                          ParameterPrior({Uniform{-10.0, 10.0}}), 1.0};
  CHECK(map_estimate(quad)(0) == doctest::Approx(2.0).epsilon(1e-6));

  // Laplace interval of a Gaussian target is the exact Gaussian interval.
  const double s2 = 0.01;
  const ExperimentData data = linear_data(0.8, 0.1, 20, 7);
  GibbsPosteriorSpec g{model, data, L2Loss{}, ParameterPrior({Normal{0.0, 1.0}}), 0.5 / s2};
  const double prec = data.x().squaredNorm() / s2 + 1.0;
  const double mean = data.x().dot(data.y()) / s2 / prec;
  const double z = boost::math::quantile(boost::math::normal(), 0.95);
  const auto ci = laplace_interval(g, 0.1);
  CHECK(ci.lo(0) == doctest::Approx(mean - z / std::sqrt(prec)).epsilon(1e-4));
  CHECK(ci.hi(0) == doctest::Approx(mean + z / std::sqrt(prec)).epsilon(1e-4));
}
