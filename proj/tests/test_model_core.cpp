#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "gibbscal/data_io.hpp"
#include "gibbscal/loss.hpp"
#include "gibbscal/prior.hpp"
#include "helpers.hpp"

using namespace gibbscal;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

// Constant-output model, so eta is exactly the given vector.
class FixedOutput final : public ForwardModel {
 public:
  explicit FixedOutput(Eigen::VectorXd out) : out_(std::move(out)) {}
  Eigen::VectorXd eval(const Eigen::VectorXd&, const Eigen::VectorXd&) const override { return out_; }
  std::size_t dim_theta() const override { return 1; }
  std::string name() const override { return "fixed"; }

 private:
  Eigen::VectorXd out_;
};

// Chi-square goodness of fit of `draws` against `cdf` over equiprobable bins.
double chi_square_pvalue(const std::vector<double>& draws, const std::function<double(double)>& quantile, int bins) {
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) edges.push_back(quantile(static_cast<double>(k) / bins));
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : draws) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    counts[static_cast<std::size_t>(it - edges.begin())] += 1.0;
  }
  const double expected = static_cast<double>(draws.size()) / bins;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(bins - 1), stat));
}

}  // namespace

TEST_CASE("l2 loss on hand-computed cases") {
  const Eigen::VectorXd th = vec({0.0});
  {
    ExperimentData d(vec({0, 1}), vec({0, 0}));
    CHECK(l2_loss(d, FixedOutput(vec({1, 1})), th, Quadrature::PlainSum) == doctest::Approx(2.0));
  }
  {
    ExperimentData d(vec({0, 1, 2}), vec({0, 0, 0}));
    CHECK(l2_loss(d, FixedOutput(vec({1, 1, 1})), th, Quadrature::Trapezoid) == doctest::Approx(2.0));
    CHECK(quadrature_weights(d.x(), Quadrature::Trapezoid).isApprox(vec({0.5, 1.0, 0.5})));
  }
  {
    PolynomialModel m(1, true);
    ExperimentData d(vec({1, 2, 3}), vec({0.5, 1.0, 1.5}));
    CHECK(l2_loss(d, m, vec({0.5})) == 0.0);
    CHECK(l2_loss(d, m, vec({0.7})) > 0.0);
  }
  ExperimentData d(vec({0, 1}), vec({0, 0}));
  CHECK(error_kind([&] { l2_loss(d, FixedOutput(vec({1, 1, 1})), th); }) == ErrorKind::Structural);
}

TEST_CASE("Gaussian NLL by direct substitution") {
  PolynomialModel m(0);
  const double two_pi = 2.0 * std::numbers::pi;
  ExperimentData one(vec({0.0, 1.0}).head(2), vec({3.0, 3.0}));
  CHECK(gaussian_nll_loss(one, m, vec({3.0}), 1.0 / two_pi) == doctest::Approx(0.0).epsilon(1e-12));
  ExperimentData two(vec({0, 1}), vec({1, 1}));
  CHECK(gaussian_nll_loss(two, m, vec({0.0}), 1.0) == doctest::Approx(std::log(two_pi) + 1.0));
  CHECK(error_kind([&] { gaussian_nll_loss(two, m, vec({0.0}), 0.0); }) == ErrorKind::Domain);
  CHECK(error_kind([&] { gaussian_nll_loss(two, m, vec({0.0}), -1.0); }) == ErrorKind::Domain);
}

TEST_CASE("profiled Gaussian NLL equals (n/2)(log(2 pi s2hat) + 1)") {
  Rng rng(11);
  std::normal_distribution<double> nd;
  PolynomialModel m(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 5 + rep;
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = nd(rng);
    ExperimentData d(x, y);
    const Eigen::VectorXd th = vec({nd(rng), nd(rng), nd(rng)});
    const Eigen::VectorXd r = y - m.eval(x, th);
    const double s2hat = r.squaredNorm() / n;
    const double expected = 0.5 * n * (std::log(2.0 * std::numbers::pi * s2hat) + 1.0);
    CHECK(gaussian_nll_loss(d, m, th, s2hat) == doctest::Approx(expected).epsilon(1e-10));
    // s2hat is the stationary point: nudging it either way increases the loss.
    CHECK(gaussian_nll_loss(d, m, th, s2hat * 1.01) > gaussian_nll_loss(d, m, th, s2hat));
    CHECK(gaussian_nll_loss(d, m, th, s2hat * 0.99) > gaussian_nll_loss(d, m, th, s2hat));
  }
}

TEST_CASE("argmin of the l2 loss is invariant to positive rescaling") {
  PolynomialModel m(1, true);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(30, 0.1, 3.0);
  Eigen::VectorXd y = (0.65 * x.array() / (1.0 + x.array() / 20.0)).matrix();
  ExperimentData d(x, y);
  auto argmin = [&](double c) {
    double best = 0.0, best_v = INFINITY;
    for (int k = 0; k <= 1000; ++k) {
      const double th = k / 1000.0;
      const double v = c * l2_loss(d, m, vec({th}));
      if (v < best_v) best_v = v, best = th;
    }
    return best;
  };
  const double ref = argmin(1.0);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) CHECK(argmin(c) == ref);
}

TEST_CASE("prior validation and support") {
  CHECK(error_kind([] { validate(Uniform{1.0, 1.0}); }) == ErrorKind::Configuration);
  CHECK(error_kind([] { validate(Normal{0.0, 0.0}); }) == ErrorKind::Configuration);
  CHECK(error_kind([] { validate(InverseGamma{0.0, 1.0}); }) == ErrorKind::Configuration);
  CHECK(error_kind([] { validate(InverseGamma{1.0, -1.0}); }) == ErrorKind::Configuration);

  ParameterPrior p({Uniform{2.9, 4.9}, InverseGamma{2.0, 1.0}});
  CHECK(std::isinf(p.log_density(vec({5.0, 1.0}))));
  CHECK(std::isinf(p.log_density(vec({3.0, -1.0}))));
  CHECK(std::isfinite(p.log_density(vec({3.0, 1.0}))));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) CHECK(p.in_support(p.sample(rng)));

  // Round trip through the sampler's unconstrained coordinates.
  const Eigen::VectorXd th = vec({3.3, 0.2});
  CHECK(p.from_unconstrained(p.to_unconstrained(th)).isApprox(th, 1e-14));
}

TEST_CASE("prior log density matches Boost closed forms") {
  boost::math::normal_distribution<double> n(1.5, 2.0);
  boost::math::inverse_gamma_distribution<double> ig(3.0, 0.5);
  for (double v : {-2.0, 0.0, 1.5, 4.0})
    CHECK(log_density(Normal{1.5, 2.0}, v) == doctest::Approx(std::log(boost::math::pdf(n, v))).epsilon(1e-12));
  for (double v : {0.05, 0.25, 1.0, 3.0})
    CHECK(log_density(InverseGamma{3.0, 0.5}, v) == doctest::Approx(std::log(boost::math::pdf(ig, v))).epsilon(1e-12));
  CHECK(log_density(Uniform{2.0, 6.0}, 3.0) == doctest::Approx(-std::log(4.0)));
}

TEST_CASE("prior samples pass chi-square goodness of fit against the density") {
  const int N = 100000;
  const int bins = 50;
  SUBCASE("normal") {
    Rng rng(101);
    std::vector<double> d(N);
    for (auto& v : d) v = sample(Normal{-1.0, 0.3}, rng);
    boost::math::normal_distribution<double> ref(-1.0, 0.3);
    CHECK(chi_square_pvalue(d, [&](double q) { return boost::math::quantile(ref, q); }, bins) > 0.01);
  }
  SUBCASE("uniform") {
    Rng rng(102);
    std::vector<double> d(N);
    for (auto& v : d) v = sample(Uniform{2.9, 4.9}, rng);
    CHECK(chi_square_pvalue(d, [](double q) { return 2.9 + 2.0 * q; }, bins) > 0.01);
  }
  SUBCASE("inverse gamma") {
    Rng rng(103);
    std::vector<double> d(N);
    for (auto& v : d) v = sample(InverseGamma{2.5, 0.7}, rng);
    boost::math::inverse_gamma_distribution<double> ref(2.5, 0.7);
    CHECK(chi_square_pvalue(d, [&](double q) { return boost::math::quantile(ref, q); }, bins) > 0.01);
  }
}

TEST_CASE("experiment data validation and CSV") {
  CHECK(error_kind([] { ExperimentData(vec({0, 1, 1}), vec({0, 0, 0})); }) == ErrorKind::Data);
  CHECK(error_kind([] { ExperimentData(vec({0, 1}), vec({0, 0, 0})); }) == ErrorKind::Structural);
  CHECK(error_kind([] { parse_experiment_csv("x,z\n0,1\n1,2\n", "e"); }) == ErrorKind::Data);
  CHECK(error_kind([] { parse_experiment_csv("x,y\n0,1\n1,abc\n", "e"); }) == ErrorKind::Data);
  CHECK(error_kind([] { parse_experiment_csv("x,y\n1,1\n0,2\n", "e"); }) == ErrorKind::Data);

  const ExperimentData d = parse_experiment_csv("y,x\n1.5,0\n2.5,0.1\n-3,0.2\n", "e");
  CHECK(d.x().isApprox(vec({0, 0.1, 0.2})));
  CHECK(d.y().isApprox(vec({1.5, 2.5, -3})));
  const ExperimentData back = parse_experiment_csv(experiment_csv(d), "e");
  CHECK(back.x() == d.x());
  CHECK(back.y() == d.y());
}
